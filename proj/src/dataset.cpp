#include "leofl/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>

#include "leofl/errors.hpp"

namespace leofl::learn {

void validate(const Dataset& data) {
  if (data.size() <= 0) throw DataError("dataset is empty");
  if (data.feature_dim <= 0) throw DataError("dataset has no features");
  if (data.class_count <= 0) throw DataError("dataset has no classes");
  if (static_cast<std::int64_t>(data.features.size()) !=
      data.size() * data.feature_dim)
    throw DataError("dataset feature matrix size mismatch");
  for (const std::int32_t label : data.labels)
    if (label < 0 || label >= data.class_count)
      throw DataError("dataset label out of range");
}

namespace {

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;

std::uint32_t read_be32(std::ifstream& in, const std::string& path) {
  unsigned char buf[4];
  if (!in.read(reinterpret_cast<char*>(buf), 4))
    throw DataError(path + ": truncated header");
  return (static_cast<std::uint32_t>(buf[0]) << 24) |
         (static_cast<std::uint32_t>(buf[1]) << 16) |
         (static_cast<std::uint32_t>(buf[2]) << 8) |
         static_cast<std::uint32_t>(buf[3]);
}

}  // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path,
                 std::int32_t class_count) {
  std::ifstream images(images_path, std::ios::binary);
  if (!images) throw DataError(images_path + ": cannot open");
  std::ifstream labels(labels_path, std::ios::binary);
  if (!labels) throw DataError(labels_path + ": cannot open");

  const std::uint32_t im_magic = read_be32(images, images_path);
  if (im_magic != kImagesMagic) {
    char msg[96];
    std::snprintf(msg, sizeof msg, "%s: bad magic number 0x%08x (expected 0x%08x)",
                  images_path.c_str(), im_magic, kImagesMagic);
    throw DataError(msg);
  }
  const std::uint32_t n_images = read_be32(images, images_path);
  const std::uint32_t rows = read_be32(images, images_path);
  const std::uint32_t cols = read_be32(images, images_path);

  const std::uint32_t lb_magic = read_be32(labels, labels_path);
  if (lb_magic != kLabelsMagic) {
    char msg[96];
    std::snprintf(msg, sizeof msg, "%s: bad magic number 0x%08x (expected 0x%08x)",
                  labels_path.c_str(), lb_magic, kLabelsMagic);
    throw DataError(msg);
  }
  const std::uint32_t n_labels = read_be32(labels, labels_path);
  if (n_images != n_labels)
    throw DataError("image count " + std::to_string(n_images) +
                    " does not match label count " + std::to_string(n_labels));
  if (n_images == 0) throw DataError(images_path + ": no samples");

  Dataset data;
  data.feature_dim = static_cast<std::int64_t>(rows) * cols;
  data.class_count = class_count;
  data.features.resize(static_cast<std::size_t>(n_images) *
                       static_cast<std::size_t>(data.feature_dim));
  data.labels.resize(n_images);

  std::vector<unsigned char> buf(static_cast<std::size_t>(data.feature_dim));
  for (std::uint32_t i = 0; i < n_images; ++i) {
    if (!images.read(reinterpret_cast<char*>(buf.data()),
                     static_cast<std::streamsize>(buf.size())))
      throw DataError(images_path + ": truncated image data at sample " +
                      std::to_string(i));
    double* out = data.features.data() +
                  static_cast<std::size_t>(i) * static_cast<std::size_t>(data.feature_dim);
    for (std::int64_t f = 0; f < data.feature_dim; ++f)
      out[f] = buf[static_cast<std::size_t>(f)] / 255.0;
  }
  std::vector<unsigned char> lbuf(n_labels);
  if (!labels.read(reinterpret_cast<char*>(lbuf.data()),
                   static_cast<std::streamsize>(lbuf.size())))
    throw DataError(labels_path + ": truncated label data");
  for (std::uint32_t i = 0; i < n_labels; ++i) {
    if (lbuf[i] >= class_count)
      throw DataError(labels_path + ": label value " + std::to_string(+lbuf[i]) +
                      " out of range [0, " + std::to_string(class_count) + ")");
    data.labels[i] = lbuf[i];
  }
  return data;
}

Dataset synth_dataset(std::int32_t classes, std::int64_t per_class,
                      std::int64_t dim, std::uint64_t seed, double separation) {
  if (classes < 1 || per_class < 1 || dim < 1)
    throw std::invalid_argument("synth_dataset: all counts must be >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> unit(0.0, 1.0);

  std::vector<double> centers(static_cast<std::size_t>(classes) *
                              static_cast<std::size_t>(dim));
  for (double& v : centers) v = separation * unit(rng);

  Dataset data;
  data.feature_dim = dim;
  data.class_count = classes;
  const std::int64_t n = static_cast<std::int64_t>(classes) * per_class;
  data.features.resize(static_cast<std::size_t>(n * dim));
  data.labels.resize(static_cast<std::size_t>(n));
  std::int64_t s = 0;
  for (std::int32_t c = 0; c < classes; ++c) {
    const double* center = centers.data() + static_cast<std::size_t>(c) * dim;
    for (std::int64_t k = 0; k < per_class; ++k, ++s) {
      double* out = data.features.data() + static_cast<std::size_t>(s * dim);
      for (std::int64_t f = 0; f < dim; ++f) out[f] = center[f] + unit(rng);
      data.labels[static_cast<std::size_t>(s)] = c;
    }
  }
  return data;
}

namespace {

Dataset gather(const Dataset& data, const std::vector<std::int64_t>& rows) {
  Dataset out;
  out.feature_dim = data.feature_dim;
  out.class_count = data.class_count;
  out.features.resize(rows.size() * static_cast<std::size_t>(data.feature_dim));
  out.labels.resize(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double* src = data.row(rows[i]);
    std::copy(src, src + data.feature_dim,
              out.features.data() + i * static_cast<std::size_t>(data.feature_dim));
    out.labels[i] = data.labels[static_cast<std::size_t>(rows[i])];
  }
  return out;
}

}  // namespace

std::map<int, Dataset> partition(const Dataset& data,
                                 const std::vector<std::pair<int, int>>& satellites,
                                 const PartitionSpec& spec) {
  validate(data);
  if (satellites.empty())
    throw std::invalid_argument("partition: no satellites");

  // Canonical order by satellite id so the partition does not depend on how
  // the caller assembled the list.
  std::vector<std::pair<int, int>> sats = satellites;
  std::sort(sats.begin(), sats.end());
  for (std::size_t i = 1; i < sats.size(); ++i)
    if (sats[i].first == sats[i - 1].first)
      throw std::invalid_argument("partition: duplicate satellite id");

  std::mt19937_64 rng(spec.rng_seed);
  std::map<int, Dataset> shards;

  if (spec.mode == PartitionMode::kIid) {
    std::vector<std::int64_t> order(static_cast<std::size_t>(data.size()));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    const std::int64_t per_sat = data.size() / static_cast<std::int64_t>(sats.size());
    if (per_sat == 0)
      throw DataError("partition: fewer samples than satellites");
    std::int64_t next = 0;
    for (const auto& [id, shell] : sats) {
      std::vector<std::int64_t> rows(order.begin() + next,
                                     order.begin() + next + per_sat);
      next += per_sat;
      shards.emplace(id, gather(data, rows));
    }
    return shards;
  }

  // CLASS_SPLIT: validate that the shell class sets cover all classes
  // disjointly, then deal each shell's sample pool to its satellites.
  std::map<int, int> shell_sat_count;
  for (const auto& [id, shell] : sats) shell_sat_count[shell]++;
  std::vector<int> class_owner(static_cast<std::size_t>(data.class_count), -1);
  for (const auto& [shell, classes] : spec.shell_classes) {
    if (!shell_sat_count.count(shell))
      throw ConfigError("partition: class assignment names shell " +
                        std::to_string(shell) + " with no satellites");
    for (const std::int32_t c : classes) {
      if (c < 0 || c >= data.class_count)
        throw ConfigError("partition: class " + std::to_string(c) + " out of range");
      if (class_owner[static_cast<std::size_t>(c)] != -1)
        throw ConfigError("partition: class " + std::to_string(c) +
                          " assigned to two shells");
      class_owner[static_cast<std::size_t>(c)] = shell;
    }
  }
  for (std::int32_t c = 0; c < data.class_count; ++c)
    if (class_owner[static_cast<std::size_t>(c)] == -1)
      throw ConfigError("partition: class " + std::to_string(c) +
                        " not assigned to any shell");

  std::map<int, std::vector<std::int64_t>> pool;
  for (std::int64_t i = 0; i < data.size(); ++i)
    pool[class_owner[static_cast<std::size_t>(data.labels[static_cast<std::size_t>(i)])]]
        .push_back(i);

  // Equal shard sizes across the whole constellation, not just per shell.
  std::int64_t per_sat = data.size();
  for (const auto& [shell, count] : shell_sat_count) {
    auto it = pool.find(shell);
    const std::int64_t avail = it == pool.end() ? 0 : static_cast<std::int64_t>(it->second.size());
    per_sat = std::min(per_sat, avail / count);
  }
  if (per_sat == 0)
    throw DataError("partition: a shell has too few samples for its satellites");

  for (auto& [shell, rows] : pool) std::shuffle(rows.begin(), rows.end(), rng);

  std::map<int, std::int64_t> next;
  for (const auto& [id, shell] : sats) {
    auto& rows = pool[shell];
    std::int64_t& cursor = next[shell];
    std::vector<std::int64_t> take(rows.begin() + cursor,
                                   rows.begin() + cursor + per_sat);
    cursor += per_sat;
    shards.emplace(id, gather(data, take));
  }
  return shards;
}

}  // namespace leofl::learn
