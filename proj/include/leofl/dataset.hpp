#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace leofl::learn {

/// Dense sample matrix with integer class labels. Features are stored
/// row-major, one sample per row.
struct Dataset {
  std::vector<double> features;     // size() * feature_dim, row-major
  std::vector<std::int32_t> labels; // one entry per sample
  std::int64_t feature_dim = 0;
  std::int32_t class_count = 0;

  std::int64_t size() const { return static_cast<std::int64_t>(labels.size()); }
  const double* row(std::int64_t i) const { return features.data() + i * feature_dim; }
};

void validate(const Dataset& data);

/// Loads an IDX image/label file pair (big-endian headers, magic 0x00000803
/// for images and 0x00000801 for labels). Pixels are scaled to [0, 1] and
/// images flattened to rows*cols features. Labels must lie in
/// [0, class_count).
Dataset load_idx(const std::string& images_path, const std::string& labels_path,
                 std::int32_t class_count = 10);

/// Deterministic Gaussian class blobs: `classes` cluster centers drawn from
/// seed, `per_class` unit-variance samples around each. `separation` scales
/// the center spread; the default keeps classes linearly separable with
/// high probability.
Dataset synth_dataset(std::int32_t classes, std::int64_t per_class,
                      std::int64_t dim, std::uint64_t seed,
                      double separation = 3.0);

enum class PartitionMode { kIid, kClassSplit };

struct PartitionSpec {
  PartitionMode mode = PartitionMode::kIid;
  // CLASS_SPLIT only: which label classes each shell holds. Must cover all
  // classes disjointly.
  std::map<int, std::set<std::int32_t>> shell_classes;
  std::uint64_t rng_seed = 0;
};

/// Splits `data` over satellites (id, shell_id). All shards get exactly the
/// same sample count; the remainder is dropped. Under CLASS_SPLIT every
/// shard only contains labels from its shell's class set.
std::map<int, Dataset> partition(const Dataset& data,
                                 const std::vector<std::pair<int, int>>& satellites,
                                 const PartitionSpec& spec);

}  // namespace leofl::learn
