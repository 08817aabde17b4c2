#include "leofl/kernels.hpp"

#include <cmath>
#include <cstring>
#include <limits>
#include <stdexcept>
#include <vector>

namespace leofl::kernels {

namespace {

constexpr std::int64_t kParallelCutoff = 128;  // below this, loops run inline

// Writes softmax probabilities for one sample and returns its cross-entropy
// loss against `label`.
double probs_and_loss(const double* params, const double* x, std::int64_t m,
                      std::int32_t classes, std::int32_t label, double* probs) {
  const double* bias = params + static_cast<std::int64_t>(classes) * m;
  double zmax = -std::numeric_limits<double>::infinity();
  for (std::int32_t c = 0; c < classes; ++c) {
    const double* w = params + static_cast<std::int64_t>(c) * m;
    double z = bias[c];
    for (std::int64_t f = 0; f < m; ++f) z += w[f] * x[f];
    probs[c] = z;
    if (z > zmax) zmax = z;
  }
  double denom = 0.0;
  for (std::int32_t c = 0; c < classes; ++c) {
    probs[c] = std::exp(probs[c] - zmax);
    denom += probs[c];
  }
  const double inv = 1.0 / denom;
  for (std::int32_t c = 0; c < classes; ++c) probs[c] *= inv;
  const double p = probs[label];
  return -std::log(p > 1e-300 ? p : 1e-300);
}

void check_batch(std::span<const std::int32_t> idx) {
  if (idx.empty()) throw std::invalid_argument("softmax kernel: empty batch");
}

}  // namespace

void softmax_probs(const double* params, const double* sample,
                   std::int64_t feature_dim, std::int32_t classes,
                   double* probs_out) {
  probs_and_loss(params, sample, feature_dim, classes, 0, probs_out);
}

namespace serial {

double softmax_loss(const double* params, const double* features,
                    const std::int32_t* labels, std::span<const std::int32_t> idx,
                    std::int64_t m, std::int32_t classes) {
  check_batch(idx);
  std::vector<double> probs(static_cast<std::size_t>(classes));
  double sum = 0.0;
  for (const std::int32_t row : idx)
    sum += probs_and_loss(params, features + static_cast<std::int64_t>(row) * m,
                          m, classes, labels[row], probs.data());
  return sum / static_cast<double>(idx.size());
}

double softmax_grad(const double* params, const double* features,
                    const std::int32_t* labels, std::span<const std::int32_t> idx,
                    std::int64_t m, std::int32_t classes, double* grad_out) {
  check_batch(idx);
  const std::int64_t dim = (m + 1) * classes;
  std::memset(grad_out, 0, static_cast<std::size_t>(dim) * sizeof(double));
  std::vector<double> probs(static_cast<std::size_t>(classes));
  double* gbias = grad_out + static_cast<std::int64_t>(classes) * m;
  double loss_sum = 0.0;
  for (const std::int32_t row : idx) {
    const double* x = features + static_cast<std::int64_t>(row) * m;
    loss_sum += probs_and_loss(params, x, m, classes, labels[row], probs.data());
    for (std::int32_t c = 0; c < classes; ++c) {
      const double delta = probs[c] - (c == labels[row] ? 1.0 : 0.0);
      double* gw = grad_out + static_cast<std::int64_t>(c) * m;
      for (std::int64_t f = 0; f < m; ++f) gw[f] += delta * x[f];
      gbias[c] += delta;
    }
  }
  const double inv = 1.0 / static_cast<double>(idx.size());
  for (std::int64_t j = 0; j < dim; ++j) grad_out[j] *= inv;
  return loss_sum * inv;
}

EvalResult softmax_eval(const double* params, const double* features,
                        const std::int32_t* labels, std::int64_t n,
                        std::int64_t m, std::int32_t classes) {
  if (n <= 0) throw std::invalid_argument("softmax_eval: empty sample set");
  std::vector<double> probs(static_cast<std::size_t>(classes));
  std::int64_t correct = 0;
  double loss_sum = 0.0;
  for (std::int64_t s = 0; s < n; ++s) {
    const double* x = features + s * m;
    loss_sum += probs_and_loss(params, x, m, classes, labels[s], probs.data());
    std::int32_t best = 0;
    for (std::int32_t c = 1; c < classes; ++c)
      if (probs[c] > probs[best]) best = c;
    if (best == labels[s]) ++correct;
  }
  return {static_cast<double>(correct) / static_cast<double>(n),
          loss_sum / static_cast<double>(n)};
}

}  // namespace serial

double softmax_loss(const double* params, const double* features,
                    const std::int32_t* labels, std::span<const std::int32_t> idx,
                    std::int64_t m, std::int32_t classes) {
  check_batch(idx);
  const std::int64_t n = static_cast<std::int64_t>(idx.size());
  if (n < kParallelCutoff)
    return serial::softmax_loss(params, features, labels, idx, m, classes);

  std::vector<double> losses(static_cast<std::size_t>(n));
#ifdef _OPENMP
#pragma omp parallel
#endif
  {
    std::vector<double> probs(static_cast<std::size_t>(classes));
#ifdef _OPENMP
#pragma omp for schedule(static)
#endif
    for (std::int64_t s = 0; s < n; ++s) {
      const std::int32_t row = idx[static_cast<std::size_t>(s)];
      losses[static_cast<std::size_t>(s)] =
          probs_and_loss(params, features + static_cast<std::int64_t>(row) * m,
                         m, classes, labels[row], probs.data());
    }
  }
  // Ordered reduction: identical result for any thread count.
  double sum = 0.0;
  for (std::int64_t s = 0; s < n; ++s) sum += losses[static_cast<std::size_t>(s)];
  return sum / static_cast<double>(n);
}

double softmax_grad(const double* params, const double* features,
                    const std::int32_t* labels, std::span<const std::int32_t> idx,
                    std::int64_t m, std::int32_t classes, double* grad_out) {
  check_batch(idx);
  const std::int64_t n = static_cast<std::int64_t>(idx.size());
  const std::int64_t dim = (m + 1) * classes;
  if (n <= kGradChunk)
    return serial::softmax_grad(params, features, labels, idx, m, classes, grad_out);

  // Fixed-size chunks keep the accumulation order independent of the thread
  // count: each chunk is summed sample-major by one thread, chunk partials
  // are then combined in ascending chunk order.
  const std::int64_t chunks = (n + kGradChunk - 1) / kGradChunk;
  std::vector<double> partial(static_cast<std::size_t>(chunks * dim), 0.0);
  std::vector<double> chunk_loss(static_cast<std::size_t>(chunks), 0.0);

#ifdef _OPENMP
#pragma omp parallel
#endif
  {
    std::vector<double> probs(static_cast<std::size_t>(classes));
#ifdef _OPENMP
#pragma omp for schedule(static)
#endif
    for (std::int64_t k = 0; k < chunks; ++k) {
      double* grad = partial.data() + k * dim;
      double* gbias = grad + static_cast<std::int64_t>(classes) * m;
      double loss = 0.0;
      const std::int64_t lo = k * kGradChunk;
      const std::int64_t hi = std::min(n, lo + kGradChunk);
      for (std::int64_t s = lo; s < hi; ++s) {
        const std::int32_t row = idx[static_cast<std::size_t>(s)];
        const double* x = features + static_cast<std::int64_t>(row) * m;
        loss += probs_and_loss(params, x, m, classes, labels[row], probs.data());
        for (std::int32_t c = 0; c < classes; ++c) {
          const double delta = probs[c] - (c == labels[row] ? 1.0 : 0.0);
          double* gw = grad + static_cast<std::int64_t>(c) * m;
          for (std::int64_t f = 0; f < m; ++f) gw[f] += delta * x[f];
          gbias[c] += delta;
        }
      }
      chunk_loss[static_cast<std::size_t>(k)] = loss;
    }
  }

  const double inv = 1.0 / static_cast<double>(n);
  for (std::int64_t j = 0; j < dim; ++j) {
    double acc = 0.0;
    for (std::int64_t k = 0; k < chunks; ++k) acc += partial[k * dim + j];
    grad_out[j] = acc * inv;
  }
  double loss_sum = 0.0;
  for (std::int64_t k = 0; k < chunks; ++k)
    loss_sum += chunk_loss[static_cast<std::size_t>(k)];
  return loss_sum * inv;
}

EvalResult softmax_eval(const double* params, const double* features,
                        const std::int32_t* labels, std::int64_t n,
                        std::int64_t m, std::int32_t classes) {
  if (n <= 0) throw std::invalid_argument("softmax_eval: empty sample set");
  if (n < kParallelCutoff)
    return serial::softmax_eval(params, features, labels, n, m, classes);

  std::vector<double> losses(static_cast<std::size_t>(n));
  std::vector<unsigned char> hit(static_cast<std::size_t>(n));
#ifdef _OPENMP
#pragma omp parallel
#endif
  {
    std::vector<double> probs(static_cast<std::size_t>(classes));
#ifdef _OPENMP
#pragma omp for schedule(static)
#endif
    for (std::int64_t s = 0; s < n; ++s) {
      const double* x = features + s * m;
      losses[static_cast<std::size_t>(s)] =
          probs_and_loss(params, x, m, classes, labels[s], probs.data());
      std::int32_t best = 0;
      for (std::int32_t c = 1; c < classes; ++c)
        if (probs[c] > probs[best]) best = c;
      hit[static_cast<std::size_t>(s)] = best == labels[s] ? 1 : 0;
    }
  }
  std::int64_t correct = 0;
  double loss_sum = 0.0;
  for (std::int64_t s = 0; s < n; ++s) {
    correct += hit[static_cast<std::size_t>(s)];
    loss_sum += losses[static_cast<std::size_t>(s)];
  }
  return {static_cast<double>(correct) / static_cast<double>(n),
          loss_sum / static_cast<double>(n)};
}

}  // namespace leofl::kernels
