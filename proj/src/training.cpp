#include "leofl/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "leofl/errors.hpp"

namespace leofl::learn {

void validate(const TrainConfig& cfg) {
  if (!std::isfinite(cfg.learning_rate) || cfg.learning_rate < 0.0)
    throw std::invalid_argument("learning rate must be non-negative and finite");
  if (!std::isfinite(cfg.prox_weight) || cfg.prox_weight < 0.0)
    throw std::invalid_argument("proximal weight must be non-negative");
  if (cfg.batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
  if (cfg.local_epochs < 1) throw std::invalid_argument("local epochs must be >= 1");
}

namespace {

void sgd_pass(const SoftmaxModel& model, ParamVector& params,
              const ParamVector& anchor, const Dataset& data,
              const TrainConfig& cfg, std::mt19937_64& rng,
              std::vector<std::int32_t>& order, std::vector<double>& grad) {
  std::shuffle(order.begin(), order.end(), rng);
  const std::int64_t n = data.size();
  const std::int64_t dim = model.param_dim();
  for (std::int64_t start = 0; start < n; start += cfg.batch_size) {
    const std::int64_t len = std::min<std::int64_t>(cfg.batch_size, n - start);
    const std::span<const std::int32_t> batch(order.data() + start,
                                              static_cast<std::size_t>(len));
    surrogate_gradient(model, params, anchor, data, batch, cfg.prox_weight,
                       grad.data());
    for (std::int64_t j = 0; j < dim; ++j)
      params.values[static_cast<std::size_t>(j)] -=
          cfg.learning_rate * grad[static_cast<std::size_t>(j)];
  }
}

void check_finite(const ParamVector& params) {
  for (const double v : params.values)
    if (!std::isfinite(v))
      throw DivergenceError("training diverged: non-finite model parameters");
}

}  // namespace

ParamVector local_train(const SoftmaxModel& model, const ParamVector& received,
                        std::int64_t epoch_tag, const Dataset& data,
                        const TrainConfig& cfg, std::mt19937_64& rng) {
  validate(cfg);
  validate(data);
  ParamVector params = received;
  params.source_epoch = epoch_tag;

  std::vector<std::int32_t> order(static_cast<std::size_t>(data.size()));
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> grad(static_cast<std::size_t>(model.param_dim()));
  for (std::int32_t e = 0; e < cfg.local_epochs; ++e)
    sgd_pass(model, params, received, data, cfg, rng, order, grad);

  check_finite(params);
  return params;
}

ParamVector local_train(const SoftmaxModel& model, const ParamVector& received,
                        std::int64_t epoch_tag, const Dataset& data,
                        const TrainConfig& cfg) {
  std::mt19937_64 rng(cfg.rng_seed);
  return local_train(model, received, epoch_tag, data, cfg, rng);
}

ParamVector train_centralized(
    const SoftmaxModel& model, const Dataset& data, std::int32_t epochs,
    const TrainConfig& cfg,
    const std::function<void(std::int32_t, const ParamVector&)>& per_epoch) {
  validate(cfg);
  validate(data);
  if (epochs < 0) throw std::invalid_argument("epoch count must be >= 0");

  ParamVector params = model.zero_params();
  std::mt19937_64 rng(cfg.rng_seed);
  std::vector<std::int32_t> order(static_cast<std::size_t>(data.size()));
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> grad(static_cast<std::size_t>(model.param_dim()));
  for (std::int32_t e = 0; e < epochs; ++e) {
    // No proximal pull when training centrally: anchor at the current
    // parameters so the term vanishes.
    sgd_pass(model, params, params, data, cfg, rng, order, grad);
    check_finite(params);
    if (per_epoch) per_epoch(e + 1, params);
  }
  return params;
}

}  // namespace leofl::learn
