#include "leofl/model.hpp"

#include <numeric>
#include <stdexcept>
#include <string>

namespace leofl::learn {

namespace {

void check_dims(const SoftmaxModel& model, const ParamVector& params,
                const Dataset& data) {
  if (static_cast<std::int64_t>(params.values.size()) != model.param_dim())
    throw std::invalid_argument("parameter vector has dimension " +
                                std::to_string(params.values.size()) +
                                ", model expects " +
                                std::to_string(model.param_dim()));
  if (data.feature_dim != model.feature_dim || data.class_count != model.class_count)
    throw std::invalid_argument("dataset shape does not match the model");
}

std::vector<std::int32_t> all_rows(const Dataset& data) {
  std::vector<std::int32_t> idx(static_cast<std::size_t>(data.size()));
  std::iota(idx.begin(), idx.end(), 0);
  return idx;
}

}  // namespace

SoftmaxModel model_for(const Dataset& data) {
  validate(data);
  return {data.feature_dim, data.class_count};
}

double model_loss(const SoftmaxModel& model, const ParamVector& params,
                  const Dataset& batch) {
  check_dims(model, params, batch);
  const auto idx = all_rows(batch);
  return kernels::softmax_loss(params.values.data(), batch.features.data(),
                               batch.labels.data(), idx, model.feature_dim,
                               model.class_count);
}

void surrogate_gradient(const SoftmaxModel& model, const ParamVector& params,
                        const ParamVector& anchor, const Dataset& data,
                        std::span<const std::int32_t> idx, double prox_weight,
                        double* grad_out) {
  check_dims(model, params, data);
  if (anchor.values.size() != params.values.size())
    throw std::invalid_argument("anchor dimension does not match parameters");
  kernels::softmax_grad(params.values.data(), data.features.data(),
                        data.labels.data(), idx, model.feature_dim,
                        model.class_count, grad_out);
  if (prox_weight != 0.0) {
    const std::int64_t dim = model.param_dim();
    for (std::int64_t j = 0; j < dim; ++j)
      grad_out[j] += prox_weight * (params.values[static_cast<std::size_t>(j)] -
                                    anchor.values[static_cast<std::size_t>(j)]);
  }
}

std::vector<double> surrogate_gradient(const SoftmaxModel& model,
                                       const ParamVector& params,
                                       const ParamVector& anchor,
                                       const Dataset& batch, double prox_weight) {
  std::vector<double> grad(static_cast<std::size_t>(model.param_dim()));
  const auto idx = all_rows(batch);
  surrogate_gradient(model, params, anchor, batch, idx, prox_weight, grad.data());
  return grad;
}

Evaluation evaluate(const SoftmaxModel& model, const ParamVector& params,
                    const Dataset& test) {
  check_dims(model, params, test);
  const auto r = kernels::softmax_eval(params.values.data(), test.features.data(),
                                       test.labels.data(), test.size(),
                                       model.feature_dim, model.class_count);
  return {r.accuracy, r.mean_loss};
}

}  // namespace leofl::learn
