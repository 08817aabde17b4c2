#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "leofl/dataset.hpp"
#include "leofl/kernels.hpp"

namespace leofl::learn {

/// Flat model parameter vector plus the global epoch it was tagged with at
/// exchange time.
struct ParamVector {
  std::vector<double> values;
  std::int64_t source_epoch = 0;
};

/// Multinomial logistic regression: weights (classes x features) followed by
/// one bias per class, flattened into (features + 1) * classes parameters.
struct SoftmaxModel {
  std::int64_t feature_dim = 0;
  std::int32_t class_count = 0;

  std::int64_t param_dim() const { return (feature_dim + 1) * class_count; }

  /// All-zero initial parameters tagged with epoch 0.
  ParamVector zero_params() const {
    return {std::vector<double>(static_cast<std::size_t>(param_dim()), 0.0), 0};
  }
};

struct Evaluation {
  double top1_accuracy = 0.0;
  double mean_loss = 0.0;
};

SoftmaxModel model_for(const Dataset& data);

/// Mean cross-entropy loss of the model on `batch` (all samples).
double model_loss(const SoftmaxModel& model, const ParamVector& params,
                  const Dataset& batch);

/// Gradient of the surrogate objective: mean data loss over the batch rows
/// in `idx` plus the proximal term (prox_weight/2)*||params - anchor||^2.
/// Writes (features+1)*classes entries to grad_out.
void surrogate_gradient(const SoftmaxModel& model, const ParamVector& params,
                        const ParamVector& anchor, const Dataset& data,
                        std::span<const std::int32_t> idx, double prox_weight,
                        double* grad_out);

/// Convenience overload over a whole dataset; returns the gradient vector.
std::vector<double> surrogate_gradient(const SoftmaxModel& model,
                                       const ParamVector& params,
                                       const ParamVector& anchor,
                                       const Dataset& batch, double prox_weight);

/// Top-1 accuracy and mean loss on a held-out set. Argmax ties break toward
/// the lowest class index.
Evaluation evaluate(const SoftmaxModel& model, const ParamVector& params,
                    const Dataset& test);

}  // namespace leofl::learn
