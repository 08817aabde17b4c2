#pragma once

#include <cstdint>
#include <span>

namespace leofl::kernels {

// Multinomial logistic regression kernels shared by training, evaluation and
// the centralized baseline. Parameter layout for C classes over m features:
//   params[c*m + f]          weight of feature f for class c
//   params[C*m + c]          bias of class c
// so the parameter dimension is (m + 1) * C.
//
// The OpenMP variants are organized so that every floating-point accumulation
// happens in a fixed order that does not depend on the number of threads:
// repeated runs produce bitwise-identical results on the same platform.
// Serial reference implementations live in kernels::serial and are kept for
// tests and the kernel benchmark.

inline constexpr std::int64_t kGradChunk = 256;  // samples per gradient chunk

struct EvalResult {
  double accuracy = 0.0;
  double mean_loss = 0.0;
};

/// Class probabilities for a single sample; probs_out has `classes` entries.
void softmax_probs(const double* params, const double* sample,
                   std::int64_t feature_dim, std::int32_t classes,
                   double* probs_out);

/// Mean cross-entropy loss over the index set `idx` into the sample matrix.
double softmax_loss(const double* params, const double* features,
                    const std::int32_t* labels, std::span<const std::int32_t> idx,
                    std::int64_t feature_dim, std::int32_t classes);

/// Mean-loss gradient over `idx`, written to grad_out ((m+1)*C entries).
/// Returns the mean loss at `params` as a byproduct.
double softmax_grad(const double* params, const double* features,
                    const std::int32_t* labels, std::span<const std::int32_t> idx,
                    std::int64_t feature_dim, std::int32_t classes,
                    double* grad_out);

/// Top-1 accuracy (argmax ties resolved toward the lowest class index) and
/// mean loss over all n samples.
EvalResult softmax_eval(const double* params, const double* features,
                        const std::int32_t* labels, std::int64_t n,
                        std::int64_t feature_dim, std::int32_t classes);

namespace serial {

double softmax_loss(const double* params, const double* features,
                    const std::int32_t* labels, std::span<const std::int32_t> idx,
                    std::int64_t feature_dim, std::int32_t classes);

double softmax_grad(const double* params, const double* features,
                    const std::int32_t* labels, std::span<const std::int32_t> idx,
                    std::int64_t feature_dim, std::int32_t classes,
                    double* grad_out);

EvalResult softmax_eval(const double* params, const double* features,
                        const std::int32_t* labels, std::int64_t n,
                        std::int64_t feature_dim, std::int32_t classes);

}  // namespace serial

}  // namespace leofl::kernels
