#pragma once

#include <cstdint>
#include <functional>
#include <random>

#include "leofl/dataset.hpp"
#include "leofl/model.hpp"

namespace leofl::learn {

struct TrainConfig {
  double learning_rate = 0.1;
  double prox_weight = 0.0;   // L2 pull toward the received model
  std::int32_t batch_size = 10;
  std::int32_t local_epochs = 1;
  std::uint64_t rng_seed = 0;
};

void validate(const TrainConfig& cfg);

/// Worker-side minibatch SGD: shuffles the local data each epoch, splits it
/// into ceil(n/B) batches (last one short) and steps against the surrogate
/// gradient anchored at the received parameters. The result keeps the
/// received epoch tag. Shuffling consumes `rng`, which the caller owns; one
/// generator per satellite keeps concurrent workers reproducible.
ParamVector local_train(const SoftmaxModel& model, const ParamVector& received,
                        std::int64_t epoch_tag, const Dataset& data,
                        const TrainConfig& cfg, std::mt19937_64& rng);

/// Same, with a fresh generator seeded from cfg.rng_seed.
ParamVector local_train(const SoftmaxModel& model, const ParamVector& received,
                        std::int64_t epoch_tag, const Dataset& data,
                        const TrainConfig& cfg);

/// Plain centralized SGD over the pooled dataset; reference point for the
/// federated runs. Invokes `per_epoch` (if set) after each pass.
ParamVector train_centralized(
    const SoftmaxModel& model, const Dataset& data, std::int32_t epochs,
    const TrainConfig& cfg,
    const std::function<void(std::int32_t, const ParamVector&)>& per_epoch = {});

}  // namespace leofl::learn
