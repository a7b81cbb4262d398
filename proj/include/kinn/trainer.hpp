#pragma once

#include <cstdint>

#include "kinn/loss.hpp"
#include "kinn/models.hpp"
#include "kinn/param_store.hpp"

namespace kinn {

struct TrainOptions {
    std::size_t epochs = 1000;
    std::size_t batch_size = 32;
    ad::AdamConfig adam{};
    std::uint64_t seed = 0;  // mini-batch shuffling only
};

struct TrainResult {
    double final_loss = 0.0;
    std::size_t steps = 0;
    bool diverged = false;
};

// Adam training of a graph-backed model on (inputs, targets) rows. Batches
// larger than the dataset collapse to one full-batch step per epoch.
// Divergence to non-finite values stops training and is reported, not thrown.
TrainResult train_model(ModelHandle& model, const ad::Tensor& inputs, const ad::Tensor& targets,
                        const LossSpec& loss, const TrainOptions& options);

}  // namespace kinn
