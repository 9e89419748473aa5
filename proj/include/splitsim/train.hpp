#pragma once

#include <cstdint>
#include <vector>

#include "splitsim/dataset.hpp"
#include "splitsim/model.hpp"

namespace splitsim {

enum class LossKind { CrossEntropy, SquaredErrorSoftmax };

struct TrainConfig {
    int epochs = 20;
    double learning_rate = 5e-3;
    int batch_size = 32;
    std::uint64_t seed = 42;
    LossKind loss = LossKind::CrossEntropy;
    // Adam moments
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct TrainResult {
    std::vector<double> loss_history;  // one mean loss per epoch
};

// Adam training over shuffled mini-batches. Layers listed in `frozen_layers`
// receive no updates and keep their parameters bit-identical. The per-epoch
// loss is the mean of per-item losses accumulated in dataset order, so it does
// not depend on the shuffle. Aborts with std::runtime_error naming the epoch
// if the loss goes non-finite.
TrainResult train(ModelGraph& model, const Dataset& data, const TrainConfig& cfg,
                  const std::vector<int>& frozen_layers = {});

double evaluate_accuracy(const ModelGraph& model, const Dataset& data);

}  // namespace splitsim
