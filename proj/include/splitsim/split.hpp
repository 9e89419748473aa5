#pragma once

#include <cstdint>
#include <vector>

#include "splitsim/dataset.hpp"
#include "splitsim/model.hpp"
#include "splitsim/train.hpp"

namespace splitsim {

// Autoencoder bottleneck injected right after the split layer: a Conv2D(z ->
// ceil(rho*z), 3x3, pad 1) + ReLU encoder on the edge side and the mirrored
// decoder on the server side.
struct BottleneckSpec {
    int target_layer = -1;          // split layer index in the base model
    double compression_rate = 0.5;  // rho
    int channels = 0;               // z at the split
    int latent_channels = 0;        // ceil(rho * z)
    int height = 0;
    int width = 0;
    LayerSpec encoder_spec;
    LayerSpec decoder_spec;
    LayerParams encoder;
    LayerParams decoder;
};

struct SplitPlan {
    ModelGraph base;    // full original chain, head = layers [0, head_end]
    int head_end = -1;  // split layer, or its ReLU when one follows immediately
    BottleneckSpec bottleneck;
};

// Builds a plan splitting `model` after `target_layer` (which must produce a
// spatial map) with compression rate rho in (0, 1). Encoder/decoder weights get
// the same seeded fan-in init as the base model.
SplitPlan make_split(const ModelGraph& model, int target_layer, double rho = 0.5,
                     std::uint64_t seed = 0xb07713ull);

std::int64_t latent_elements(const SplitPlan& plan);
std::int64_t payload_bytes(const SplitPlan& plan);  // float32 on the wire

Tensor head_forward(const SplitPlan& plan, const Tensor& input);
Tensor encode(const SplitPlan& plan, const Tensor& split_activation);
Tensor decode(const SplitPlan& plan, const Tensor& latent);
Tensor tail_forward(const SplitPlan& plan, const Tensor& reconstruction);

// The full spliced chain (head + encoder/ReLU/decoder/ReLU + tail) as one
// model; parameters are copies of the plan's.
ModelGraph make_spliced_model(const SplitPlan& plan);

// Spliced prediction over the float32 wire; identical to split_infer with an
// all-true delivered map.
int split_predict(const SplitPlan& plan, const Tensor& input);

struct BottleneckTrainResult {
    std::vector<double> loss_history;  // mean reconstruction loss per epoch
};

// Trains encoder+decoder on the reconstruction loss mean_j |A_j - psi(A_j)|^2
// (sum of squared differences per item) with every base layer frozen.
BottleneckTrainResult train_bottleneck(SplitPlan& plan, const Dataset& train_data,
                                       const TrainConfig& cfg);

struct SplitAccuracy {
    double accuracy = 0.0;              // spliced test accuracy
    double reconstruction_mse = 0.0;    // mean over items of mean squared error
};

// Fine-tunes the whole spliced chain on the squared-error-through-softmax loss
// (all parameters trainable), then reports test accuracy and reconstruction
// distance. cfg.epochs == 0 skips training and just evaluates.
SplitAccuracy finetune(SplitPlan& plan, const Dataset& train_data, const Dataset& test_data,
                       const TrainConfig& cfg);

// Serializes the latent to float32 bytes (little-endian), drops elements whose
// bytes are not all delivered, and runs the server side on the result.
// `delivered` must have exactly payload_bytes(plan) entries.
int split_infer(const SplitPlan& plan, const Tensor& input,
                const std::vector<std::uint8_t>& delivered);

}  // namespace splitsim
