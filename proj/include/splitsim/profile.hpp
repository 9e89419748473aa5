#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "splitsim/layers.hpp"
#include "splitsim/model.hpp"

namespace splitsim {

// A network described only by its architecture: enough to count parameters,
// mult-adds and activation payloads without ever instantiating weights.
struct ModelProfile {
    std::string name;
    std::vector<int> input_shape;             // [c, h, w], no batch
    std::vector<LayerSpec> layers;
    std::vector<std::vector<int>> shapes;     // propagated output shape per layer
};

// Text format, one layer per line:
//   input <c> <h> <w>
//   conv <name> out=<c> kernel=<k> [stride=<s>] [pad=<p>]
//   relu <name> | maxpool <name> kernel=<k> [stride=<s>] | flatten <name>
//   dense <name> out=<n>
// '#' starts a comment. Errors carry <source>:<line> diagnostics.
ModelProfile parse_profile(std::istream& in, const std::string& source);
ModelProfile load_profile(const std::string& path);

// The bundled VGG16 description (224x224x3, 1000 classes).
ModelProfile vgg16_profile();

// Profile view of an instantiated model.
ModelProfile profile_of(const ModelGraph& model, const std::string& name);

struct LayerStat {
    std::string name;
    std::string kind;
    std::vector<int> output_shape;  // batch first
    std::int64_t param_count = 0;
    std::int64_t mult_adds = 0;
};

struct ModelStats {
    std::int64_t total_params = 0;
    std::int64_t trainable_params = 0;
    std::int64_t total_mult_adds = 0;
    std::int64_t input_bytes = 0;              // float32 input batch
    std::int64_t forward_backward_bytes = 0;   // activations of parameterized layers, x2
    std::int64_t param_bytes = 0;              // float32 parameters
    std::int64_t estimated_total_bytes = 0;
};

std::vector<LayerStat> layer_table(const ModelProfile& profile, int batch);
ModelStats model_stats(const ModelProfile& profile, int batch);

// Mult-adds of layers [first, last], batch 1 unless given.
std::int64_t range_mult_adds(const ModelProfile& profile, int first, int last, int batch = 1);

int find_layer(const ModelProfile& profile, const std::string& name);

// float32 bytes of the compressed activation when splitting after `layer_index`
// with compression rate rho in (0, 1). Sets *degenerate when ceil(rho*z) == z,
// i.e. the bottleneck does not actually shrink the tensor.
std::int64_t profile_payload_bytes(const ModelProfile& profile, int layer_index, double rho,
                                   bool* degenerate = nullptr);

// Mult-adds of the bottleneck encoder/decoder convolutions at a split point.
struct BottleneckCost {
    std::int64_t encoder_mult_adds = 0;
    std::int64_t decoder_mult_adds = 0;
};
BottleneckCost bottleneck_cost(const ModelProfile& profile, int layer_index, double rho);

// Megabytes with the 10^6 convention used in the summaries.
double bytes_to_mb(std::int64_t bytes);

}  // namespace splitsim
