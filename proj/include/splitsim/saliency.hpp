#pragma once

#include <vector>

#include "splitsim/dataset.hpp"
#include "splitsim/model.hpp"

namespace splitsim {

// Layers a saliency value (and hence a split) can be attached to: Conv2D and
// MaxPool2D outputs before the first Flatten/Dense. A ReLU directly after a
// conv is treated as part of it, so the feature map read for a conv is the
// post-activation one.
std::vector<int> saliency_eligible_layers(const ModelGraph& model);

struct ChannelWeights {
    int layer_index = -1;
    int class_index = -1;
    std::vector<double> weights;  // one per channel
};

// Spatial mean of d(logit_c)/d(feature map) per channel.
ChannelWeights channel_weights(const ModelGraph& model, const Tensor& input, int class_index,
                               int layer_index);

struct ActivationMap {
    int layer_index = -1;
    int class_index = -1;
    int height = 0;
    int width = 0;
    std::vector<double> map;  // h*w, non-negative
};

// ReLU of the channel-weighted sum of feature maps.
ActivationMap class_activation_map(const ModelGraph& model, const Tensor& input,
                                   int class_index, int layer_index);

struct CSCurve {
    std::vector<int> eligible_layers;   // layer indices, network order
    std::vector<double> values;         // parallel to eligible_layers
    std::vector<int> candidates;        // layer indices ranked by value desc
};

// Mean activation-map value over a dataset (true labels select the logit),
// evaluated at every eligible layer. Per-layer accumulation sorts the per-item
// values first so the result is bit-identical under input reordering.
CSCurve cumulative_saliency(const ModelGraph& model, const Dataset& data);

// Interior local maxima of the curve: value >= previous and value > next, so
// the rightmost entry of a plateau wins. First and last eligible layers are
// excluded. Returned ranked by value descending (layer index breaking ties).
std::vector<int> candidate_split_points(const std::vector<int>& eligible_layers,
                                        const std::vector<double>& values);

}  // namespace splitsim
