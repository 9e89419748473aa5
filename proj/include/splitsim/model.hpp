#pragma once

#include <cstdint>
#include <vector>

#include "splitsim/layers.hpp"
#include "splitsim/tensor.hpp"

namespace splitsim {

// A validated linear chain of layers plus their parameters.
class ModelGraph {
public:
    ModelGraph() = default;

    // Validates the chain by propagating shapes; layers with unset in_channels /
    // in_features are completed from the propagated shape. The final output must
    // be [num_classes]. Throws std::invalid_argument naming the offending layer.
    ModelGraph(std::vector<int> input_shape, std::vector<LayerSpec> layers, int num_classes);

    const std::vector<LayerSpec>& layers() const { return layers_; }
    const std::vector<int>& input_shape() const { return input_shape_; }
    const std::vector<int>& output_shape(int layer_index) const {
        return shapes_[static_cast<std::size_t>(layer_index)];
    }
    int num_classes() const { return num_classes_; }
    int layer_count() const { return static_cast<int>(layers_.size()); }

    std::vector<LayerParams>& params() { return params_; }
    const std::vector<LayerParams>& params() const { return params_; }

    std::int64_t param_count() const;

    // Seeded uniform init in [-1/sqrt(fan_in), 1/sqrt(fan_in)], zero biases.
    void init_params(std::uint64_t seed);

    int trained_epochs = 0;

private:
    std::vector<int> input_shape_;
    std::vector<LayerSpec> layers_;
    std::vector<std::vector<int>> shapes_;  // output shape per layer
    std::vector<LayerParams> params_;
    int num_classes_ = 0;
};

struct ForwardTrace {
    std::vector<Tensor> activations;  // activations[i] = output of layer i
};

Tensor forward(const ModelGraph& model, const Tensor& input, ForwardTrace* trace = nullptr);

int predict(const ModelGraph& model, const Tensor& input);

// Scalar to differentiate: a single logit, the sum of all logits, or one of the
// two training losses evaluated against an integer label.
struct ScalarSelector {
    enum class Kind { Logit, SumLogits, CrossEntropy, SquaredErrorSoftmax };
    Kind kind = Kind::SumLogits;
    int class_index = -1;  // logit index or label, depending on kind

    static ScalarSelector logit(int c) { return {Kind::Logit, c}; }
    static ScalarSelector sum_logits() { return {Kind::SumLogits, -1}; }
    static ScalarSelector cross_entropy(int label) { return {Kind::CrossEntropy, label}; }
    static ScalarSelector squared_error_softmax(int label) {
        return {Kind::SquaredErrorSoftmax, label};
    }
};

struct GradientStore {
    double value = 0.0;                     // the selected scalar itself
    std::vector<LayerParams> param_grads;   // aligned with model.layers()
    std::vector<Tensor> activation_grads;   // d(scalar)/d(activation of layer i)
    Tensor input_grad;
};

// Reverse-mode sweep for the selected scalar. `trace` must come from a forward
// pass of `input` through `model`.
GradientStore backward(const ModelGraph& model, const Tensor& input,
                       const ForwardTrace& trace, const ScalarSelector& selector);

std::vector<double> softmax(const std::vector<double>& logits);

// The in-tree 12-layer CNN for 1x16x16 inputs:
// Conv(1->8) ReLU Pool2 Conv(8->16) ReLU Pool2 Conv(16->16) ReLU Flatten
// Dense(256->64) ReLU Dense(64->num_classes).
ModelGraph build_toy_cnn(int num_classes, std::uint64_t seed);

}  // namespace splitsim
