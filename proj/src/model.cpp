#include "splitsim/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "splitsim/rng.hpp"

namespace splitsim {

namespace {

int conv_fan_in(const LayerSpec& s) { return s.kernel * s.kernel * s.in_channels; }

void check_input_shape(const ModelGraph& model, const Tensor& input) {
    if (!same_shape(input.shape, model.input_shape()))
        throw std::invalid_argument("input shape " + shape_string(input.shape) +
                                    " does not match model input " +
                                    shape_string(model.input_shape()));
}

}  // namespace

ModelGraph::ModelGraph(std::vector<int> input_shape, std::vector<LayerSpec> layers,
                       int num_classes)
    : input_shape_(std::move(input_shape)), layers_(std::move(layers)),
      num_classes_(num_classes) {
    if (layers_.empty()) throw std::invalid_argument("model has no layers");
    if (num_classes_ < 2) throw std::invalid_argument("model needs at least 2 classes");
    Tensor::numel(input_shape_);  // rejects non-positive dims

    std::vector<int> cur = input_shape_;
    shapes_.reserve(layers_.size());
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        LayerSpec& spec = layers_[i];
        // complete unset fan-in fields from the propagated shape
        if (spec.kind == LayerKind::Conv2D && spec.in_channels == 0 && cur.size() == 3)
            spec.in_channels = cur[0];
        if (spec.kind == LayerKind::Dense && spec.in_features == 0 && cur.size() == 1)
            spec.in_features = cur[0];
        cur = layer_output_shape(spec, cur, static_cast<int>(i));
        shapes_.push_back(cur);
    }
    if (cur != std::vector<int>{num_classes_})
        throw std::invalid_argument("final layer produces " + shape_string(cur) +
                                    ", expected [" + std::to_string(num_classes_) + "]");

    params_.resize(layers_.size());
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        params_[i].w.assign(static_cast<std::size_t>(layer_weight_count(layers_[i])), 0.0);
        params_[i].b.assign(static_cast<std::size_t>(layer_bias_count(layers_[i])), 0.0);
    }
}

std::int64_t ModelGraph::param_count() const {
    std::int64_t n = 0;
    for (const auto& spec : layers_) n += layer_param_count(spec);
    return n;
}

void ModelGraph::init_params(std::uint64_t seed) {
    Rng rng(mix_seed(seed, 0x777a7261u));
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const LayerSpec& spec = layers_[i];
        if (!layer_has_params(spec)) continue;
        const int fan_in =
            spec.kind == LayerKind::Conv2D ? conv_fan_in(spec) : spec.in_features;
        const double limit = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (double& w : params_[i].w) w = rng.uniform(-limit, limit);
        std::fill(params_[i].b.begin(), params_[i].b.end(), 0.0);
    }
    trained_epochs = 0;
}

Tensor forward(const ModelGraph& model, const Tensor& input, ForwardTrace* trace) {
    check_input_shape(model, input);
    if (trace) {
        trace->activations.clear();
        trace->activations.reserve(model.layers().size());
    }
    Tensor cur = input;
    for (int i = 0; i < model.layer_count(); ++i) {
        const LayerSpec& spec = model.layers()[static_cast<std::size_t>(i)];
        const LayerParams& p = model.params()[static_cast<std::size_t>(i)];
        Tensor out(model.output_shape(i));
        switch (spec.kind) {
            case LayerKind::Conv2D:
                conv2d_forward(spec, p.w.data(), p.b.data(), cur, out);
                break;
            case LayerKind::ReLU:
                relu_forward(cur, out);
                break;
            case LayerKind::MaxPool2D:
                maxpool_forward(spec, cur, out);
                break;
            case LayerKind::Flatten:
                out.data = cur.data;
                break;
            case LayerKind::Dense:
                dense_forward(spec, p.w.data(), p.b.data(), cur, out);
                break;
        }
        if (trace) trace->activations.push_back(out);
        cur = std::move(out);
    }
    return cur;
}

int predict(const ModelGraph& model, const Tensor& input) {
    Tensor logits = forward(model, input);
    return static_cast<int>(std::max_element(logits.data.begin(), logits.data.end()) -
                            logits.data.begin());
}

std::vector<double> softmax(const std::vector<double>& logits) {
    const double top = *std::max_element(logits.begin(), logits.end());
    std::vector<double> p(logits.size());
    double z = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - top);
        z += p[i];
    }
    for (double& v : p) v /= z;
    return p;
}

namespace {

// Seeds the output-side gradient from the selector and reports the scalar value.
void seed_output_grad(const ScalarSelector& sel, const std::vector<double>& logits,
                      std::vector<double>& dlogits, double& value) {
    const int n = static_cast<int>(logits.size());
    dlogits.assign(logits.size(), 0.0);
    switch (sel.kind) {
        case ScalarSelector::Kind::Logit: {
            if (sel.class_index < 0 || sel.class_index >= n)
                throw std::invalid_argument("selector class index out of range");
            value = logits[static_cast<std::size_t>(sel.class_index)];
            dlogits[static_cast<std::size_t>(sel.class_index)] = 1.0;
            return;
        }
        case ScalarSelector::Kind::SumLogits: {
            value = 0.0;
            for (double v : logits) value += v;
            std::fill(dlogits.begin(), dlogits.end(), 1.0);
            return;
        }
        case ScalarSelector::Kind::CrossEntropy: {
            if (sel.class_index < 0 || sel.class_index >= n)
                throw std::invalid_argument("selector label out of range");
            std::vector<double> p = softmax(logits);
            value = -std::log(p[static_cast<std::size_t>(sel.class_index)]);
            for (int i = 0; i < n; ++i)
                dlogits[static_cast<std::size_t>(i)] =
                    p[static_cast<std::size_t>(i)] - (i == sel.class_index ? 1.0 : 0.0);
            return;
        }
        case ScalarSelector::Kind::SquaredErrorSoftmax: {
            if (sel.class_index < 0 || sel.class_index >= n)
                throw std::invalid_argument("selector label out of range");
            std::vector<double> p = softmax(logits);
            value = 0.0;
            std::vector<double> dp(p.size());
            for (int i = 0; i < n; ++i) {
                const double diff =
                    p[static_cast<std::size_t>(i)] - (i == sel.class_index ? 1.0 : 0.0);
                value += diff * diff;
                dp[static_cast<std::size_t>(i)] = 2.0 * diff;
            }
            // softmax jacobian: dlogit_i = p_i * (dp_i - sum_k dp_k p_k)
            double dot = 0.0;
            for (std::size_t i = 0; i < p.size(); ++i) dot += dp[i] * p[i];
            for (std::size_t i = 0; i < p.size(); ++i) dlogits[i] = p[i] * (dp[i] - dot);
            return;
        }
    }
    throw std::invalid_argument("unknown selector kind");
}

}  // namespace

GradientStore backward(const ModelGraph& model, const Tensor& input,
                       const ForwardTrace& trace, const ScalarSelector& selector) {
    check_input_shape(model, input);
    const int n = model.layer_count();
    if (static_cast<int>(trace.activations.size()) != n)
        throw std::invalid_argument("forward trace does not match model");

    GradientStore g;
    g.param_grads.resize(static_cast<std::size_t>(n));
    g.activation_grads.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const LayerSpec& spec = model.layers()[static_cast<std::size_t>(i)];
        g.param_grads[static_cast<std::size_t>(i)].w.assign(
            static_cast<std::size_t>(layer_weight_count(spec)), 0.0);
        g.param_grads[static_cast<std::size_t>(i)].b.assign(
            static_cast<std::size_t>(layer_bias_count(spec)), 0.0);
    }

    const Tensor& logits = trace.activations.back();
    Tensor dout(logits.shape);
    seed_output_grad(selector, logits.data, dout.data, g.value);

    for (int i = n - 1; i >= 0; --i) {
        const LayerSpec& spec = model.layers()[static_cast<std::size_t>(i)];
        const LayerParams& p = model.params()[static_cast<std::size_t>(i)];
        LayerParams& pg = g.param_grads[static_cast<std::size_t>(i)];
        const Tensor& in = i == 0 ? input : trace.activations[static_cast<std::size_t>(i - 1)];
        g.activation_grads[static_cast<std::size_t>(i)] = dout;
        Tensor din(in.shape);
        switch (spec.kind) {
            case LayerKind::Conv2D:
                conv2d_backward(spec, p.w.data(), in, dout, din, pg.w.data(), pg.b.data());
                break;
            case LayerKind::ReLU:
                relu_backward(in, dout, din);
                break;
            case LayerKind::MaxPool2D:
                maxpool_backward(spec, in, dout, din);
                break;
            case LayerKind::Flatten:
                din.data = dout.data;
                break;
            case LayerKind::Dense:
                dense_backward(spec, p.w.data(), in, dout, din, pg.w.data(), pg.b.data());
                break;
        }
        dout = std::move(din);
    }
    g.input_grad = std::move(dout);
    return g;
}

ModelGraph build_toy_cnn(int num_classes, std::uint64_t seed) {
    if (num_classes < 2 || num_classes > 10)
        throw std::invalid_argument("toy cnn supports 2..10 classes");
    std::vector<LayerSpec> layers;
    layers.push_back(make_conv("conv1", 1, 8, 3, 1, 1));
    layers.push_back(make_relu("relu1"));
    layers.push_back(make_maxpool("pool1", 2));
    layers.push_back(make_conv("conv2", 8, 16, 3, 1, 1));
    layers.push_back(make_relu("relu2"));
    layers.push_back(make_maxpool("pool2", 2));
    layers.push_back(make_conv("conv3", 16, 16, 3, 1, 1));
    layers.push_back(make_relu("relu3"));
    layers.push_back(make_flatten("flatten"));
    layers.push_back(make_dense("fc1", 256, 64));
    layers.push_back(make_relu("relu4"));
    layers.push_back(make_dense("fc2", 64, num_classes));
    ModelGraph model({1, 16, 16}, std::move(layers), num_classes);
    model.init_params(seed);
    return model;
}

}  // namespace splitsim
