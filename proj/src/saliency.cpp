#include "splitsim/saliency.hpp"

#include <algorithm>
#include <stdexcept>

namespace splitsim {

namespace {

// Feature map to read for an eligible layer: the ReLU output for a conv with a
// fused activation, the layer's own output otherwise.
int feature_layer(const ModelGraph& model, int layer_index) {
    const auto& layers = model.layers();
    if (layers[static_cast<std::size_t>(layer_index)].kind == LayerKind::Conv2D &&
        layer_index + 1 < model.layer_count() &&
        layers[static_cast<std::size_t>(layer_index + 1)].kind == LayerKind::ReLU)
        return layer_index + 1;
    return layer_index;
}

void check_eligible(const ModelGraph& model, int layer_index) {
    if (layer_index < 0 || layer_index >= model.layer_count())
        throw std::invalid_argument("layer index out of range");
    const LayerSpec& spec = model.layers()[static_cast<std::size_t>(layer_index)];
    if (!layer_has_spatial_output(spec))
        throw std::invalid_argument("layer " + std::to_string(layer_index) +
                                    " (" + std::string(to_string(spec.kind)) +
                                    ") has no spatial output");
}

void check_class(const ModelGraph& model, int class_index) {
    if (class_index < 0 || class_index >= model.num_classes())
        throw std::invalid_argument("class index out of range");
}

}  // namespace

std::vector<int> saliency_eligible_layers(const ModelGraph& model) {
    std::vector<int> out;
    for (int i = 0; i < model.layer_count(); ++i) {
        const LayerKind kind = model.layers()[static_cast<std::size_t>(i)].kind;
        if (kind == LayerKind::Flatten || kind == LayerKind::Dense) break;
        if (kind == LayerKind::Conv2D || kind == LayerKind::MaxPool2D) out.push_back(i);
    }
    return out;
}

ChannelWeights channel_weights(const ModelGraph& model, const Tensor& input, int class_index,
                               int layer_index) {
    check_eligible(model, layer_index);
    check_class(model, class_index);
    ForwardTrace trace;
    forward(model, input, &trace);
    GradientStore g = backward(model, input, trace, ScalarSelector::logit(class_index));

    const int feat = feature_layer(model, layer_index);
    const Tensor& grad = g.activation_grads[static_cast<std::size_t>(feat)];
    const int c = grad.shape[0], h = grad.shape[1], w = grad.shape[2];

    ChannelWeights out;
    out.layer_index = layer_index;
    out.class_index = class_index;
    out.weights.resize(static_cast<std::size_t>(c));
    const double inv = 1.0 / (static_cast<double>(h) * w);
    for (int k = 0; k < c; ++k) {
        double acc = 0.0;
        const double* p = grad.data.data() + static_cast<std::size_t>(k) * h * w;
        for (int i = 0; i < h * w; ++i) acc += p[i];
        out.weights[static_cast<std::size_t>(k)] = acc * inv;
    }
    return out;
}

ActivationMap class_activation_map(const ModelGraph& model, const Tensor& input,
                                   int class_index, int layer_index) {
    check_eligible(model, layer_index);
    check_class(model, class_index);
    ForwardTrace trace;
    forward(model, input, &trace);
    GradientStore g = backward(model, input, trace, ScalarSelector::logit(class_index));

    const int feat = feature_layer(model, layer_index);
    const Tensor& grad = g.activation_grads[static_cast<std::size_t>(feat)];
    const Tensor& act = trace.activations[static_cast<std::size_t>(feat)];
    const int c = act.shape[0], h = act.shape[1], w = act.shape[2];
    const double inv = 1.0 / (static_cast<double>(h) * w);

    ActivationMap out;
    out.layer_index = layer_index;
    out.class_index = class_index;
    out.height = h;
    out.width = w;
    out.map.assign(static_cast<std::size_t>(h) * w, 0.0);
    for (int k = 0; k < c; ++k) {
        double wsum = 0.0;
        const double* gp = grad.data.data() + static_cast<std::size_t>(k) * h * w;
        const double* ap = act.data.data() + static_cast<std::size_t>(k) * h * w;
        for (int i = 0; i < h * w; ++i) wsum += gp[i];
        const double wk = wsum * inv;
        for (int i = 0; i < h * w; ++i) out.map[static_cast<std::size_t>(i)] += wk * ap[i];
    }
    for (double& v : out.map) v = v > 0.0 ? v : 0.0;
    return out;
}

CSCurve cumulative_saliency(const ModelGraph& model, const Dataset& data) {
    if (data.size() == 0) throw std::invalid_argument("empty dataset");
    if (data.num_classes != model.num_classes())
        throw std::invalid_argument("dataset classes do not match model");
    CSCurve curve;
    curve.eligible_layers = saliency_eligible_layers(model);
    if (curve.eligible_layers.size() < 3)
        throw std::invalid_argument("model too shallow: need at least 3 eligible layers");

    // per-layer list of per-item map means
    std::vector<std::vector<double>> per_layer(curve.eligible_layers.size());
    for (auto& v : per_layer) v.reserve(static_cast<std::size_t>(data.size()));

    for (int j = 0; j < data.size(); ++j) {
        const Tensor& input = data.inputs[static_cast<std::size_t>(j)];
        ForwardTrace trace;
        forward(model, input, &trace);
        GradientStore g =
            backward(model, input, trace, ScalarSelector::logit(data.labels[j]));
        for (std::size_t li = 0; li < curve.eligible_layers.size(); ++li) {
            const int feat = feature_layer(model, curve.eligible_layers[li]);
            const Tensor& grad = g.activation_grads[static_cast<std::size_t>(feat)];
            const Tensor& act = trace.activations[static_cast<std::size_t>(feat)];
            const int c = act.shape[0], h = act.shape[1], w = act.shape[2];
            const double inv = 1.0 / (static_cast<double>(h) * w);
            std::vector<double> pix(static_cast<std::size_t>(h) * w, 0.0);
            for (int k = 0; k < c; ++k) {
                const double* gp = grad.data.data() + static_cast<std::size_t>(k) * h * w;
                const double* ap = act.data.data() + static_cast<std::size_t>(k) * h * w;
                double wsum = 0.0;
                for (int t = 0; t < h * w; ++t) wsum += gp[t];
                const double wk = wsum * inv;
                for (int t = 0; t < h * w; ++t) pix[static_cast<std::size_t>(t)] += wk * ap[t];
            }
            double mean = 0.0;
            for (double v : pix) mean += v > 0.0 ? v : 0.0;
            per_layer[li].push_back(mean * inv);
        }
    }

    // sort before summing: the mean must not depend on dataset order
    curve.values.resize(per_layer.size());
    for (std::size_t li = 0; li < per_layer.size(); ++li) {
        std::vector<double>& vals = per_layer[li];
        std::sort(vals.begin(), vals.end());
        double acc = 0.0;
        for (double v : vals) acc += v;
        curve.values[li] = acc / static_cast<double>(vals.size());
    }
    curve.candidates = candidate_split_points(curve.eligible_layers, curve.values);
    return curve;
}

std::vector<int> candidate_split_points(const std::vector<int>& eligible_layers,
                                        const std::vector<double>& values) {
    if (eligible_layers.size() != values.size())
        throw std::invalid_argument("curve layers and values differ in length");
    if (values.size() < 3)
        throw std::invalid_argument("need at least 3 curve points");
    std::vector<std::size_t> picks;
    for (std::size_t k = 1; k + 1 < values.size(); ++k)
        if (values[k] >= values[k - 1] && values[k] > values[k + 1]) picks.push_back(k);
    std::sort(picks.begin(), picks.end(), [&](std::size_t a, std::size_t b) {
        if (values[a] != values[b]) return values[a] > values[b];
        return eligible_layers[a] < eligible_layers[b];
    });
    std::vector<int> out;
    out.reserve(picks.size());
    for (std::size_t k : picks) out.push_back(eligible_layers[k]);
    return out;
}

}  // namespace splitsim
