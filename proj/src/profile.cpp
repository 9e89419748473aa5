#include "splitsim/profile.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace splitsim {

namespace {

[[noreturn]] void parse_error(const std::string& source, int line, const std::string& msg) {
    throw std::invalid_argument(source + ":" + std::to_string(line) + ": " + msg);
}

int parse_int(const std::string& source, int line, const std::string& text) {
    try {
        std::size_t used = 0;
        const int v = std::stoi(text, &used);
        if (used != text.size()) throw std::invalid_argument("");
        return v;
    } catch (const std::exception&) {
        parse_error(source, line, "expected an integer, got \"" + text + "\"");
    }
}

struct KeyValues {
    std::vector<std::pair<std::string, std::string>> items;

    int take(const std::string& source, int line, const std::string& key, int fallback,
             bool required) {
        for (auto it = items.begin(); it != items.end(); ++it) {
            if (it->first == key) {
                const int v = parse_int(source, line, it->second);
                items.erase(it);
                return v;
            }
        }
        if (required) parse_error(source, line, "missing required key \"" + key + "\"");
        return fallback;
    }

    void expect_empty(const std::string& source, int line) {
        if (!items.empty())
            parse_error(source, line, "unknown key \"" + items.front().first + "\"");
    }
};

void finalize(ModelProfile& profile, const std::string& source) {
    if (profile.input_shape.empty())
        parse_error(source, 1, "profile has no input line");
    if (profile.layers.empty())
        parse_error(source, 1, "profile has no layers");
    std::vector<int> cur = profile.input_shape;
    profile.shapes.clear();
    for (std::size_t i = 0; i < profile.layers.size(); ++i) {
        LayerSpec& spec = profile.layers[i];
        if (spec.kind == LayerKind::Conv2D && spec.in_channels == 0 && cur.size() == 3)
            spec.in_channels = cur[0];
        if (spec.kind == LayerKind::Dense && spec.in_features == 0 && cur.size() == 1)
            spec.in_features = cur[0];
        cur = layer_output_shape(spec, cur, static_cast<int>(i));
        profile.shapes.push_back(cur);
    }
}

}  // namespace

ModelProfile parse_profile(std::istream& in, const std::string& source) {
    ModelProfile profile;
    profile.name = source;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string word;
        if (!(ls >> word)) continue;

        std::vector<std::string> rest;
        std::string tok;
        while (ls >> tok) rest.push_back(tok);

        if (word == "input") {
            if (!profile.input_shape.empty())
                parse_error(source, line_no, "duplicate input line");
            if (rest.size() != 3)
                parse_error(source, line_no, "input needs: channels height width");
            for (const auto& t : rest)
                profile.input_shape.push_back(parse_int(source, line_no, t));
            continue;
        }

        if (rest.empty()) parse_error(source, line_no, "layer is missing a name");
        const std::string name = rest.front();
        KeyValues kv;
        for (std::size_t i = 1; i < rest.size(); ++i) {
            const std::size_t eq = rest[i].find('=');
            if (eq == std::string::npos || eq == 0)
                parse_error(source, line_no, "expected key=value, got \"" + rest[i] + "\"");
            kv.items.emplace_back(rest[i].substr(0, eq), rest[i].substr(eq + 1));
        }

        if (word == "conv") {
            const int out = kv.take(source, line_no, "out", 0, true);
            const int kernel = kv.take(source, line_no, "kernel", 0, true);
            const int stride = kv.take(source, line_no, "stride", 1, false);
            const int pad = kv.take(source, line_no, "pad", 0, false);
            kv.expect_empty(source, line_no);
            profile.layers.push_back(make_conv(name, 0, out, kernel, stride, pad));
        } else if (word == "relu") {
            kv.expect_empty(source, line_no);
            profile.layers.push_back(make_relu(name));
        } else if (word == "maxpool") {
            const int kernel = kv.take(source, line_no, "kernel", 0, true);
            const int stride = kv.take(source, line_no, "stride", 0, false);
            kv.expect_empty(source, line_no);
            profile.layers.push_back(make_maxpool(name, kernel, stride));
        } else if (word == "flatten") {
            kv.expect_empty(source, line_no);
            profile.layers.push_back(make_flatten(name));
        } else if (word == "dense") {
            const int out = kv.take(source, line_no, "out", 0, true);
            kv.expect_empty(source, line_no);
            profile.layers.push_back(make_dense(name, 0, out));
        } else {
            parse_error(source, line_no, "unknown layer type \"" + word + "\"");
        }
    }
    try {
        finalize(profile, source);
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(source + ": " + e.what());
    }
    return profile;
}

ModelProfile load_profile(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read profile " + path);
    return parse_profile(in, path);
}

namespace {

const char* kVgg16Text = R"(# VGG16 at 224x224, feature extractor plus classifier
input 3 224 224
conv block1_conv1 out=64 kernel=3 pad=1
relu block1_relu1
conv block1_conv2 out=64 kernel=3 pad=1
relu block1_relu2
maxpool block1_pool kernel=2
conv block2_conv1 out=128 kernel=3 pad=1
relu block2_relu1
conv block2_conv2 out=128 kernel=3 pad=1
relu block2_relu2
maxpool block2_pool kernel=2
conv block3_conv1 out=256 kernel=3 pad=1
relu block3_relu1
conv block3_conv2 out=256 kernel=3 pad=1
relu block3_relu2
conv block3_conv3 out=256 kernel=3 pad=1
relu block3_relu3
maxpool block3_pool kernel=2
conv block4_conv1 out=512 kernel=3 pad=1
relu block4_relu1
conv block4_conv2 out=512 kernel=3 pad=1
relu block4_relu2
conv block4_conv3 out=512 kernel=3 pad=1
relu block4_relu3
maxpool block4_pool kernel=2
conv block5_conv1 out=512 kernel=3 pad=1
relu block5_relu1
conv block5_conv2 out=512 kernel=3 pad=1
relu block5_relu2
conv block5_conv3 out=512 kernel=3 pad=1
relu block5_relu3
maxpool block5_pool kernel=2
flatten flatten
dense fc1 out=4096
relu fc1_relu
dense fc2 out=4096
relu fc2_relu
dense fc3 out=1000
)";

}  // namespace

ModelProfile vgg16_profile() {
    std::istringstream in(kVgg16Text);
    ModelProfile p = parse_profile(in, "vgg16");
    return p;
}

ModelProfile profile_of(const ModelGraph& model, const std::string& name) {
    ModelProfile p;
    p.name = name;
    p.input_shape = model.input_shape();
    p.layers = model.layers();
    for (int i = 0; i < model.layer_count(); ++i) p.shapes.push_back(model.output_shape(i));
    return p;
}

namespace {

std::int64_t layer_mult_adds(const LayerSpec& spec, const std::vector<int>& out_shape,
                             int batch) {
    switch (spec.kind) {
        case LayerKind::Conv2D:
            return static_cast<std::int64_t>(batch) * out_shape[1] * out_shape[2] *
                   spec.out_channels * spec.in_channels * spec.kernel * spec.kernel;
        case LayerKind::Dense:
            return static_cast<std::int64_t>(batch) * spec.in_features * spec.out_features;
        default:
            return 0;
    }
}

}  // namespace

std::vector<LayerStat> layer_table(const ModelProfile& profile, int batch) {
    if (batch < 1) throw std::invalid_argument("batch must be >= 1");
    std::vector<LayerStat> out;
    out.reserve(profile.layers.size());
    for (std::size_t i = 0; i < profile.layers.size(); ++i) {
        const LayerSpec& spec = profile.layers[i];
        LayerStat st;
        st.name = spec.name;
        st.kind = to_string(spec.kind);
        st.output_shape.push_back(batch);
        for (int d : profile.shapes[i]) st.output_shape.push_back(d);
        st.param_count = layer_param_count(spec);
        st.mult_adds = layer_mult_adds(spec, profile.shapes[i], batch);
        out.push_back(std::move(st));
    }
    return out;
}

ModelStats model_stats(const ModelProfile& profile, int batch) {
    if (batch < 1) throw std::invalid_argument("batch must be >= 1");
    ModelStats stats;
    std::int64_t param_layer_elems = 0;
    for (std::size_t i = 0; i < profile.layers.size(); ++i) {
        const LayerSpec& spec = profile.layers[i];
        stats.total_params += layer_param_count(spec);
        stats.total_mult_adds += layer_mult_adds(spec, profile.shapes[i], batch);
        if (layer_has_params(spec)) param_layer_elems += Tensor::numel(profile.shapes[i]);
    }
    stats.trainable_params = stats.total_params;
    stats.input_bytes = 4ll * batch * Tensor::numel(profile.input_shape);
    stats.forward_backward_bytes = 2ll * 4ll * batch * param_layer_elems;
    stats.param_bytes = 4ll * stats.total_params;
    stats.estimated_total_bytes =
        stats.input_bytes + stats.forward_backward_bytes + stats.param_bytes;
    return stats;
}

std::int64_t range_mult_adds(const ModelProfile& profile, int first, int last, int batch) {
    if (first < 0 || last >= static_cast<int>(profile.layers.size()) || first > last)
        throw std::invalid_argument("bad layer range");
    std::int64_t total = 0;
    for (int i = first; i <= last; ++i)
        total += layer_mult_adds(profile.layers[static_cast<std::size_t>(i)],
                                 profile.shapes[static_cast<std::size_t>(i)], batch);
    return total;
}

int find_layer(const ModelProfile& profile, const std::string& name) {
    for (std::size_t i = 0; i < profile.layers.size(); ++i)
        if (profile.layers[i].name == name) return static_cast<int>(i);
    throw std::invalid_argument("profile " + profile.name + " has no layer named \"" + name +
                                "\"");
}

std::int64_t profile_payload_bytes(const ModelProfile& profile, int layer_index, double rho,
                                   bool* degenerate) {
    if (layer_index < 0 || layer_index >= static_cast<int>(profile.layers.size()))
        throw std::invalid_argument("layer index out of range");
    const LayerSpec& spec = profile.layers[static_cast<std::size_t>(layer_index)];
    if (!layer_has_spatial_output(spec))
        throw std::invalid_argument("layer \"" + spec.name +
                                    "\" has no spatial output; cannot split there");
    if (!(rho > 0.0) || !(rho < 1.0))
        throw std::invalid_argument("compression rate must be in (0, 1)");
    const std::vector<int>& shape = profile.shapes[static_cast<std::size_t>(layer_index)];
    const int z = shape[0];
    const int latent = static_cast<int>(std::ceil(rho * static_cast<double>(z)));
    if (degenerate) *degenerate = latent == z;
    return 4ll * latent * shape[1] * shape[2];
}

BottleneckCost bottleneck_cost(const ModelProfile& profile, int layer_index, double rho) {
    if (layer_index < 0 || layer_index >= static_cast<int>(profile.layers.size()))
        throw std::invalid_argument("layer index out of range");
    const LayerSpec& spec = profile.layers[static_cast<std::size_t>(layer_index)];
    if (!layer_has_spatial_output(spec))
        throw std::invalid_argument("layer \"" + spec.name +
                                    "\" has no spatial output; cannot split there");
    const std::vector<int>& shape = profile.shapes[static_cast<std::size_t>(layer_index)];
    const std::int64_t z = shape[0];
    const std::int64_t latent =
        static_cast<std::int64_t>(std::ceil(rho * static_cast<double>(z)));
    const std::int64_t area = static_cast<std::int64_t>(shape[1]) * shape[2];
    BottleneckCost cost;
    cost.encoder_mult_adds = area * latent * z * 9;
    cost.decoder_mult_adds = area * z * latent * 9;
    return cost;
}

double bytes_to_mb(std::int64_t bytes) { return static_cast<double>(bytes) / 1e6; }

}  // namespace splitsim
