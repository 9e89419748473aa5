#include "splitsim/layers.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace splitsim {

namespace {

[[noreturn]] void layer_error(int layer_index, const std::string& msg) {
    throw std::invalid_argument("layer " + std::to_string(layer_index) + ": " + msg);
}

int pool_stride(const LayerSpec& spec) {
    return spec.stride > 0 ? spec.stride : spec.kernel;
}

}  // namespace

const char* to_string(LayerKind kind) {
    switch (kind) {
        case LayerKind::Conv2D: return "Conv2D";
        case LayerKind::ReLU: return "ReLU";
        case LayerKind::MaxPool2D: return "MaxPool2D";
        case LayerKind::Flatten: return "Flatten";
        case LayerKind::Dense: return "Dense";
    }
    return "?";
}

LayerKind layer_kind_from_string(const std::string& s) {
    if (s == "Conv2D") return LayerKind::Conv2D;
    if (s == "ReLU") return LayerKind::ReLU;
    if (s == "MaxPool2D") return LayerKind::MaxPool2D;
    if (s == "Flatten") return LayerKind::Flatten;
    if (s == "Dense") return LayerKind::Dense;
    throw std::invalid_argument("unknown layer kind \"" + s + "\"");
}

LayerSpec make_conv(std::string name, int in_channels, int out_channels, int kernel,
                    int stride, int padding) {
    LayerSpec s;
    s.kind = LayerKind::Conv2D;
    s.name = std::move(name);
    s.in_channels = in_channels;
    s.out_channels = out_channels;
    s.kernel = kernel;
    s.stride = stride;
    s.padding = padding;
    return s;
}

LayerSpec make_relu(std::string name) {
    LayerSpec s;
    s.kind = LayerKind::ReLU;
    s.name = std::move(name);
    return s;
}

LayerSpec make_maxpool(std::string name, int kernel, int stride) {
    LayerSpec s;
    s.kind = LayerKind::MaxPool2D;
    s.name = std::move(name);
    s.kernel = kernel;
    s.stride = stride > 0 ? stride : kernel;
    return s;
}

LayerSpec make_flatten(std::string name) {
    LayerSpec s;
    s.kind = LayerKind::Flatten;
    s.name = std::move(name);
    return s;
}

LayerSpec make_dense(std::string name, int in_features, int out_features) {
    LayerSpec s;
    s.kind = LayerKind::Dense;
    s.name = std::move(name);
    s.in_features = in_features;
    s.out_features = out_features;
    return s;
}

bool layer_has_params(const LayerSpec& spec) {
    return spec.kind == LayerKind::Conv2D || spec.kind == LayerKind::Dense;
}

bool layer_has_spatial_output(const LayerSpec& spec) {
    return spec.kind == LayerKind::Conv2D || spec.kind == LayerKind::MaxPool2D;
}

std::int64_t layer_weight_count(const LayerSpec& spec) {
    switch (spec.kind) {
        case LayerKind::Conv2D:
            return static_cast<std::int64_t>(spec.kernel) * spec.kernel * spec.in_channels *
                   spec.out_channels;
        case LayerKind::Dense:
            return static_cast<std::int64_t>(spec.in_features) * spec.out_features;
        default:
            return 0;
    }
}

std::int64_t layer_bias_count(const LayerSpec& spec) {
    switch (spec.kind) {
        case LayerKind::Conv2D: return spec.out_channels;
        case LayerKind::Dense: return spec.out_features;
        default: return 0;
    }
}

std::int64_t layer_param_count(const LayerSpec& spec) {
    return layer_weight_count(spec) + layer_bias_count(spec);
}

std::vector<int> layer_output_shape(const LayerSpec& spec, const std::vector<int>& input,
                                    int layer_index) {
    switch (spec.kind) {
        case LayerKind::Conv2D: {
            if (input.size() != 3)
                layer_error(layer_index, "Conv2D expects a [c, h, w] input, got " +
                                             shape_string(input));
            const int c = input[0], h = input[1], w = input[2];
            if (spec.in_channels != c)
                layer_error(layer_index, "Conv2D expects " + std::to_string(spec.in_channels) +
                                             " input channels, got " + std::to_string(c));
            if (spec.kernel <= 0 || spec.stride <= 0 || spec.padding < 0 ||
                spec.out_channels <= 0)
                layer_error(layer_index, "bad Conv2D geometry");
            const int oh = (h + 2 * spec.padding - spec.kernel) / spec.stride + 1;
            const int ow = (w + 2 * spec.padding - spec.kernel) / spec.stride + 1;
            if (h + 2 * spec.padding < spec.kernel || w + 2 * spec.padding < spec.kernel)
                layer_error(layer_index, "Conv2D kernel larger than padded input");
            return {spec.out_channels, oh, ow};
        }
        case LayerKind::ReLU:
            return input;
        case LayerKind::MaxPool2D: {
            if (input.size() != 3)
                layer_error(layer_index, "MaxPool2D expects a [c, h, w] input, got " +
                                             shape_string(input));
            const int c = input[0], h = input[1], w = input[2];
            const int k = spec.kernel, st = pool_stride(spec);
            if (k <= 0 || st <= 0) layer_error(layer_index, "bad MaxPool2D geometry");
            if (h < k || w < k)
                layer_error(layer_index, "MaxPool2D window larger than input");
            return {c, (h - k) / st + 1, (w - k) / st + 1};
        }
        case LayerKind::Flatten: {
            std::int64_t n = Tensor::numel(input);
            if (n > std::numeric_limits<int>::max())
                layer_error(layer_index, "Flatten output too large");
            return {static_cast<int>(n)};
        }
        case LayerKind::Dense: {
            if (input.size() != 1)
                layer_error(layer_index,
                            "Dense expects a flat input, got " + shape_string(input));
            if (spec.in_features != input[0])
                layer_error(layer_index, "Dense expects " + std::to_string(spec.in_features) +
                                             " input features, got " + std::to_string(input[0]));
            if (spec.out_features <= 0) layer_error(layer_index, "bad Dense geometry");
            return {spec.out_features};
        }
    }
    layer_error(layer_index, "unknown layer kind");
}

void conv2d_forward(const LayerSpec& spec, const double* w, const double* b,
                    const Tensor& in, Tensor& out) {
    const int ic = spec.in_channels, oc = spec.out_channels;
    const int h = in.shape[1], wd = in.shape[2];
    const int oh = out.shape[1], ow = out.shape[2];
    const int k = spec.kernel, st = spec.stride, pad = spec.padding;
    for (int o = 0; o < oc; ++o) {
        const double* wo = w + static_cast<std::size_t>(o) * ic * k * k;
        for (int oy = 0; oy < oh; ++oy) {
            for (int ox = 0; ox < ow; ++ox) {
                double acc = b[o];
                const int y0 = oy * st - pad;
                const int x0 = ox * st - pad;
                for (int i = 0; i < ic; ++i) {
                    const double* wi = wo + static_cast<std::size_t>(i) * k * k;
                    for (int ky = 0; ky < k; ++ky) {
                        const int y = y0 + ky;
                        if (y < 0 || y >= h) continue;
                        for (int kx = 0; kx < k; ++kx) {
                            const int x = x0 + kx;
                            if (x < 0 || x >= wd) continue;
                            acc += wi[ky * k + kx] * in.data[idx3(i, y, x, h, wd)];
                        }
                    }
                }
                out.data[idx3(o, oy, ox, oh, ow)] = acc;
            }
        }
    }
}

void relu_forward(const Tensor& in, Tensor& out) {
    for (std::size_t i = 0; i < in.data.size(); ++i)
        out.data[i] = in.data[i] > 0.0 ? in.data[i] : 0.0;
}

void maxpool_forward(const LayerSpec& spec, const Tensor& in, Tensor& out) {
    const int c = in.shape[0], h = in.shape[1], w = in.shape[2];
    const int oh = out.shape[1], ow = out.shape[2];
    const int k = spec.kernel, st = pool_stride(spec);
    for (int i = 0; i < c; ++i) {
        for (int oy = 0; oy < oh; ++oy) {
            for (int ox = 0; ox < ow; ++ox) {
                double best = -std::numeric_limits<double>::infinity();
                for (int ky = 0; ky < k; ++ky)
                    for (int kx = 0; kx < k; ++kx)
                        best = std::max(best,
                                        in.data[idx3(i, oy * st + ky, ox * st + kx, h, w)]);
                out.data[idx3(i, oy, ox, oh, ow)] = best;
            }
        }
    }
}

void dense_forward(const LayerSpec& spec, const double* w, const double* b,
                   const Tensor& in, Tensor& out) {
    const int n_in = spec.in_features, n_out = spec.out_features;
    for (int o = 0; o < n_out; ++o) {
        double acc = b[o];
        const double* row = w + static_cast<std::size_t>(o) * n_in;
        for (int i = 0; i < n_in; ++i) acc += row[i] * in.data[i];
        out.data[o] = acc;
    }
}

void conv2d_backward(const LayerSpec& spec, const double* w, const Tensor& in,
                     const Tensor& dout, Tensor& din, double* dw, double* db) {
    const int ic = spec.in_channels, oc = spec.out_channels;
    const int h = in.shape[1], wd = in.shape[2];
    const int oh = dout.shape[1], ow = dout.shape[2];
    const int k = spec.kernel, st = spec.stride, pad = spec.padding;
    std::fill(din.data.begin(), din.data.end(), 0.0);
    for (int o = 0; o < oc; ++o) {
        const double* wo = w + static_cast<std::size_t>(o) * ic * k * k;
        double* dwo = dw + static_cast<std::size_t>(o) * ic * k * k;
        for (int oy = 0; oy < oh; ++oy) {
            for (int ox = 0; ox < ow; ++ox) {
                const double g = dout.data[idx3(o, oy, ox, oh, ow)];
                if (g == 0.0) continue;
                db[o] += g;
                const int y0 = oy * st - pad;
                const int x0 = ox * st - pad;
                for (int i = 0; i < ic; ++i) {
                    const double* wi = wo + static_cast<std::size_t>(i) * k * k;
                    double* dwi = dwo + static_cast<std::size_t>(i) * k * k;
                    for (int ky = 0; ky < k; ++ky) {
                        const int y = y0 + ky;
                        if (y < 0 || y >= h) continue;
                        for (int kx = 0; kx < k; ++kx) {
                            const int x = x0 + kx;
                            if (x < 0 || x >= wd) continue;
                            const std::size_t src = idx3(i, y, x, h, wd);
                            dwi[ky * k + kx] += g * in.data[src];
                            din.data[src] += g * wi[ky * k + kx];
                        }
                    }
                }
            }
        }
    }
}

void relu_backward(const Tensor& in, const Tensor& dout, Tensor& din) {
    for (std::size_t i = 0; i < in.data.size(); ++i)
        din.data[i] = in.data[i] > 0.0 ? dout.data[i] : 0.0;
}

void maxpool_backward(const LayerSpec& spec, const Tensor& in, const Tensor& dout,
                      Tensor& din) {
    const int c = in.shape[0], h = in.shape[1], w = in.shape[2];
    const int oh = dout.shape[0] == c ? dout.shape[1] : 0;
    const int ow = dout.shape.size() == 3 ? dout.shape[2] : 0;
    const int k = spec.kernel, st = pool_stride(spec);
    std::fill(din.data.begin(), din.data.end(), 0.0);
    for (int i = 0; i < c; ++i) {
        for (int oy = 0; oy < oh; ++oy) {
            for (int ox = 0; ox < ow; ++ox) {
                // gradient routes to the first occurrence of the window maximum
                double best = -std::numeric_limits<double>::infinity();
                std::size_t arg = 0;
                for (int ky = 0; ky < k; ++ky) {
                    for (int kx = 0; kx < k; ++kx) {
                        const std::size_t src = idx3(i, oy * st + ky, ox * st + kx, h, w);
                        if (in.data[src] > best) {
                            best = in.data[src];
                            arg = src;
                        }
                    }
                }
                din.data[arg] += dout.data[idx3(i, oy, ox, oh, ow)];
            }
        }
    }
}

void dense_backward(const LayerSpec& spec, const double* w, const Tensor& in,
                    const Tensor& dout, Tensor& din, double* dw, double* db) {
    const int n_in = spec.in_features, n_out = spec.out_features;
    std::fill(din.data.begin(), din.data.end(), 0.0);
    for (int o = 0; o < n_out; ++o) {
        const double g = dout.data[o];
        db[o] += g;
        const double* row = w + static_cast<std::size_t>(o) * n_in;
        double* drow = dw + static_cast<std::size_t>(o) * n_in;
        for (int i = 0; i < n_in; ++i) {
            drow[i] += g * in.data[i];
            din.data[i] += g * row[i];
        }
    }
}

}  // namespace splitsim
