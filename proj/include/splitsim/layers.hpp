#pragma once

#include <string>
#include <vector>

#include "splitsim/tensor.hpp"

namespace splitsim {

enum class LayerKind { Conv2D, ReLU, MaxPool2D, Flatten, Dense };

const char* to_string(LayerKind kind);
LayerKind layer_kind_from_string(const std::string& s);

struct LayerSpec {
    LayerKind kind = LayerKind::ReLU;
    std::string name;
    // Conv2D: in_channels, out_channels, kernel, stride, padding
    // MaxPool2D: kernel, stride (stride defaults to kernel when 0)
    int in_channels = 0;
    int out_channels = 0;
    int kernel = 0;
    int stride = 1;
    int padding = 0;
    // Dense
    int in_features = 0;
    int out_features = 0;
};

LayerSpec make_conv(std::string name, int in_channels, int out_channels, int kernel,
                    int stride = 1, int padding = 0);
LayerSpec make_relu(std::string name);
LayerSpec make_maxpool(std::string name, int kernel, int stride = 0);
LayerSpec make_flatten(std::string name);
LayerSpec make_dense(std::string name, int in_features, int out_features);

// True for layers that carry weights (Conv2D, Dense).
bool layer_has_params(const LayerSpec& spec);

// True for layers whose output is a spatial [channels, h, w] map (Conv2D, MaxPool2D).
bool layer_has_spatial_output(const LayerSpec& spec);

// Weight and bias element counts; zero for parameter-free layers.
std::int64_t layer_weight_count(const LayerSpec& spec);
std::int64_t layer_bias_count(const LayerSpec& spec);
std::int64_t layer_param_count(const LayerSpec& spec);

// Output shape given the input shape (no batch dimension). Throws
// std::invalid_argument naming `layer_index` on any mismatch.
std::vector<int> layer_output_shape(const LayerSpec& spec, const std::vector<int>& input,
                                    int layer_index);

struct LayerParams {
    std::vector<double> w;
    std::vector<double> b;
};

// Forward kernels. Output tensors must be pre-shaped by the caller.
void conv2d_forward(const LayerSpec& spec, const double* w, const double* b,
                    const Tensor& in, Tensor& out);
void relu_forward(const Tensor& in, Tensor& out);
void maxpool_forward(const LayerSpec& spec, const Tensor& in, Tensor& out);
void dense_forward(const LayerSpec& spec, const double* w, const double* b,
                   const Tensor& in, Tensor& out);

// Backward kernels: given d(scalar)/d(out), accumulate nothing -- they write
// d(scalar)/d(in) and, where applicable, add into dw/db.
void conv2d_backward(const LayerSpec& spec, const double* w, const Tensor& in,
                     const Tensor& dout, Tensor& din, double* dw, double* db);
void relu_backward(const Tensor& in, const Tensor& dout, Tensor& din);
void maxpool_backward(const LayerSpec& spec, const Tensor& in, const Tensor& dout,
                      Tensor& din);
void dense_backward(const LayerSpec& spec, const double* w, const Tensor& in,
                    const Tensor& dout, Tensor& din, double* dw, double* db);

}  // namespace splitsim
