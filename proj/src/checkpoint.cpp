#include "splitsim/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "splitsim/split.hpp"

namespace splitsim {

namespace {

constexpr char kModelMagic[8] = {'S', 'S', 'C', 'K', 'P', 'T', '\0', '\1'};
constexpr char kSplitMagic[8] = {'S', 'S', 'S', 'P', 'L', 'T', '\0', '\1'};

void put_bytes(std::ostream& out, const void* p, std::size_t n) {
    out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

void get_bytes(std::istream& in, void* p, std::size_t n) {
    in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (!in) throw std::runtime_error("checkpoint truncated");
}

void put_u64(std::ostream& out, std::uint64_t v) {
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    put_bytes(out, b, 8);
}

std::uint64_t get_u64(std::istream& in) {
    unsigned char b[8];
    get_bytes(in, b, 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

void put_i32(std::ostream& out, std::int32_t v) {
    put_u64(out, static_cast<std::uint64_t>(static_cast<std::uint32_t>(v)));
}

std::int32_t get_i32(std::istream& in) {
    return static_cast<std::int32_t>(static_cast<std::uint32_t>(get_u64(in)));
}

void put_f64(std::ostream& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64(out, bits);
}

double get_f64(std::istream& in) {
    const std::uint64_t bits = get_u64(in);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

void put_f64_vec(std::ostream& out, const std::vector<double>& v) {
    put_u64(out, v.size());
    for (double x : v) put_f64(out, x);
}

std::vector<double> get_f64_vec(std::istream& in, std::size_t expected) {
    const std::uint64_t n = get_u64(in);
    if (n != expected) throw std::runtime_error("checkpoint parameter count mismatch");
    std::vector<double> v(n);
    for (std::uint64_t i = 0; i < n; ++i) v[i] = get_f64(in);
    return v;
}

void put_string(std::ostream& out, const std::string& s) {
    put_u64(out, s.size());
    put_bytes(out, s.data(), s.size());
}

std::string get_string(std::istream& in) {
    const std::uint64_t n = get_u64(in);
    if (n > 4096) throw std::runtime_error("checkpoint string too long");
    std::string s(n, '\0');
    if (n) get_bytes(in, s.data(), n);
    return s;
}

void put_spec(std::ostream& out, const LayerSpec& s) {
    put_i32(out, static_cast<std::int32_t>(s.kind));
    put_string(out, s.name);
    put_i32(out, s.in_channels);
    put_i32(out, s.out_channels);
    put_i32(out, s.kernel);
    put_i32(out, s.stride);
    put_i32(out, s.padding);
    put_i32(out, s.in_features);
    put_i32(out, s.out_features);
}

LayerSpec get_spec(std::istream& in) {
    LayerSpec s;
    const std::int32_t kind = get_i32(in);
    if (kind < 0 || kind > 4) throw std::runtime_error("checkpoint has unknown layer kind");
    s.kind = static_cast<LayerKind>(kind);
    s.name = get_string(in);
    s.in_channels = get_i32(in);
    s.out_channels = get_i32(in);
    s.kernel = get_i32(in);
    s.stride = get_i32(in);
    s.padding = get_i32(in);
    s.in_features = get_i32(in);
    s.out_features = get_i32(in);
    return s;
}

void put_params(std::ostream& out, const LayerParams& p) {
    put_f64_vec(out, p.w);
    put_f64_vec(out, p.b);
}

LayerParams get_params(std::istream& in, const LayerSpec& spec) {
    LayerParams p;
    p.w = get_f64_vec(in, static_cast<std::size_t>(layer_weight_count(spec)));
    p.b = get_f64_vec(in, static_cast<std::size_t>(layer_bias_count(spec)));
    return p;
}

void check_magic(std::istream& in, const char (&magic)[8], const char* what) {
    char got[8];
    get_bytes(in, got, 8);
    if (std::memcmp(got, magic, 6) != 0)
        throw std::runtime_error(std::string("not a ") + what + " checkpoint");
    if (got[6] != magic[6] || got[7] != magic[7])
        throw std::runtime_error(std::string(what) + " checkpoint has unsupported version");
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path);
    return out;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    return in;
}

}  // namespace

void save_checkpoint(const ModelGraph& model, std::ostream& out) {
    put_bytes(out, kModelMagic, 8);
    put_i32(out, model.num_classes());
    put_u64(out, model.input_shape().size());
    for (int d : model.input_shape()) put_i32(out, d);
    put_i32(out, model.trained_epochs);
    put_u64(out, model.layers().size());
    for (const auto& spec : model.layers()) put_spec(out, spec);
    for (const auto& p : model.params()) put_params(out, p);
    if (!out) throw std::runtime_error("checkpoint write failed");
}

ModelGraph load_checkpoint(std::istream& in) {
    check_magic(in, kModelMagic, "model");
    const int num_classes = get_i32(in);
    const std::uint64_t ndim = get_u64(in);
    if (ndim == 0 || ndim > 4) throw std::runtime_error("checkpoint has bad input rank");
    std::vector<int> input_shape(ndim);
    for (auto& d : input_shape) d = get_i32(in);
    const int trained_epochs = get_i32(in);
    const std::uint64_t n_layers = get_u64(in);
    if (n_layers == 0 || n_layers > 4096)
        throw std::runtime_error("checkpoint has bad layer count");
    std::vector<LayerSpec> specs;
    specs.reserve(n_layers);
    for (std::uint64_t i = 0; i < n_layers; ++i) specs.push_back(get_spec(in));
    ModelGraph model(std::move(input_shape), std::move(specs), num_classes);
    for (std::size_t i = 0; i < model.params().size(); ++i)
        model.params()[i] = get_params(in, model.layers()[i]);
    model.trained_epochs = trained_epochs;
    return model;
}

void save_checkpoint(const ModelGraph& model, const std::string& path) {
    auto out = open_out(path);
    save_checkpoint(model, out);
}

ModelGraph load_checkpoint(const std::string& path) {
    auto in = open_in(path);
    return load_checkpoint(in);
}

void save_split_checkpoint(const SplitPlan& plan, std::ostream& out) {
    put_bytes(out, kSplitMagic, 8);
    put_i32(out, plan.head_end);
    put_i32(out, plan.bottleneck.target_layer);
    put_f64(out, plan.bottleneck.compression_rate);
    put_i32(out, plan.bottleneck.channels);
    put_i32(out, plan.bottleneck.latent_channels);
    put_i32(out, plan.bottleneck.height);
    put_i32(out, plan.bottleneck.width);
    put_spec(out, plan.bottleneck.encoder_spec);
    put_spec(out, plan.bottleneck.decoder_spec);
    put_params(out, plan.bottleneck.encoder);
    put_params(out, plan.bottleneck.decoder);
    save_checkpoint(plan.base, out);
}

SplitPlan load_split_checkpoint(std::istream& in) {
    check_magic(in, kSplitMagic, "split");
    SplitPlan plan;
    plan.head_end = get_i32(in);
    plan.bottleneck.target_layer = get_i32(in);
    plan.bottleneck.compression_rate = get_f64(in);
    plan.bottleneck.channels = get_i32(in);
    plan.bottleneck.latent_channels = get_i32(in);
    plan.bottleneck.height = get_i32(in);
    plan.bottleneck.width = get_i32(in);
    plan.bottleneck.encoder_spec = get_spec(in);
    plan.bottleneck.decoder_spec = get_spec(in);
    plan.bottleneck.encoder = get_params(in, plan.bottleneck.encoder_spec);
    plan.bottleneck.decoder = get_params(in, plan.bottleneck.decoder_spec);
    plan.base = load_checkpoint(in);
    if (plan.head_end < 0 || plan.head_end >= plan.base.layer_count())
        throw std::runtime_error("split checkpoint is inconsistent");
    return plan;
}

void save_split_checkpoint(const SplitPlan& plan, const std::string& path) {
    auto out = open_out(path);
    save_split_checkpoint(plan, out);
}

SplitPlan load_split_checkpoint(const std::string& path) {
    auto in = open_in(path);
    return load_split_checkpoint(in);
}

}  // namespace splitsim
