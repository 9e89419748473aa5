#include "splitsim/split.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include "splitsim/rng.hpp"

namespace splitsim {

namespace {

void run_layer(const LayerSpec& spec, const LayerParams& p, const Tensor& in, Tensor& out) {
    switch (spec.kind) {
        case LayerKind::Conv2D:
            conv2d_forward(spec, p.w.data(), p.b.data(), in, out);
            return;
        case LayerKind::ReLU:
            relu_forward(in, out);
            return;
        default:
            throw std::invalid_argument("unsupported bottleneck layer");
    }
}

Tensor conv_relu(const LayerSpec& spec, const LayerParams& p, const Tensor& in) {
    Tensor mid({spec.out_channels, in.shape[1], in.shape[2]});
    run_layer(spec, p, in, mid);
    Tensor out(mid.shape);
    relu_forward(mid, out);
    return out;
}

}  // namespace

SplitPlan make_split(const ModelGraph& model, int target_layer, double rho,
                     std::uint64_t seed) {
    if (target_layer < 0 || target_layer >= model.layer_count())
        throw std::invalid_argument("split layer index out of range");
    const LayerSpec& target = model.layers()[static_cast<std::size_t>(target_layer)];
    if (!layer_has_spatial_output(target))
        throw std::invalid_argument("layer " + std::to_string(target_layer) +
                                    " has no spatial output; cannot split there");
    if (!(rho > 0.0) || !(rho < 1.0))
        throw std::invalid_argument("compression rate must be in (0, 1)");

    SplitPlan plan;
    plan.base = model;
    plan.head_end = target_layer;
    // a ReLU fused to the split conv belongs to the head
    if (target_layer + 1 < model.layer_count() &&
        model.layers()[static_cast<std::size_t>(target_layer + 1)].kind == LayerKind::ReLU)
        plan.head_end = target_layer + 1;

    const std::vector<int>& shape = model.output_shape(plan.head_end);
    BottleneckSpec& bn = plan.bottleneck;
    bn.target_layer = target_layer;
    bn.compression_rate = rho;
    bn.channels = shape[0];
    bn.height = shape[1];
    bn.width = shape[2];
    bn.latent_channels =
        static_cast<int>(std::ceil(rho * static_cast<double>(bn.channels)));
    bn.encoder_spec = make_conv("bottleneck_enc", bn.channels, bn.latent_channels, 3, 1, 1);
    bn.decoder_spec = make_conv("bottleneck_dec", bn.latent_channels, bn.channels, 3, 1, 1);

    Rng rng(mix_seed(seed, 0xb0771eull));
    auto init = [&rng](const LayerSpec& spec, LayerParams& p) {
        p.w.assign(static_cast<std::size_t>(layer_weight_count(spec)), 0.0);
        p.b.assign(static_cast<std::size_t>(layer_bias_count(spec)), 0.0);
        const double limit =
            1.0 / std::sqrt(static_cast<double>(spec.kernel * spec.kernel * spec.in_channels));
        for (double& w : p.w) w = rng.uniform(-limit, limit);
    };
    init(bn.encoder_spec, bn.encoder);
    init(bn.decoder_spec, bn.decoder);
    return plan;
}

std::int64_t latent_elements(const SplitPlan& plan) {
    const BottleneckSpec& bn = plan.bottleneck;
    return static_cast<std::int64_t>(bn.latent_channels) * bn.height * bn.width;
}

std::int64_t payload_bytes(const SplitPlan& plan) { return 4 * latent_elements(plan); }

Tensor head_forward(const SplitPlan& plan, const Tensor& input) {
    if (!same_shape(input.shape, plan.base.input_shape()))
        throw std::invalid_argument("input shape does not match model");
    Tensor cur = input;
    for (int i = 0; i <= plan.head_end; ++i) {
        const LayerSpec& spec = plan.base.layers()[static_cast<std::size_t>(i)];
        const LayerParams& p = plan.base.params()[static_cast<std::size_t>(i)];
        Tensor out(plan.base.output_shape(i));
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
            default:
                throw std::invalid_argument("unexpected layer in head");
        }
        cur = std::move(out);
    }
    return cur;
}

Tensor encode(const SplitPlan& plan, const Tensor& split_activation) {
    return conv_relu(plan.bottleneck.encoder_spec, plan.bottleneck.encoder, split_activation);
}

Tensor decode(const SplitPlan& plan, const Tensor& latent) {
    return conv_relu(plan.bottleneck.decoder_spec, plan.bottleneck.decoder, latent);
}

Tensor tail_forward(const SplitPlan& plan, const Tensor& reconstruction) {
    Tensor cur = reconstruction;
    for (int i = plan.head_end + 1; i < plan.base.layer_count(); ++i) {
        const LayerSpec& spec = plan.base.layers()[static_cast<std::size_t>(i)];
        const LayerParams& p = plan.base.params()[static_cast<std::size_t>(i)];
        Tensor out(plan.base.output_shape(i));
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
        cur = std::move(out);
    }
    return cur;
}

ModelGraph make_spliced_model(const SplitPlan& plan) {
    std::vector<LayerSpec> layers;
    const std::vector<LayerSpec>& base = plan.base.layers();
    for (int i = 0; i <= plan.head_end; ++i)
        layers.push_back(base[static_cast<std::size_t>(i)]);
    layers.push_back(plan.bottleneck.encoder_spec);
    layers.push_back(make_relu("bottleneck_enc_relu"));
    layers.push_back(plan.bottleneck.decoder_spec);
    layers.push_back(make_relu("bottleneck_dec_relu"));
    for (int i = plan.head_end + 1; i < plan.base.layer_count(); ++i)
        layers.push_back(base[static_cast<std::size_t>(i)]);

    ModelGraph spliced(plan.base.input_shape(), std::move(layers), plan.base.num_classes());
    for (int i = 0; i <= plan.head_end; ++i)
        spliced.params()[static_cast<std::size_t>(i)] =
            plan.base.params()[static_cast<std::size_t>(i)];
    spliced.params()[static_cast<std::size_t>(plan.head_end + 1)] = plan.bottleneck.encoder;
    spliced.params()[static_cast<std::size_t>(plan.head_end + 3)] = plan.bottleneck.decoder;
    for (int i = plan.head_end + 1; i < plan.base.layer_count(); ++i)
        spliced.params()[static_cast<std::size_t>(i + 4)] =
            plan.base.params()[static_cast<std::size_t>(i)];
    return spliced;
}

namespace {

void copy_back_from_spliced(SplitPlan& plan, const ModelGraph& spliced) {
    for (int i = 0; i <= plan.head_end; ++i)
        plan.base.params()[static_cast<std::size_t>(i)] =
            spliced.params()[static_cast<std::size_t>(i)];
    plan.bottleneck.encoder = spliced.params()[static_cast<std::size_t>(plan.head_end + 1)];
    plan.bottleneck.decoder = spliced.params()[static_cast<std::size_t>(plan.head_end + 3)];
    for (int i = plan.head_end + 1; i < plan.base.layer_count(); ++i)
        plan.base.params()[static_cast<std::size_t>(i)] =
            spliced.params()[static_cast<std::size_t>(i + 4)];
}

}  // namespace

namespace {

// the latent crosses the network as float32
void quantize_f32(Tensor& t) {
    for (double& v : t.data) v = static_cast<double>(static_cast<float>(v));
}

}  // namespace

int split_predict(const SplitPlan& plan, const Tensor& input) {
    Tensor latent = encode(plan, head_forward(plan, input));
    quantize_f32(latent);
    Tensor logits = tail_forward(plan, decode(plan, latent));
    return static_cast<int>(std::max_element(logits.data.begin(), logits.data.end()) -
                            logits.data.begin());
}

BottleneckTrainResult train_bottleneck(SplitPlan& plan, const Dataset& train_data,
                                       const TrainConfig& cfg) {
    if (cfg.epochs < 1) throw std::invalid_argument("epochs must be >= 1");
    if (!(cfg.learning_rate > 0.0) || !(cfg.learning_rate < 1.0))
        throw std::invalid_argument("learning_rate must be in (0, 1)");
    if (cfg.batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    if (train_data.size() == 0) throw std::invalid_argument("training set is empty");

    // head activations are fixed while the base model is frozen
    const int n = train_data.size();
    std::vector<Tensor> targets;
    targets.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        targets.push_back(head_forward(plan, train_data.inputs[static_cast<std::size_t>(i)]));

    BottleneckSpec& bn = plan.bottleneck;
    LayerParams enc_m{std::vector<double>(bn.encoder.w.size(), 0.0),
                      std::vector<double>(bn.encoder.b.size(), 0.0)};
    LayerParams enc_v = enc_m, dec_m, dec_v;
    dec_m.w.assign(bn.decoder.w.size(), 0.0);
    dec_m.b.assign(bn.decoder.b.size(), 0.0);
    dec_v = dec_m;
    std::int64_t step = 0;

    Rng shuffle_rng(mix_seed(cfg.seed, 0x736875ull));
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;

    BottleneckTrainResult result;
    std::vector<double> item_loss(static_cast<std::size_t>(n), 0.0);
    LayerParams denc, ddec;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (int i = n - 1; i > 0; --i) {
            const int j = static_cast<int>(
                shuffle_rng.below(static_cast<std::uint64_t>(i) + 1));
            std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
        }
        for (int start = 0; start < n; start += cfg.batch_size) {
            const int count = std::min(cfg.batch_size, n - start);
            denc.w.assign(bn.encoder.w.size(), 0.0);
            denc.b.assign(bn.encoder.b.size(), 0.0);
            ddec.w.assign(bn.decoder.w.size(), 0.0);
            ddec.b.assign(bn.decoder.b.size(), 0.0);
            for (int k = 0; k < count; ++k) {
                const int item = order[static_cast<std::size_t>(start + k)];
                const Tensor& a = targets[static_cast<std::size_t>(item)];
                // forward: a -> enc -> relu -> dec -> relu -> x
                Tensor enc_pre({bn.latent_channels, bn.height, bn.width});
                conv2d_forward(bn.encoder_spec, bn.encoder.w.data(), bn.encoder.b.data(), a,
                               enc_pre);
                Tensor enc_post(enc_pre.shape);
                relu_forward(enc_pre, enc_post);
                Tensor dec_pre({bn.channels, bn.height, bn.width});
                conv2d_forward(bn.decoder_spec, bn.decoder.w.data(), bn.decoder.b.data(),
                               enc_post, dec_pre);
                Tensor x(dec_pre.shape);
                relu_forward(dec_pre, x);

                double loss = 0.0;
                Tensor dx(x.shape);
                for (std::size_t j = 0; j < x.data.size(); ++j) {
                    const double diff = x.data[j] - a.data[j];
                    loss += diff * diff;
                    dx.data[j] = 2.0 * diff;
                }
                item_loss[static_cast<std::size_t>(item)] = loss;

                Tensor ddec_pre(dec_pre.shape);
                relu_backward(dec_pre, dx, ddec_pre);
                Tensor denc_post(enc_post.shape);
                conv2d_backward(bn.decoder_spec, bn.decoder.w.data(), enc_post, ddec_pre,
                                denc_post, ddec.w.data(), ddec.b.data());
                Tensor denc_pre(enc_pre.shape);
                relu_backward(enc_pre, denc_post, denc_pre);
                Tensor da(a.shape);
                conv2d_backward(bn.encoder_spec, bn.encoder.w.data(), a, denc_pre, da,
                                denc.w.data(), denc.b.data());
            }
            ++step;
            const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
            const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
            const double inv = 1.0 / count;
            auto update = [&](std::vector<double>& p, std::vector<double>& g,
                              std::vector<double>& m, std::vector<double>& v) {
                for (std::size_t j = 0; j < p.size(); ++j) {
                    g[j] *= inv;
                    m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g[j];
                    v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g[j] * g[j];
                    p[j] -= cfg.learning_rate * (m[j] / bc1) /
                            (std::sqrt(v[j] / bc2) + cfg.epsilon);
                }
            };
            update(bn.encoder.w, denc.w, enc_m.w, enc_v.w);
            update(bn.encoder.b, denc.b, enc_m.b, enc_v.b);
            update(bn.decoder.w, ddec.w, dec_m.w, dec_v.w);
            update(bn.decoder.b, ddec.b, dec_m.b, dec_v.b);
        }
        double total = 0.0;
        for (double v : item_loss) total += v;
        const double mean = total / n;
        if (!std::isfinite(mean))
            throw std::runtime_error("bottleneck training diverged at epoch " +
                                     std::to_string(epoch));
        result.loss_history.push_back(mean);
    }
    return result;
}

SplitAccuracy finetune(SplitPlan& plan, const Dataset& train_data, const Dataset& test_data,
                       const TrainConfig& cfg) {
    if (cfg.epochs < 0) throw std::invalid_argument("epochs must be >= 0");
    if (test_data.size() == 0) throw std::invalid_argument("empty test set");

    if (cfg.epochs > 0) {
        ModelGraph spliced = make_spliced_model(plan);
        TrainConfig ft = cfg;
        ft.loss = LossKind::SquaredErrorSoftmax;
        train(spliced, train_data, ft);
        copy_back_from_spliced(plan, spliced);
    }

    SplitAccuracy out;
    int correct = 0;
    double mse_total = 0.0;
    for (int i = 0; i < test_data.size(); ++i) {
        const Tensor& input = test_data.inputs[static_cast<std::size_t>(i)];
        Tensor a = head_forward(plan, input);
        Tensor latent = encode(plan, a);
        quantize_f32(latent);
        Tensor x = decode(plan, latent);
        double se = 0.0;
        for (std::size_t j = 0; j < x.data.size(); ++j) {
            const double diff = x.data[j] - a.data[j];
            se += diff * diff;
        }
        mse_total += se / static_cast<double>(x.data.size());
        Tensor logits = tail_forward(plan, x);
        const int pred = static_cast<int>(
            std::max_element(logits.data.begin(), logits.data.end()) - logits.data.begin());
        if (pred == test_data.labels[i]) ++correct;
    }
    out.accuracy = static_cast<double>(correct) / test_data.size();
    out.reconstruction_mse = mse_total / test_data.size();
    return out;
}

int split_infer(const SplitPlan& plan, const Tensor& input,
                const std::vector<std::uint8_t>& delivered) {
    const std::int64_t payload = payload_bytes(plan);
    if (static_cast<std::int64_t>(delivered.size()) != payload)
        throw std::invalid_argument("delivered map has " + std::to_string(delivered.size()) +
                                    " bytes, expected " + std::to_string(payload));
    Tensor latent = encode(plan, head_forward(plan, input));

    // an element with any missing byte decodes to zero
    Tensor received(latent.shape);
    for (std::size_t i = 0; i < latent.data.size(); ++i) {
        const std::size_t off = 4 * i;
        const bool complete = delivered[off] && delivered[off + 1] && delivered[off + 2] &&
                              delivered[off + 3];
        received.data[i] =
            complete ? static_cast<double>(static_cast<float>(latent.data[i])) : 0.0;
    }
    Tensor logits = tail_forward(plan, decode(plan, received));
    return static_cast<int>(std::max_element(logits.data.begin(), logits.data.end()) -
                            logits.data.begin());
}

}  // namespace splitsim
