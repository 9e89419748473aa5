#include "splitsim/train.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "splitsim/rng.hpp"

namespace splitsim {

namespace {

struct AdamState {
    std::vector<LayerParams> m;
    std::vector<LayerParams> v;
    std::int64_t step = 0;
};

AdamState make_adam_state(const ModelGraph& model) {
    AdamState st;
    st.m.resize(model.params().size());
    st.v.resize(model.params().size());
    for (std::size_t i = 0; i < model.params().size(); ++i) {
        st.m[i].w.assign(model.params()[i].w.size(), 0.0);
        st.m[i].b.assign(model.params()[i].b.size(), 0.0);
        st.v[i].w.assign(model.params()[i].w.size(), 0.0);
        st.v[i].b.assign(model.params()[i].b.size(), 0.0);
    }
    return st;
}

void adam_update(std::vector<double>& p, const std::vector<double>& g,
                 std::vector<double>& m, std::vector<double>& v, const TrainConfig& cfg,
                 double bc1, double bc2) {
    for (std::size_t i = 0; i < p.size(); ++i) {
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        p[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.epsilon);
    }
}

void validate(const TrainConfig& cfg, const Dataset& data, const ModelGraph& model,
              const std::vector<int>& frozen) {
    if (cfg.epochs < 1) throw std::invalid_argument("epochs must be >= 1");
    if (!(cfg.learning_rate > 0.0) || !(cfg.learning_rate < 1.0))
        throw std::invalid_argument("learning_rate must be in (0, 1)");
    if (cfg.batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    if (data.size() == 0) throw std::invalid_argument("training set is empty");
    if (data.num_classes != model.num_classes())
        throw std::invalid_argument("dataset classes do not match model");
    for (int idx : frozen)
        if (idx < 0 || idx >= model.layer_count())
            throw std::invalid_argument("frozen layer index out of range");
}

}  // namespace

TrainResult train(ModelGraph& model, const Dataset& data, const TrainConfig& cfg,
                  const std::vector<int>& frozen_layers) {
    validate(cfg, data, model, frozen_layers);
    std::vector<char> frozen(static_cast<std::size_t>(model.layer_count()), 0);
    for (int idx : frozen_layers) frozen[static_cast<std::size_t>(idx)] = 1;

    const int n = data.size();
    AdamState adam = make_adam_state(model);
    Rng shuffle_rng(mix_seed(cfg.seed, 0x736875ull));
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;

    TrainResult result;
    std::vector<double> item_loss(static_cast<std::size_t>(n), 0.0);
    std::vector<LayerParams> grad_sum(model.params().size());

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        // Fisher-Yates with our own generator; std::shuffle is not portable
        for (int i = n - 1; i > 0; --i) {
            const int j = static_cast<int>(
                shuffle_rng.below(static_cast<std::uint64_t>(i) + 1));
            std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
        }

        for (int start = 0; start < n; start += cfg.batch_size) {
            const int count = std::min(cfg.batch_size, n - start);
            for (std::size_t l = 0; l < grad_sum.size(); ++l) {
                grad_sum[l].w.assign(model.params()[l].w.size(), 0.0);
                grad_sum[l].b.assign(model.params()[l].b.size(), 0.0);
            }
            for (int k = 0; k < count; ++k) {
                const int item = order[static_cast<std::size_t>(start + k)];
                const ScalarSelector sel =
                    cfg.loss == LossKind::CrossEntropy
                        ? ScalarSelector::cross_entropy(data.labels[item])
                        : ScalarSelector::squared_error_softmax(data.labels[item]);
                ForwardTrace trace;
                forward(model, data.inputs[static_cast<std::size_t>(item)], &trace);
                GradientStore g =
                    backward(model, data.inputs[static_cast<std::size_t>(item)], trace, sel);
                item_loss[static_cast<std::size_t>(item)] = g.value;
                for (std::size_t l = 0; l < grad_sum.size(); ++l) {
                    if (frozen[l]) continue;
                    for (std::size_t j = 0; j < grad_sum[l].w.size(); ++j)
                        grad_sum[l].w[j] += g.param_grads[l].w[j];
                    for (std::size_t j = 0; j < grad_sum[l].b.size(); ++j)
                        grad_sum[l].b[j] += g.param_grads[l].b[j];
                }
            }
            ++adam.step;
            const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(adam.step));
            const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(adam.step));
            const double inv = 1.0 / count;
            for (std::size_t l = 0; l < grad_sum.size(); ++l) {
                if (frozen[l] || (grad_sum[l].w.empty() && grad_sum[l].b.empty())) continue;
                for (double& v : grad_sum[l].w) v *= inv;
                for (double& v : grad_sum[l].b) v *= inv;
                adam_update(model.params()[l].w, grad_sum[l].w, adam.m[l].w, adam.v[l].w,
                            cfg, bc1, bc2);
                adam_update(model.params()[l].b, grad_sum[l].b, adam.m[l].b, adam.v[l].b,
                            cfg, bc1, bc2);
            }
        }

        double total = 0.0;
        for (double v : item_loss) total += v;
        const double mean = total / n;
        if (!std::isfinite(mean))
            throw std::runtime_error("training diverged: non-finite loss at epoch " +
                                     std::to_string(epoch));
        result.loss_history.push_back(mean);
        ++model.trained_epochs;
    }
    return result;
}

double evaluate_accuracy(const ModelGraph& model, const Dataset& data) {
    if (data.size() == 0) throw std::invalid_argument("empty evaluation set");
    int correct = 0;
    for (int i = 0; i < data.size(); ++i)
        if (predict(model, data.inputs[static_cast<std::size_t>(i)]) == data.labels[i])
            ++correct;
    return static_cast<double>(correct) / data.size();
}

}  // namespace splitsim
