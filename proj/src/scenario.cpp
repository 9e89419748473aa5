#include "splitsim/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "splitsim/rng.hpp"

namespace splitsim {

const char* to_string(Mode m) {
    switch (m) {
        case Mode::LC: return "lc";
        case Mode::RC: return "rc";
        case Mode::SC: return "sc";
    }
    return "?";
}

Mode mode_from_string(const std::string& s) {
    if (s == "lc" || s == "LC") return Mode::LC;
    if (s == "rc" || s == "RC") return Mode::RC;
    if (s == "sc" || s == "SC") return Mode::SC;
    throw std::invalid_argument("unknown mode \"" + s + "\"");
}

double frame_latency(Mode mode, std::int64_t edge_mult_adds, double completion_s,
                     std::int64_t server_mult_adds, const ComputeConfig& compute) {
    if (!(compute.edge_mult_adds_per_s > 0.0) || !(compute.server_mult_adds_per_s > 0.0))
        throw std::invalid_argument("compute rates must be > 0");
    switch (mode) {
        case Mode::LC:
            return static_cast<double>(edge_mult_adds) / compute.edge_mult_adds_per_s;
        case Mode::RC:
            return completion_s +
                   static_cast<double>(server_mult_adds) / compute.server_mult_adds_per_s;
        case Mode::SC:
            return static_cast<double>(edge_mult_adds) / compute.edge_mult_adds_per_s +
                   completion_s +
                   static_cast<double>(server_mult_adds) / compute.server_mult_adds_per_s;
    }
    throw std::invalid_argument("unknown mode");
}

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

void validate_common(const ScenarioConfig& cfg) {
    if (cfg.frame_count < 1) throw std::invalid_argument("frame_count must be >= 1");
    validate(cfg.channel);
    validate(cfg.transport);
    if (!(cfg.compute.edge_mult_adds_per_s > 0.0) ||
        !(cfg.compute.server_mult_adds_per_s > 0.0))
        throw std::invalid_argument("compute rates must be > 0");
}

void finalize_report(SimReport& report, const ScenarioConfig& cfg, int correct) {
    report.mode = cfg.mode;
    report.protocol = cfg.transport.protocol;
    report.total_frames = cfg.frame_count;
    report.accuracy = static_cast<double>(correct) / cfg.frame_count;
    if (report.frame_latencies_s.empty()) {
        report.mean_latency_s = kNan;
        report.p95_latency_s = kNan;
    } else {
        double total = 0.0;
        for (double v : report.frame_latencies_s) total += v;
        report.mean_latency_s = total / static_cast<double>(report.frame_latencies_s.size());
        std::vector<double> sorted = report.frame_latencies_s;
        std::sort(sorted.begin(), sorted.end());
        const std::size_t rank = static_cast<std::size_t>(
            std::ceil(0.95 * static_cast<double>(sorted.size())));
        report.p95_latency_s = sorted[rank == 0 ? 0 : rank - 1];
    }
    report.qos_pass = evaluate_qos(report, cfg.qos).pass;
}

// profile-mode RC/SC accuracy: the table value, scaled by the delivered share
void finalize_profile_report(SimReport& report, const ScenarioConfig& cfg,
                             double table_accuracy) {
    report.mode = cfg.mode;
    report.protocol = cfg.transport.protocol;
    report.total_frames = cfg.frame_count;
    const double delivered_share =
        static_cast<double>(cfg.frame_count - report.dropped_frames) / cfg.frame_count;
    report.accuracy = table_accuracy * delivered_share;
    if (report.frame_latencies_s.empty()) {
        report.mean_latency_s = kNan;
        report.p95_latency_s = kNan;
    } else {
        double total = 0.0;
        for (double v : report.frame_latencies_s) total += v;
        report.mean_latency_s = total / static_cast<double>(report.frame_latencies_s.size());
        std::vector<double> sorted = report.frame_latencies_s;
        std::sort(sorted.begin(), sorted.end());
        const std::size_t rank = static_cast<std::size_t>(
            std::ceil(0.95 * static_cast<double>(sorted.size())));
        report.p95_latency_s = sorted[rank == 0 ? 0 : rank - 1];
    }
    report.qos_pass = evaluate_qos(report, cfg.qos).pass;
}

// raw float32 input with undelivered elements zeroed, as the server decodes it
Tensor masked_input(const Tensor& input, const std::vector<std::uint8_t>& delivered) {
    Tensor out(input.shape);
    for (std::size_t i = 0; i < input.data.size(); ++i) {
        const std::size_t off = 4 * i;
        const bool complete = delivered[off] && delivered[off + 1] && delivered[off + 2] &&
                              delivered[off + 3];
        out.data[i] =
            complete ? static_cast<double>(static_cast<float>(input.data[i])) : 0.0;
    }
    return out;
}

}  // namespace

SimReport run_scenario(const ScenarioConfig& cfg, const ModelScenario& input) {
    validate_common(cfg);
    if (!input.frames || input.frames->size() == 0)
        throw std::invalid_argument("model scenario needs a non-empty frame set");
    if (cfg.mode == Mode::SC) {
        if (!input.plan) throw std::invalid_argument("SC scenario needs a split plan");
    } else if (!input.model) {
        throw std::invalid_argument("LC/RC scenario needs a model");
    }

    const Dataset& frames = *input.frames;
    SimReport report;
    int correct = 0;

    if (cfg.mode == Mode::LC) {
        const ModelProfile prof = profile_of(*input.model, "model");
        const std::int64_t total_ma =
            range_mult_adds(prof, 0, static_cast<int>(prof.layers.size()) - 1);
        const double latency =
            frame_latency(Mode::LC, total_ma, 0.0, 0, cfg.compute);
        for (int f = 0; f < cfg.frame_count; ++f) {
            const int item = f % frames.size();
            if (predict(*input.model, frames.inputs[static_cast<std::size_t>(item)]) ==
                frames.labels[item])
                ++correct;
            report.frame_latencies_s.push_back(latency);
        }
        finalize_report(report, cfg, correct);
        return report;
    }

    if (cfg.mode == Mode::RC) {
        const ModelProfile prof = profile_of(*input.model, "model");
        const std::int64_t total_ma =
            range_mult_adds(prof, 0, static_cast<int>(prof.layers.size()) - 1);
        const std::int64_t payload = 4 * Tensor::numel(input.model->input_shape());
        for (int f = 0; f < cfg.frame_count; ++f) {
            const int item = f % frames.size();
            DeliveryReport dr =
                transmit_frame(payload, cfg.channel, cfg.transport,
                               mix_seed(cfg.seed, static_cast<std::uint64_t>(f)));
            report.total_retransmissions += dr.retransmissions;
            if (dr.failed) {
                ++report.dropped_frames;
                continue;
            }
            const Tensor received =
                masked_input(frames.inputs[static_cast<std::size_t>(item)], dr.delivered);
            if (predict(*input.model, received) == frames.labels[item]) ++correct;
            report.frame_latencies_s.push_back(
                frame_latency(Mode::RC, 0, dr.completion_s, total_ma, cfg.compute));
        }
        finalize_report(report, cfg, correct);
        return report;
    }

    // SC
    const SplitPlan& plan = *input.plan;
    const ModelProfile prof = profile_of(plan.base, "model");
    const BottleneckSpec& bn = plan.bottleneck;
    const std::int64_t area = static_cast<std::int64_t>(bn.height) * bn.width;
    const std::int64_t enc_ma = area * bn.latent_channels * bn.channels * 9;
    const std::int64_t dec_ma = area * bn.channels * bn.latent_channels * 9;
    const std::int64_t head_ma = range_mult_adds(prof, 0, plan.head_end) + enc_ma;
    const std::int64_t tail_ma =
        dec_ma + range_mult_adds(prof, plan.head_end + 1,
                                 static_cast<int>(prof.layers.size()) - 1);
    const std::int64_t payload = payload_bytes(plan);
    for (int f = 0; f < cfg.frame_count; ++f) {
        const int item = f % frames.size();
        DeliveryReport dr = transmit_frame(payload, cfg.channel, cfg.transport,
                                           mix_seed(cfg.seed, static_cast<std::uint64_t>(f)));
        report.total_retransmissions += dr.retransmissions;
        if (dr.failed) {
            ++report.dropped_frames;
            continue;
        }
        if (split_infer(plan, frames.inputs[static_cast<std::size_t>(item)], dr.delivered) ==
            frames.labels[item])
            ++correct;
        report.frame_latencies_s.push_back(
            frame_latency(Mode::SC, head_ma, dr.completion_s, tail_ma, cfg.compute));
    }
    finalize_report(report, cfg, correct);
    return report;
}

SimReport run_scenario(const ScenarioConfig& cfg, const ProfileScenario& input) {
    validate_common(cfg);
    if (!input.profile) throw std::invalid_argument("profile scenario needs a profile");
    if (!(input.table_accuracy >= 0.0) || !(input.table_accuracy <= 1.0))
        throw std::invalid_argument("table accuracy must be in [0, 1]");

    const ModelProfile& prof = *input.profile;
    const int last = static_cast<int>(prof.layers.size()) - 1;
    const std::int64_t total_ma = range_mult_adds(prof, 0, last);
    SimReport report;

    if (cfg.mode == Mode::LC) {
        const double latency = frame_latency(Mode::LC, total_ma, 0.0, 0, cfg.compute);
        report.frame_latencies_s.assign(static_cast<std::size_t>(cfg.frame_count), latency);
        finalize_profile_report(report, cfg, input.table_accuracy);
        return report;
    }

    std::int64_t payload = 0;
    std::int64_t edge_ma = 0, server_ma = 0;
    if (cfg.mode == Mode::RC) {
        payload = 4 * Tensor::numel(prof.input_shape);
        server_ma = total_ma;
    } else {
        if (input.split_layer < 0)
            throw std::invalid_argument("SC scenario needs a split layer");
        payload = profile_payload_bytes(prof, input.split_layer, input.rho);
        const BottleneckCost bn = bottleneck_cost(prof, input.split_layer, input.rho);
        int head_end = input.split_layer;
        if (head_end + 1 <= last &&
            prof.layers[static_cast<std::size_t>(head_end + 1)].kind == LayerKind::ReLU)
            ++head_end;
        edge_ma = range_mult_adds(prof, 0, head_end) + bn.encoder_mult_adds;
        server_ma = bn.decoder_mult_adds +
                    (head_end == last ? 0 : range_mult_adds(prof, head_end + 1, last));
    }

    for (int f = 0; f < cfg.frame_count; ++f) {
        DeliveryReport dr = transmit_frame(payload, cfg.channel, cfg.transport,
                                           mix_seed(cfg.seed, static_cast<std::uint64_t>(f)));
        report.total_retransmissions += dr.retransmissions;
        if (dr.failed) {
            ++report.dropped_frames;
            continue;
        }
        report.frame_latencies_s.push_back(
            frame_latency(cfg.mode, edge_ma, dr.completion_s, server_ma, cfg.compute));
    }
    finalize_profile_report(report, cfg, input.table_accuracy);
    return report;
}

QosResult evaluate_qos(const SimReport& report, const QosConfig& qos) {
    QosResult out;
    const double latency_margin = qos.max_latency_s - report.p95_latency_s;
    const double accuracy_margin = report.accuracy - qos.min_accuracy;
    out.margin = std::min(latency_margin, accuracy_margin);
    const bool tcp_failed =
        report.protocol == Protocol::TCP && report.dropped_frames > 0;
    out.pass = !tcp_failed && report.p95_latency_s <= qos.max_latency_s &&
               report.accuracy >= qos.min_accuracy;
    if (std::isnan(out.margin)) out.pass = false;
    return out;
}

std::vector<AdviceEntry> advise(const std::vector<AdviceCandidate>& candidates,
                                const QosConfig& qos) {
    std::vector<AdviceEntry> entries;
    entries.reserve(candidates.size());
    for (const auto& c : candidates) {
        const QosResult q = evaluate_qos(c.report, qos);
        entries.push_back({c.label, q.pass, q.margin, c.report.accuracy,
                           c.report.mean_latency_s});
    }
    // NaN margins (no delivered frames) sort below any finite margin
    auto sane = [](double v) {
        return std::isnan(v) ? -std::numeric_limits<double>::infinity() : v;
    };
    std::sort(entries.begin(), entries.end(),
              [&](const AdviceEntry& a, const AdviceEntry& b) {
                  if (a.qos_pass != b.qos_pass) return a.qos_pass;
                  if (a.qos_pass) {
                      if (a.accuracy != b.accuracy) return a.accuracy > b.accuracy;
                      if (sane(a.mean_latency_s) != sane(b.mean_latency_s))
                          return sane(a.mean_latency_s) < sane(b.mean_latency_s);
                  } else if (sane(a.margin) != sane(b.margin)) {
                      return sane(a.margin) > sane(b.margin);
                  }
                  return a.label < b.label;
              });
    return entries;
}

}  // namespace splitsim
