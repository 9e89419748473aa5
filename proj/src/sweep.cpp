#include "splitsim/sweep.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include <fstream>

#include "splitsim/checkpoint.hpp"
#include "splitsim/dataset.hpp"
#include "splitsim/profile.hpp"
#include "splitsim/rng.hpp"
#include "splitsim/split.hpp"

namespace splitsim {

namespace {

struct Candidate {
    std::string label;
    // profile source
    int split_layer = -1;
    double table_accuracy = 1.0;
    // model source
    bool uses_model = false;
};

ScenarioConfig scenario_config(const RunConfig& cfg, double loss_rate) {
    ScenarioConfig s;
    s.mode = cfg.mode;
    s.frame_count = cfg.frame_count;
    s.seed = cfg.seed;
    s.channel = cfg.channel;
    s.channel.loss_rate = loss_rate;
    s.transport = cfg.transport;
    s.compute = cfg.compute;
    s.qos = cfg.qos;
    return s;
}

// worst grid point per candidate: min accuracy, max latencies, summed drops
SimReport aggregate_reports(const std::vector<const SimReport*>& reports) {
    SimReport agg = *reports.front();
    for (std::size_t i = 1; i < reports.size(); ++i) {
        const SimReport& r = *reports[i];
        agg.accuracy = std::min(agg.accuracy, r.accuracy);
        const bool worse_mean = !(agg.mean_latency_s >= r.mean_latency_s);
        if (worse_mean) agg.mean_latency_s = r.mean_latency_s;
        if (!(agg.p95_latency_s >= r.p95_latency_s)) agg.p95_latency_s = r.p95_latency_s;
        agg.dropped_frames += r.dropped_frames;
        agg.total_frames += r.total_frames;
        agg.total_retransmissions += r.total_retransmissions;
    }
    agg.frame_latencies_s.clear();
    return agg;
}

// Event dump for frame 0 of every (candidate, loss rate) pair; the seeds match
// what run_scenario uses, so the trace shows exactly what the sweep saw.
void emit_trace(const RunConfig& cfg, const std::vector<double>& grid,
                const std::vector<std::pair<std::string, std::int64_t>>& payloads) {
    std::ofstream out(cfg.trace_csv_path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + cfg.trace_csv_path);
    out << "candidate,loss_rate,time_s,event,packet_seq\n";
    for (const auto& [label, payload] : payloads) {
        if (payload <= 0) continue;  // local-only candidates never transmit
        for (double p : grid) {
            ChannelConfig channel = cfg.channel;
            channel.loss_rate = p;
            std::vector<TraceEvent> events;
            transmit_frame(payload, channel, cfg.transport, mix_seed(cfg.seed, 0), &events);
            for (const TraceEvent& ev : events)
                out << label << ',' << format_double(p) << ',' << format_double(ev.time_s)
                    << ',' << ev.kind << ',' << ev.packet_seq << '\n';
        }
    }
}

}  // namespace

SweepResult run_sweep(const RunConfig& cfg) {
    const std::vector<double> grid =
        cfg.loss_rate_grid.empty() ? std::vector<double>{cfg.channel.loss_rate}
                                   : cfg.loss_rate_grid;

    SweepResult result;
    std::vector<AdviceCandidate> advisory_input;
    std::vector<std::pair<std::string, std::int64_t>> payloads;

    if (cfg.scenario_source == "profile") {
        const ModelProfile profile =
            cfg.profile_path == "vgg16" ? vgg16_profile() : load_profile(cfg.profile_path);

        std::vector<Candidate> candidates;
        if (cfg.mode == Mode::SC) {
            if (cfg.splits.empty())
                throw ConfigError("config: scenario.splits must name at least one split "
                                  "layer for sc sweeps");
            for (const std::string& name : cfg.splits) {
                Candidate c;
                c.label = name;
                c.split_layer = find_layer(profile, name);
                const auto acc = cfg.accuracy_table.find(name);
                c.table_accuracy = acc == cfg.accuracy_table.end() ? 1.0 : acc->second;
                candidates.push_back(std::move(c));
            }
        } else {
            Candidate c;
            c.label = to_string(cfg.mode);
            const auto acc = cfg.accuracy_table.find(c.label);
            c.table_accuracy = acc == cfg.accuracy_table.end() ? 1.0 : acc->second;
            candidates.push_back(std::move(c));
        }

        for (const Candidate& cand : candidates) {
            if (cfg.mode == Mode::SC)
                payloads.emplace_back(cand.label, profile_payload_bytes(profile,
                                                                        cand.split_layer,
                                                                        cfg.compression_rate));
            else if (cfg.mode == Mode::RC)
                payloads.emplace_back(cand.label, 4 * Tensor::numel(profile.input_shape));
            else
                payloads.emplace_back(cand.label, 0);
            std::vector<SimReport> local;
            local.reserve(grid.size());
            for (double p : grid) {
                ProfileScenario in;
                in.profile = &profile;
                in.split_layer = cand.split_layer;
                in.rho = cfg.compression_rate;
                in.table_accuracy = cand.table_accuracy;
                local.push_back(run_scenario(scenario_config(cfg, p), in));
            }
            std::vector<const SimReport*> refs;
            for (const SimReport& r : local) refs.push_back(&r);
            advisory_input.push_back({cand.label, aggregate_reports(refs)});
            for (std::size_t gi = 0; gi < grid.size(); ++gi)
                result.points.push_back(
                    {cand.label, cfg.mode, grid[gi], std::move(local[gi])});
        }
    } else {
        if (cfg.checkpoint_path.empty() && cfg.mode != Mode::SC)
            throw ConfigError("config: paths.checkpoint is required for model scenarios");

        ModelGraph model;
        SplitPlan plan;
        std::string label = to_string(cfg.mode);
        if (cfg.mode == Mode::SC) {
            if (cfg.split_checkpoint_path.empty())
                throw ConfigError(
                    "config: paths.split_checkpoint is required for sc model scenarios");
            plan = load_split_checkpoint(cfg.split_checkpoint_path);
            label = plan.base.layers()[static_cast<std::size_t>(plan.bottleneck.target_layer)]
                        .name;
        } else {
            model = load_checkpoint(cfg.checkpoint_path);
        }
        const int classes =
            cfg.mode == Mode::SC ? plan.base.num_classes() : model.num_classes();
        const auto [train_data, test_data] =
            generate_dataset(cfg.seed, cfg.train_items, cfg.test_items, classes);
        (void)train_data;

        if (cfg.mode == Mode::SC)
            payloads.emplace_back(label, payload_bytes(plan));
        else if (cfg.mode == Mode::RC)
            payloads.emplace_back(label, 4 * Tensor::numel(model.input_shape()));
        else
            payloads.emplace_back(label, 0);

        std::vector<SimReport> local;
        local.reserve(grid.size());
        for (double p : grid) {
            ModelScenario in;
            in.model = cfg.mode == Mode::SC ? nullptr : &model;
            in.plan = cfg.mode == Mode::SC ? &plan : nullptr;
            in.frames = &test_data;
            local.push_back(run_scenario(scenario_config(cfg, p), in));
        }
        std::vector<const SimReport*> refs;
        for (const SimReport& r : local) refs.push_back(&r);
        advisory_input.push_back({label, aggregate_reports(refs)});
        for (std::size_t gi = 0; gi < grid.size(); ++gi)
            result.points.push_back({label, cfg.mode, grid[gi], std::move(local[gi])});
    }

    result.advisory = advise(advisory_input, cfg.qos);
    if (!cfg.trace_csv_path.empty()) emit_trace(cfg, grid, payloads);
    return result;
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

void write_sweep_csv(std::ostream& out, const SweepResult& result) {
    out << "mode,split_layer,protocol,loss_rate,mean_latency_s,p95_latency_s,accuracy,"
           "drop_rate,qos_pass\n";
    for (const SweepPoint& pt : result.points) {
        const SimReport& r = pt.report;
        const std::string split =
            pt.mode == Mode::SC ? pt.candidate : std::string("-");
        const double drop_rate =
            static_cast<double>(r.dropped_frames) / static_cast<double>(r.total_frames);
        out << to_string(pt.mode) << ',' << split << ',' << to_string(r.protocol) << ','
            << format_double(pt.loss_rate) << ',' << format_double(r.mean_latency_s) << ','
            << format_double(r.p95_latency_s) << ',' << format_double(r.accuracy) << ','
            << format_double(drop_rate) << ',' << (r.qos_pass ? 1 : 0) << '\n';
    }
}

}  // namespace splitsim
