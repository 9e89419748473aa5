#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "splitsim/checkpoint.hpp"
#include "splitsim/dataset.hpp"
#include "splitsim/model.hpp"
#include "splitsim/netsim.hpp"
#include "splitsim/profile.hpp"
#include "splitsim/run_config.hpp"
#include "splitsim/saliency.hpp"
#include "splitsim/scenario.hpp"
#include "splitsim/split.hpp"
#include "splitsim/sweep.hpp"
#include "splitsim/train.hpp"

namespace {

using namespace splitsim;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

std::string with_commas(std::int64_t v) {
    const std::string plain = std::to_string(v);
    std::string out;
    int run = 0;
    for (auto it = plain.rbegin(); it != plain.rend(); ++it) {
        if (run && run % 3 == 0 && *it != '-') out += ',';
        out += *it;
        ++run;
    }
    return {out.rbegin(), out.rend()};
}

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path);
    return out;
}

Dataset test_split(const RunConfig& cfg, int num_classes) {
    return generate_dataset(cfg.seed, cfg.train_items, cfg.test_items, num_classes).second;
}

// ---- train ----------------------------------------------------------------

int cmd_train(const RunConfig& cfg) {
    if (cfg.model_source != "toy")
        throw ConfigError("config: only model.source == \"toy\" can be trained");
    if (cfg.checkpoint_path.empty())
        throw ConfigError("config: paths.checkpoint is required for train");

    auto [train_data, test_data] =
        generate_dataset(cfg.seed, cfg.train_items, cfg.test_items, cfg.num_classes);
    ModelGraph model = build_toy_cnn(cfg.num_classes, cfg.seed);
    const TrainResult result = train(model, train_data, cfg.training);
    const double accuracy = evaluate_accuracy(model, test_data);
    save_checkpoint(model, cfg.checkpoint_path);

    std::printf("trained %d epochs on %d items (%d classes)\n", cfg.training.epochs,
                train_data.size(), cfg.num_classes);
    std::printf("final train loss %.6f, test accuracy %.4f\n", result.loss_history.back(),
                accuracy);
    std::printf("checkpoint written to %s\n", cfg.checkpoint_path.c_str());
    return kExitOk;
}

// ---- profile --------------------------------------------------------------

void write_cs_csv(std::ostream& out, const ModelGraph& model, const CSCurve& curve) {
    out << "layer_index,layer_name,kind,cs_value,candidate_rank\n";
    for (std::size_t i = 0; i < curve.eligible_layers.size(); ++i) {
        const int layer = curve.eligible_layers[i];
        const LayerSpec& spec = model.layers()[static_cast<std::size_t>(layer)];
        int rank = 0;
        for (std::size_t c = 0; c < curve.candidates.size(); ++c)
            if (curve.candidates[c] == layer) rank = static_cast<int>(c) + 1;
        out << layer << ',' << spec.name << ',' << to_string(spec.kind) << ','
            << format_double(curve.values[i]) << ',';
        if (rank) out << rank;
        out << '\n';
    }
}

int cmd_profile(const RunConfig& cfg) {
    if (cfg.checkpoint_path.empty())
        throw ConfigError("config: paths.checkpoint is required for profile");
    const ModelGraph model = load_checkpoint(cfg.checkpoint_path);
    const Dataset test_data = test_split(cfg, model.num_classes());
    const CSCurve curve = cumulative_saliency(model, test_data);

    if (cfg.cs_csv_path.empty()) {
        write_cs_csv(std::cout, model, curve);
    } else {
        auto out = open_output(cfg.cs_csv_path);
        write_cs_csv(out, model, curve);
        std::printf("saliency curve written to %s\n", cfg.cs_csv_path.c_str());
    }
    if (curve.candidates.empty()) {
        std::printf("no interior saliency maxima: every split must be set explicitly\n");
    } else {
        std::printf("split candidates (best first):\n");
        for (int layer : curve.candidates) {
            const LayerSpec& spec = model.layers()[static_cast<std::size_t>(layer)];
            double value = 0.0;
            for (std::size_t i = 0; i < curve.eligible_layers.size(); ++i)
                if (curve.eligible_layers[i] == layer) value = curve.values[i];
            std::printf("  layer %d (%s), cs %.9g\n", layer, spec.name.c_str(), value);
        }
    }
    return kExitOk;
}

// ---- split ----------------------------------------------------------------

int resolve_split_target(const RunConfig& cfg, const ModelGraph& model,
                         const Dataset& test_data) {
    if (cfg.split_target == "top-cs") {
        const CSCurve curve = cumulative_saliency(model, test_data);
        if (curve.candidates.empty())
            throw std::runtime_error(
                "saliency curve has no interior maxima; set bottleneck.target explicitly");
        return curve.candidates.front();
    }
    try {
        std::size_t used = 0;
        const int idx = std::stoi(cfg.split_target, &used);
        if (used == cfg.split_target.size()) return idx;
    } catch (const std::exception&) {
    }
    for (int i = 0; i < model.layer_count(); ++i)
        if (model.layers()[static_cast<std::size_t>(i)].name == cfg.split_target) return i;
    throw ConfigError("config: bottleneck.target \"" + cfg.split_target +
                      "\" matches no layer");
}

int cmd_split(const RunConfig& cfg) {
    if (cfg.checkpoint_path.empty())
        throw ConfigError("config: paths.checkpoint is required for split");
    if (cfg.split_checkpoint_path.empty())
        throw ConfigError("config: paths.split_checkpoint is required for split");

    ModelGraph model = load_checkpoint(cfg.checkpoint_path);
    auto [train_data, test_data] =
        generate_dataset(cfg.seed, cfg.train_items, cfg.test_items, model.num_classes());
    const double base_accuracy = evaluate_accuracy(model, test_data);

    const int target = resolve_split_target(cfg, model, test_data);
    SplitPlan plan = make_split(model, target, cfg.compression_rate, cfg.seed);
    const BottleneckTrainResult bn = train_bottleneck(plan, train_data, cfg.bottleneck_training);
    const SplitAccuracy sa = finetune(plan, train_data, test_data, cfg.finetune_training);
    save_split_checkpoint(plan, cfg.split_checkpoint_path);

    const LayerSpec& spec = model.layers()[static_cast<std::size_t>(target)];
    std::printf("split after layer %d (%s): %d -> %d channels, payload %lld bytes\n", target,
                spec.name.c_str(), plan.bottleneck.channels, plan.bottleneck.latent_channels,
                static_cast<long long>(payload_bytes(plan)));
    std::printf("bottleneck loss %.6f -> %.6f over %d epochs\n", bn.loss_history.front(),
                bn.loss_history.back(), cfg.bottleneck_training.epochs);
    std::printf("test accuracy %.4f (unsplit %.4f), reconstruction mse %.6g\n", sa.accuracy,
                base_accuracy, sa.reconstruction_mse);
    std::printf("split checkpoint written to %s\n", cfg.split_checkpoint_path.c_str());
    return kExitOk;
}

// ---- simulate / advise ----------------------------------------------------

void print_advisory(const SweepResult& sweep) {
    std::printf("advisory (worst case across the loss grid):\n");
    for (const AdviceEntry& e : sweep.advisory) {
        std::printf("  %-8s %-16s margin %9.6f  accuracy %.4f  mean latency %.6g s\n",
                    e.qos_pass ? "PASS" : "NOT-QOS", e.label.c_str(), e.margin, e.accuracy,
                    e.mean_latency_s);
    }
    if (!sweep.advisory.empty() && sweep.advisory.front().qos_pass)
        std::printf("recommended: %s\n", sweep.advisory.front().label.c_str());
    else
        std::printf("recommended: none (no candidate meets the qos everywhere)\n");
}

int cmd_simulate(const RunConfig& cfg) {
    const SweepResult sweep = run_sweep(cfg);
    if (cfg.sweep_csv_path.empty()) {
        write_sweep_csv(std::cout, sweep);
    } else {
        auto out = open_output(cfg.sweep_csv_path);
        write_sweep_csv(out, sweep);
        std::printf("sweep written to %s (%zu rows)\n", cfg.sweep_csv_path.c_str(),
                    sweep.points.size());
        print_advisory(sweep);
    }
    return kExitOk;
}

int cmd_advise(const RunConfig& cfg) {
    const SweepResult sweep = run_sweep(cfg);
    print_advisory(sweep);
    return kExitOk;
}

// ---- summary ----------------------------------------------------------------

int cmd_summary(const std::string& profile_arg, int batch, const std::string& csv_path) {
    const ModelProfile profile =
        profile_arg == "vgg16" ? vgg16_profile() : load_profile(profile_arg);
    const std::vector<LayerStat> table = layer_table(profile, batch);
    const ModelStats stats = model_stats(profile, batch);

    if (!csv_path.empty()) {
        auto out = open_output(csv_path);
        out << "layer_name,kind,output_shape,param_count,mult_adds\n";
        for (const LayerStat& st : table) {
            out << st.name << ',' << st.kind << ',';
            for (std::size_t i = 0; i < st.output_shape.size(); ++i)
                out << (i ? "x" : "") << st.output_shape[i];
            out << ',' << st.param_count << ',' << st.mult_adds << '\n';
        }
    }

    std::printf("%-18s %-10s %-22s %16s %18s\n", "layer", "kind", "output shape", "params",
                "mult-adds");
    for (const LayerStat& st : table) {
        std::string shape = "[";
        for (std::size_t i = 0; i < st.output_shape.size(); ++i) {
            if (i) shape += ", ";
            shape += std::to_string(st.output_shape[i]);
        }
        shape += "]";
        std::printf("%-18s %-10s %-22s %16s %18s\n", st.name.c_str(), st.kind.c_str(),
                    shape.c_str(), with_commas(st.param_count).c_str(),
                    with_commas(st.mult_adds).c_str());
    }
    std::printf("\n");
    std::printf("total params:          %s\n", with_commas(stats.total_params).c_str());
    std::printf("trainable params:      %s\n", with_commas(stats.trainable_params).c_str());
    std::printf("total mult-adds:       %s\n", with_commas(stats.total_mult_adds).c_str());
    std::printf("input size:            %.2f MB\n", bytes_to_mb(stats.input_bytes));
    std::printf("forward/backward size: %.2f MB\n", bytes_to_mb(stats.forward_backward_bytes));
    std::printf("params size:           %.2f MB\n", bytes_to_mb(stats.param_bytes));
    std::printf("estimated total size:  %.2f MB\n", bytes_to_mb(stats.estimated_total_bytes));
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"split computing toolkit: train, profile, split, simulate"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    auto add_config_flags = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON run configuration")->required();
        sub->add_option("--set", overrides,
                        "override a config key, e.g. --set network.loss_rate=0.05");
    };

    CLI::App* train_cmd = app.add_subcommand("train", "train the toy model");
    add_config_flags(train_cmd);
    CLI::App* profile_cmd =
        app.add_subcommand("profile", "saliency curve and split candidates");
    add_config_flags(profile_cmd);
    CLI::App* split_cmd =
        app.add_subcommand("split", "insert and fine-tune a bottleneck");
    add_config_flags(split_cmd);
    CLI::App* simulate_cmd =
        app.add_subcommand("simulate", "sweep scenarios over the loss grid");
    add_config_flags(simulate_cmd);
    std::string trace_path;
    simulate_cmd->add_option("--trace", trace_path,
                             "write netsim events for frame 0 of each point");
    CLI::App* advise_cmd = app.add_subcommand("advise", "rank candidates against the qos");
    add_config_flags(advise_cmd);

    CLI::App* summary_cmd = app.add_subcommand("summary", "architecture statistics");
    std::string summary_profile;
    int summary_batch = 16;
    std::string summary_csv;
    summary_cmd->add_option("profile", summary_profile, "profile file or \"vgg16\"")
        ->required();
    summary_cmd->add_option("--batch", summary_batch, "batch size (default 16)");
    summary_cmd->add_option("--csv", summary_csv, "also write per-layer stats as CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (summary_cmd->parsed()) {
            if (summary_batch < 1) throw ConfigError("config: --batch must be >= 1");
            return cmd_summary(summary_profile, summary_batch, summary_csv);
        }
        RunConfig cfg = load_run_config(config_path, overrides);
        if (!trace_path.empty()) cfg.trace_csv_path = trace_path;
        if (train_cmd->parsed()) return cmd_train(cfg);
        if (profile_cmd->parsed()) return cmd_profile(cfg);
        if (split_cmd->parsed()) return cmd_split(cfg);
        if (simulate_cmd->parsed()) return cmd_simulate(cfg);
        if (advise_cmd->parsed()) return cmd_advise(cfg);
        std::fprintf(stderr, "error: no subcommand\n");
        return kExitConfig;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitConfig;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitRuntime;
    }
}
