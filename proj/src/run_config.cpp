#include "splitsim/run_config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace splitsim {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& msg) { throw ConfigError("config: " + msg); }

// Tracks which keys of an object were consumed; leftovers are schema errors.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) fail(path_ + " must be an object");
    }

    const json* take(const std::string& key) {
        seen_.insert(key);
        const auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    double number(const std::string& key, double fallback) {
        const json* v = take(key);
        if (!v) return fallback;
        if (!v->is_number()) fail(at(key) + " must be a number");
        return v->get<double>();
    }

    int integer(const std::string& key, int fallback) {
        const json* v = take(key);
        if (!v) return fallback;
        if (!v->is_number_integer()) fail(at(key) + " must be an integer");
        return v->get<int>();
    }

    std::uint64_t unsigned64(const std::string& key, bool required, std::uint64_t fallback) {
        const json* v = take(key);
        if (!v) {
            if (required) fail("missing required key \"" + at(key) + "\"");
            return fallback;
        }
        if (!v->is_number_integer() || (v->is_number_integer() && v->get<double>() < 0))
            fail(at(key) + " must be a non-negative integer");
        return v->get<std::uint64_t>();
    }

    std::string text(const std::string& key, const std::string& fallback) {
        const json* v = take(key);
        if (!v) return fallback;
        if (!v->is_string()) fail(at(key) + " must be a string");
        return v->get<std::string>();
    }

    std::vector<std::string> text_list(const std::string& key) {
        const json* v = take(key);
        std::vector<std::string> out;
        if (!v) return out;
        if (!v->is_array()) fail(at(key) + " must be an array of strings");
        for (const auto& item : *v) {
            if (!item.is_string()) fail(at(key) + " must contain only strings");
            out.push_back(item.get<std::string>());
        }
        return out;
    }

    std::map<std::string, double> number_map(const std::string& key) {
        const json* v = take(key);
        std::map<std::string, double> out;
        if (!v) return out;
        if (!v->is_object()) fail(at(key) + " must be an object of numbers");
        for (const auto& [k, item] : v->items()) {
            if (!item.is_number()) fail(at(key) + "." + k + " must be a number");
            out[k] = item.get<double>();
        }
        return out;
    }

    void finish() const {
        for (const auto& [key, value] : j_.items())
            if (!seen_.count(key)) fail(path_.empty() ? "unknown key \"" + key + "\""
                                                      : "unknown key \"" + at(key) + "\"");
    }

private:
    std::string at(const std::string& key) const {
        return path_.empty() ? key : path_ + "." + key;
    }

    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

void apply_override(json& root, const std::string& spec) {
    const std::size_t eq = spec.find('=');
    if (eq == std::string::npos || eq == 0)
        fail("--set expects KEY=VALUE, got \"" + spec + "\"");
    const std::string path = spec.substr(0, eq);
    const std::string raw = spec.substr(eq + 1);

    json value;
    try {
        value = json::parse(raw);
    } catch (const json::parse_error&) {
        value = raw;  // unquoted strings are convenient on the command line
    }

    json* node = &root;
    std::size_t start = 0;
    while (true) {
        const std::size_t dot = path.find('.', start);
        const std::string key = path.substr(start, dot - start);
        if (key.empty()) fail("--set key \"" + path + "\" has an empty segment");
        if (dot == std::string::npos) {
            (*node)[key] = value;
            return;
        }
        if (!node->contains(key)) (*node)[key] = json::object();
        node = &(*node)[key];
        if (!node->is_object()) fail("--set key \"" + path + "\" descends into a non-object");
        start = dot + 1;
    }
}

TrainConfig parse_training(Section& s, const TrainConfig& defaults, std::uint64_t seed) {
    TrainConfig cfg = defaults;
    cfg.seed = seed;
    cfg.epochs = s.integer("epochs", cfg.epochs);
    cfg.learning_rate = s.number("learning_rate", cfg.learning_rate);
    cfg.batch_size = s.integer("batch_size", cfg.batch_size);
    return cfg;
}

}  // namespace

RunConfig parse_run_config(const std::string& text, const std::string& source,
                           const std::vector<std::string>& overrides) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        fail(source + " is not valid JSON: " + e.what());
    }
    if (!root.is_object()) fail(source + " must hold a JSON object");
    for (const auto& o : overrides) apply_override(root, o);

    RunConfig cfg;
    cfg.training.epochs = 20;
    cfg.training.learning_rate = 5e-3;
    cfg.bottleneck_training.epochs = 50;
    cfg.bottleneck_training.learning_rate = 5e-4;
    cfg.finetune_training.epochs = 10;
    cfg.finetune_training.learning_rate = 1e-3;

    Section top(root, "");
    const json* schema = top.take("schema");
    if (!schema) fail("missing required key \"schema\"");
    if (!schema->is_number_integer() || schema->get<int>() != 1)
        fail("schema must be the integer 1");
    cfg.schema = 1;
    cfg.seed = top.unsigned64("seed", true, 0);

    if (const json* j = top.take("model")) {
        Section s(*j, "model");
        cfg.model_source = s.text("source", cfg.model_source);
        if (cfg.model_source != "toy" && cfg.model_source != "profile")
            fail("model.source must be \"toy\" or \"profile\"");
        cfg.num_classes = s.integer("num_classes", cfg.num_classes);
        cfg.profile_path = s.text("profile", cfg.profile_path);
        s.finish();
    }
    if (const json* j = top.take("dataset")) {
        Section s(*j, "dataset");
        cfg.train_items = s.integer("train_items", cfg.train_items);
        cfg.test_items = s.integer("test_items", cfg.test_items);
        s.finish();
    }
    if (const json* j = top.take("training")) {
        Section s(*j, "training");
        cfg.training = parse_training(s, cfg.training, cfg.seed);
        s.finish();
    } else {
        cfg.training.seed = cfg.seed;
    }
    if (const json* j = top.take("bottleneck")) {
        Section s(*j, "bottleneck");
        cfg.compression_rate = s.number("compression_rate", cfg.compression_rate);
        cfg.split_target = s.text("target", cfg.split_target);
        cfg.bottleneck_training.epochs = s.integer("epochs", cfg.bottleneck_training.epochs);
        cfg.bottleneck_training.learning_rate =
            s.number("learning_rate", cfg.bottleneck_training.learning_rate);
        cfg.bottleneck_training.batch_size =
            s.integer("batch_size", cfg.bottleneck_training.batch_size);
        cfg.finetune_training.epochs =
            s.integer("finetune_epochs", cfg.finetune_training.epochs);
        cfg.finetune_training.learning_rate =
            s.number("finetune_learning_rate", cfg.finetune_training.learning_rate);
        cfg.finetune_training.batch_size =
            s.integer("finetune_batch_size", cfg.finetune_training.batch_size);
        s.finish();
    }
    cfg.bottleneck_training.seed = cfg.seed;
    cfg.finetune_training.seed = cfg.seed;

    if (const json* j = top.take("network")) {
        Section s(*j, "network");
        try {
            cfg.transport.protocol = protocol_from_string(s.text("protocol", "tcp"));
        } catch (const std::invalid_argument& e) {
            fail(e.what());
        }
        cfg.channel.latency_s = s.number("latency_s", cfg.channel.latency_s);
        cfg.channel.capacity_bps = s.number("capacity_bps", cfg.channel.capacity_bps);
        cfg.channel.interface_bps = s.number("interface_bps", cfg.channel.interface_bps);
        cfg.channel.loss_rate = s.number("loss_rate", cfg.channel.loss_rate);
        cfg.transport.mtu_bytes = s.integer("mtu_bytes", cfg.transport.mtu_bytes);
        cfg.transport.window = s.integer("window_packets", cfg.transport.window);
        cfg.transport.rto_multiplier = s.number("rto_multiplier", cfg.transport.rto_multiplier);
        cfg.transport.max_retries = s.integer("max_retries", cfg.transport.max_retries);
        s.finish();
        try {
            validate(cfg.channel);
            validate(cfg.transport);
        } catch (const std::invalid_argument& e) {
            fail(std::string("network: ") + e.what());
        }
    }
    if (const json* j = top.take("compute")) {
        Section s(*j, "compute");
        cfg.compute.edge_mult_adds_per_s =
            s.number("edge_mult_adds_per_s", cfg.compute.edge_mult_adds_per_s);
        cfg.compute.server_mult_adds_per_s =
            s.number("server_mult_adds_per_s", cfg.compute.server_mult_adds_per_s);
        s.finish();
    }
    if (const json* j = top.take("qos")) {
        Section s(*j, "qos");
        cfg.qos.max_latency_s = s.number("max_latency_s", cfg.qos.max_latency_s);
        cfg.qos.min_accuracy = s.number("min_accuracy", cfg.qos.min_accuracy);
        s.finish();
    }
    if (const json* j = top.take("scenario")) {
        Section s(*j, "scenario");
        try {
            cfg.mode = mode_from_string(s.text("mode", to_string(cfg.mode)));
        } catch (const std::invalid_argument& e) {
            fail(e.what());
        }
        cfg.scenario_source = s.text("source", cfg.scenario_source);
        if (cfg.scenario_source != "model" && cfg.scenario_source != "profile")
            fail("scenario.source must be \"model\" or \"profile\"");
        cfg.frame_count = s.integer("frame_count", cfg.frame_count);
        if (const json* g = s.take("loss_rate_grid")) {
            if (!g->is_array()) fail("scenario.loss_rate_grid must be an array of numbers");
            if (g->empty())
                fail("scenario.loss_rate_grid must not be empty; omit it to sweep only "
                     "network.loss_rate");
            for (const auto& item : *g) {
                if (!item.is_number())
                    fail("scenario.loss_rate_grid must contain only numbers");
                cfg.loss_rate_grid.push_back(item.get<double>());
            }
        }
        cfg.splits = s.text_list("splits");
        cfg.accuracy_table = s.number_map("accuracy_table");
        s.finish();
    }
    if (const json* j = top.take("paths")) {
        Section s(*j, "paths");
        cfg.checkpoint_path = s.text("checkpoint", "");
        cfg.split_checkpoint_path = s.text("split_checkpoint", "");
        cfg.cs_csv_path = s.text("cs_csv", "");
        cfg.sweep_csv_path = s.text("sweep_csv", "");
        cfg.trace_csv_path = s.text("trace_csv", "");
        s.finish();
    }
    top.finish();

    if (cfg.num_classes < 2 || cfg.num_classes > 10)
        fail("model.num_classes must be in [2, 10]");
    if (cfg.train_items < 1 || cfg.test_items < 1)
        fail("dataset item counts must be >= 1");
    if (cfg.frame_count < 1) fail("scenario.frame_count must be >= 1");
    if (!(cfg.compression_rate > 0.0) || !(cfg.compression_rate < 1.0))
        fail("bottleneck.compression_rate must be in (0, 1)");
    for (double p : cfg.loss_rate_grid)
        if (!(p >= 0.0) || !(p <= 1.0)) fail("scenario.loss_rate_grid entries must be in [0, 1]");
    return cfg;
}

RunConfig load_run_config(const std::string& path, const std::vector<std::string>& overrides) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot read " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_run_config(buf.str(), path, overrides);
}

}  // namespace splitsim
