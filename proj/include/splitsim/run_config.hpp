#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "splitsim/netsim.hpp"
#include "splitsim/scenario.hpp"
#include "splitsim/train.hpp"

namespace splitsim {

// Configuration problems exit with a distinct code; anything else that throws
// is a runtime failure.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// One JSON file drives every subcommand; a command reads only the sections it
// needs. Parsing is strict: unknown keys anywhere are rejected by full path.
struct RunConfig {
    int schema = 1;
    std::uint64_t seed = 0;

    // model
    std::string model_source = "toy";  // "toy" | "profile"
    int num_classes = 4;
    std::string profile_path = "vgg16";  // file path, or the bundled "vgg16"

    // dataset
    int train_items = 2000;
    int test_items = 400;

    // training / bottleneck / finetune (seeds copied from the top-level seed)
    TrainConfig training;
    TrainConfig bottleneck_training;
    TrainConfig finetune_training;
    double compression_rate = 0.5;
    std::string split_target = "top-cs";  // "top-cs", a layer index, or a layer name

    ChannelConfig channel;
    TransportConfig transport;
    ComputeConfig compute;
    QosConfig qos;

    // scenario
    Mode mode = Mode::SC;
    std::string scenario_source = "profile";  // "model" | "profile"
    int frame_count = 200;
    std::vector<double> loss_rate_grid;       // empty -> just channel.loss_rate
    std::vector<std::string> splits;          // SC profile-mode candidates
    std::map<std::string, double> accuracy_table;

    // paths
    std::string checkpoint_path;
    std::string split_checkpoint_path;
    std::string cs_csv_path;
    std::string sweep_csv_path;
    std::string trace_csv_path;  // per-frame netsim events, frame 0 of each point
};

// `overrides` are KEY=VALUE pairs (dots select nested keys) applied onto the
// JSON before validation; values parse as JSON when possible, else as strings.
RunConfig load_run_config(const std::string& path, const std::vector<std::string>& overrides);
RunConfig parse_run_config(const std::string& text, const std::string& source,
                           const std::vector<std::string>& overrides);

}  // namespace splitsim
