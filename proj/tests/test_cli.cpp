#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "splitsim/checkpoint.hpp"
#include "splitsim/layers.hpp"
#include "splitsim/model.hpp"

using namespace splitsim;

namespace {

struct RunResult {
    int exit_code = -1;
    std::string output;  // stdout and stderr combined
};

RunResult run_cli(const std::string& args) {
    const std::string command = std::string(SPLITSIM_CLI_PATH) + " " + args + " 2>&1";
    FILE* pipe = popen(command.c_str(), "r");
    REQUIRE(pipe != nullptr);
    RunResult result;
    char buf[4096];
    std::size_t got;
    while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) result.output.append(buf, got);
    const int status = pclose(pipe);
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return result;
}

// unique scratch directory per test case, removed on destruction
struct TempDir {
    std::filesystem::path path;

    TempDir() {
        static int counter = 0;
        path = std::filesystem::temp_directory_path() /
               ("splitsim_cli_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter++));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }

    std::string file(const std::string& name) const { return (path / name).string(); }

    std::string write(const std::string& name, const std::string& content) const {
        const std::string p = file(name);
        std::ofstream out(p, std::ios::trunc);
        out << content;
        return p;
    }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

bool contains(const std::string& haystack, const std::string& needle) {
    return haystack.find(needle) != std::string::npos;
}

int count_lines(const std::string& text) {
    int n = 0;
    for (char c : text)
        if (c == '\n') ++n;
    return n;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("summary reproduces the vgg16 reference numbers") {
    const RunResult r = run_cli("summary vgg16 --batch 16");
    CHECK(r.exit_code == 0);
    CHECK(contains(r.output, "block1_conv1"));
    CHECK(contains(r.output, "1,792"));
    CHECK(contains(r.output, "total params:          138,357,544"));
    CHECK(contains(r.output, "total mult-adds:       247,524,229,120"));
    CHECK(contains(r.output, "forward/backward size: 1735.26 MB"));
    CHECK(contains(r.output, "estimated total size:  2298.32 MB"));
}

TEST_CASE("summary writes a per-layer csv on request") {
    const TempDir dir;
    const std::string csv = dir.file("layers.csv");
    const RunResult r = run_cli("summary vgg16 --batch 1 --csv " + csv);
    CHECK(r.exit_code == 0);
    const std::string text = slurp(csv);
    CHECK(contains(text, "layer_name,kind,output_shape,param_count,mult_adds"));
    CHECK(contains(text, "fc3,Dense,1x1000,4097000,4096000"));
    CHECK(count_lines(text) == 38);  // header + 37 layers
}

TEST_CASE("bad invocations exit with the config code") {
    CHECK(run_cli("").exit_code == 2);                      // no subcommand
    CHECK(run_cli("summarize vgg16").exit_code == 2);       // unknown subcommand
    CHECK(run_cli("summary").exit_code == 2);               // missing positional
    CHECK(run_cli("summary vgg16 --nope").exit_code == 2);  // unknown flag
    CHECK(run_cli("train").exit_code == 2);                 // missing --config

    const RunResult batch = run_cli("summary vgg16 --batch 0");
    CHECK(batch.exit_code == 2);
    CHECK(contains(batch.output, "--batch must be >= 1"));
}

TEST_CASE("runtime failures exit with the runtime code") {
    const RunResult r = run_cli("summary /nonexistent/net.profile");
    CHECK(r.exit_code == 3);
    CHECK(contains(r.output, "cannot read profile"));
}

TEST_CASE("config problems are reported with their key path") {
    const TempDir dir;

    const std::string no_seed = dir.write("no_seed.json", R"({"schema": 1})");
    const RunResult r1 = run_cli("train --config " + no_seed);
    CHECK(r1.exit_code == 2);
    CHECK(contains(r1.output, "missing required key \"seed\""));

    const std::string bad_json = dir.write("bad.json", "{");
    const RunResult r2 = run_cli("profile --config " + bad_json);
    CHECK(r2.exit_code == 2);
    CHECK(contains(r2.output, "not valid JSON"));

    const std::string unknown = dir.write("unknown.json",
                                          R"({"schema": 1, "seed": 1, "network": {"mtu": 9}})");
    const RunResult r3 = run_cli("simulate --config " + unknown);
    CHECK(r3.exit_code == 2);
    CHECK(contains(r3.output, "unknown key \"network.mtu\""));

    const RunResult r4 = run_cli("advise --config " + dir.file("missing.json"));
    CHECK(r4.exit_code == 2);
    CHECK(contains(r4.output, "cannot read"));

    // --set overrides flow through the same validation
    const std::string ok = dir.write("ok.json", R"({"schema": 1, "seed": 1})");
    const RunResult r5 = run_cli("simulate --config " + ok + " --set network.loss_rate=4");
    CHECK(r5.exit_code == 2);
    CHECK(contains(r5.output, "loss_rate must be in [0, 1]"));
}

TEST_CASE("a checkpoint too shallow for the saliency curve is rejected") {
    const TempDir dir;
    std::vector<LayerSpec> layers{make_conv("c1", 1, 4, 3, 1, 1), make_relu("r1"),
                                  make_maxpool("p1", 2), make_flatten("f"),
                                  make_dense("d1", 4 * 8 * 8, 4)};
    ModelGraph shallow({1, 16, 16}, layers, 4);
    shallow.init_params(1);
    const std::string ckpt = dir.file("shallow.ckpt");
    save_checkpoint(shallow, ckpt);

    const std::string cfg = dir.write("cfg.json", R"({
        "schema": 1, "seed": 1,
        "dataset": {"train_items": 20, "test_items": 10},
        "paths": {"checkpoint": ")" + ckpt + R"("}
    })");
    const RunResult r = run_cli("profile --config " + cfg);
    CHECK(r.exit_code == 2);
    CHECK(contains(r.output, "too shallow"));
}

TEST_CASE("train, profile, split, simulate and advise form a pipeline") {
    const TempDir dir;
    const std::string ckpt = dir.file("toy.ckpt");
    const std::string split_ckpt = dir.file("toy.split.ckpt");
    const std::string cs_csv = dir.file("cs.csv");
    const std::string sweep_csv = dir.file("sweep.csv");
    const std::string cfg = dir.write("cfg.json", R"({
        "schema": 1,
        "seed": 42,
        "dataset": {"train_items": 120, "test_items": 40},
        "training": {"epochs": 2, "batch_size": 16},
        "bottleneck": {"target": "3", "epochs": 3, "finetune_epochs": 1},
        "network": {"latency_s": 1e-4, "capacity_bps": 1e8, "interface_bps": 1e8},
        "scenario": {
            "mode": "sc", "source": "model", "frame_count": 20,
            "loss_rate_grid": [0, 0.05]
        },
        "qos": {"max_latency_s": 0.5, "min_accuracy": 0.0},
        "paths": {
            "checkpoint": ")" + ckpt + R"(",
            "split_checkpoint": ")" + split_ckpt + R"(",
            "cs_csv": ")" + cs_csv + R"(",
            "sweep_csv": ")" + sweep_csv + R"("
        }
    })");

    const RunResult train = run_cli("train --config " + cfg);
    CHECK(train.exit_code == 0);
    CHECK(contains(train.output, "trained 2 epochs on 120 items (4 classes)"));
    CHECK(contains(train.output, "checkpoint written to " + ckpt));
    CHECK(std::filesystem::exists(ckpt));

    const RunResult profile = run_cli("profile --config " + cfg);
    CHECK(profile.exit_code == 0);
    CHECK(contains(profile.output, "saliency curve written to " + cs_csv));
    const std::string cs = slurp(cs_csv);
    CHECK(contains(cs, "layer_index,layer_name,kind,cs_value,candidate_rank"));
    CHECK(count_lines(cs) == 6);  // header + one row per eligible layer

    const RunResult split = run_cli("split --config " + cfg);
    CHECK(split.exit_code == 0);
    CHECK(contains(split.output, "split after layer 3"));
    CHECK(contains(split.output, "16 -> 8 channels, payload 2048 bytes"));
    CHECK(contains(split.output, "split checkpoint written to " + split_ckpt));
    CHECK(std::filesystem::exists(split_ckpt));

    const RunResult sim = run_cli("simulate --config " + cfg);
    CHECK(sim.exit_code == 0);
    CHECK(contains(sim.output, "sweep written to " + sweep_csv));
    CHECK(contains(sim.output, "advisory"));
    const std::string sweep = slurp(sweep_csv);
    CHECK(contains(sweep,
                   "mode,split_layer,protocol,loss_rate,mean_latency_s,p95_latency_s,"
                   "accuracy,drop_rate,qos_pass"));
    CHECK(count_lines(sweep) == 3);  // header + one row per grid point

    const RunResult advise = run_cli("advise --config " + cfg);
    CHECK(advise.exit_code == 0);
    CHECK(contains(advise.output, "recommended:"));
}

TEST_CASE("simulate sweeps the vgg16 profile and recommends the deeper split") {
    const TempDir dir;
    const std::string sweep_csv = dir.file("sweep.csv");
    const std::string cfg = dir.write("cfg.json", R"({
        "schema": 1,
        "seed": 11,
        "model": {"source": "profile", "profile": "vgg16"},
        "network": {"latency_s": 1e-4, "capacity_bps": 1e9, "interface_bps": 1e9},
        "compute": {"edge_mult_adds_per_s": 2e12, "server_mult_adds_per_s": 2e12},
        "scenario": {
            "mode": "sc", "source": "profile", "frame_count": 20,
            "loss_rate_grid": [0, 0.05, 0.1],
            "splits": ["block4_conv2", "block5_conv2"]
        },
        "qos": {"max_latency_s": 0.012, "min_accuracy": 0.0},
        "paths": {"sweep_csv": ")" + sweep_csv + R"("}
    })");

    const RunResult r = run_cli("simulate --config " + cfg);
    CHECK(r.exit_code == 0);
    CHECK(contains(r.output, "recommended: block5_conv2"));
    CHECK(contains(r.output, "NOT-QOS"));

    const std::string first = slurp(sweep_csv);
    CHECK(count_lines(first) == 7);  // header + 2 candidates x 3 grid points
    CHECK(contains(first, "sc,block4_conv2,tcp,0.05"));
    CHECK(contains(first, "sc,block5_conv2,tcp,0.1"));

    // a repeated run must produce byte-identical output
    const RunResult again = run_cli("simulate --config " + cfg);
    CHECK(again.exit_code == 0);
    CHECK(slurp(sweep_csv) == first);
}

TEST_CASE("simulate records netsim events when asked for a trace") {
    const TempDir dir;
    const std::string sweep_csv = dir.file("sweep.csv");
    const std::string trace_csv = dir.file("trace.csv");
    const std::string cfg = dir.write("cfg.json", R"({
        "schema": 1,
        "seed": 3,
        "model": {"source": "profile", "profile": "vgg16"},
        "scenario": {"mode": "rc", "source": "profile", "frame_count": 5},
        "paths": {"sweep_csv": ")" + sweep_csv + R"("}
    })");

    const RunResult r =
        run_cli("simulate --config " + cfg + " --trace " + trace_csv);
    CHECK(r.exit_code == 0);
    const std::string trace = slurp(trace_csv);
    CHECK(contains(trace, "candidate,loss_rate,time_s,event,packet_seq"));
    CHECK(contains(trace, "send-complete"));
    CHECK(contains(trace, "arrival"));
    CHECK(count_lines(trace) > 2);
}

TEST_CASE("unwritable output paths are runtime failures") {
    const TempDir dir;
    const std::string cfg = dir.write("cfg.json", R"({
        "schema": 1, "seed": 1,
        "model": {"source": "profile", "profile": "vgg16"},
        "scenario": {"mode": "lc", "source": "profile", "frame_count": 2},
        "paths": {"sweep_csv": "/nonexistent/dir/sweep.csv"}
    })");
    const RunResult r = run_cli("simulate --config " + cfg);
    CHECK(r.exit_code == 3);
    CHECK(contains(r.output, "cannot write /nonexistent/dir/sweep.csv"));
}

}  // TEST_SUITE
