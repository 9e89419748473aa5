#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "splitsim/dataset.hpp"
#include "splitsim/model.hpp"
#include "splitsim/netsim.hpp"
#include "splitsim/profile.hpp"
#include "splitsim/split.hpp"

namespace splitsim {

// Where the network runs: fully on the edge device (LC), fully on the server
// with raw inputs shipped over the channel (RC), or split with the compressed
// activation shipped (SC).
enum class Mode { LC, RC, SC };
const char* to_string(Mode m);
Mode mode_from_string(const std::string& s);

struct ComputeConfig {
    double edge_mult_adds_per_s = 1e11;
    double server_mult_adds_per_s = 1e12;
};

struct QosConfig {
    double max_latency_s = 0.05;
    double min_accuracy = 0.0;  // inclusive bound
};

struct ScenarioConfig {
    Mode mode = Mode::SC;
    int frame_count = 200;
    std::uint64_t seed = 0;
    ChannelConfig channel;
    TransportConfig transport;
    ComputeConfig compute;
    QosConfig qos;
};

struct SimReport {
    Mode mode = Mode::LC;
    Protocol protocol = Protocol::TCP;
    int total_frames = 0;
    int dropped_frames = 0;             // frames whose transmission failed
    double accuracy = 0.0;              // dropped frames count as misclassified
    double mean_latency_s = 0.0;        // over delivered frames; NaN when none
    double p95_latency_s = 0.0;         // nearest-rank; NaN when none
    bool qos_pass = false;
    std::int64_t total_retransmissions = 0;
    std::vector<double> frame_latencies_s;  // delivered frames, frame order
};

// Per-frame latency: edge compute + channel completion + server compute, with
// the terms a mode does not use left out entirely.
double frame_latency(Mode mode, std::int64_t edge_mult_adds, double completion_s,
                     std::int64_t server_mult_adds, const ComputeConfig& compute);

// Model mode: real inference on a trained model (LC/RC) or split plan (SC).
// Per-frame transmissions get seeds derived from (seed, frame index) alone, so
// loss-rate sweeps on the same seed are coupled.
struct ModelScenario {
    const ModelGraph* model = nullptr;   // LC and RC
    const SplitPlan* plan = nullptr;     // SC
    const Dataset* frames = nullptr;     // frames cycle through this set
};
SimReport run_scenario(const ScenarioConfig& cfg, const ModelScenario& input);

// Profile mode: latency from architecture statistics; accuracy is the supplied
// table value, degraded only by dropped frames.
struct ProfileScenario {
    const ModelProfile* profile = nullptr;
    int split_layer = -1;        // SC only
    double rho = 0.5;            // SC only
    double table_accuracy = 1.0;
};
SimReport run_scenario(const ScenarioConfig& cfg, const ProfileScenario& input);

struct QosResult {
    bool pass = false;
    double margin = 0.0;  // min(latency margin, accuracy margin)
};
QosResult evaluate_qos(const SimReport& report, const QosConfig& qos);

struct AdviceCandidate {
    std::string label;
    SimReport report;
};
struct AdviceEntry {
    std::string label;
    bool qos_pass = false;
    double margin = 0.0;
    double accuracy = 0.0;
    double mean_latency_s = 0.0;
};
// Passing candidates first (accuracy desc, then mean latency asc), failing ones
// after (margin desc). Label breaks the remaining ties. Failing entries carry
// qos_pass == false so callers can flag them.
std::vector<AdviceEntry> advise(const std::vector<AdviceCandidate>& candidates,
                                const QosConfig& qos);

}  // namespace splitsim
