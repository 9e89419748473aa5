#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "splitsim/run_config.hpp"
#include "splitsim/scenario.hpp"

namespace splitsim {

struct SweepPoint {
    std::string candidate;   // layer name for SC, the mode name otherwise
    Mode mode = Mode::LC;
    double loss_rate = 0.0;
    SimReport report;
};

struct SweepResult {
    std::vector<SweepPoint> points;          // candidate-major, grid order inside
    std::vector<AdviceEntry> advisory;       // worst-case-over-grid ranking
};

// Runs the configured scenario over every candidate and loss-rate grid entry.
// Candidates come from scenario.splits (profile source, SC) or are the single
// configured mode. The advisory judges each candidate by its worst grid point:
// minimum accuracy, maximum latency, summed drops.
SweepResult run_sweep(const RunConfig& cfg);

// Deterministic CSV: one row per point, fixed ordering and formatting, so a
// repeated run produces byte-identical output.
void write_sweep_csv(std::ostream& out, const SweepResult& result);

std::string format_double(double v);  // shortest round-trip-ish "%.9g"

}  // namespace splitsim
