#pragma once

#include <iosfwd>
#include <string>

#include "splitsim/model.hpp"

namespace splitsim {

struct SplitPlan;

// Binary checkpoints, little-endian, bit-exact round trip. The stream variants
// back the pybind layer and tests; the path variants are what the CLI uses.
void save_checkpoint(const ModelGraph& model, std::ostream& out);
ModelGraph load_checkpoint(std::istream& in);
void save_checkpoint(const ModelGraph& model, const std::string& path);
ModelGraph load_checkpoint(const std::string& path);

void save_split_checkpoint(const SplitPlan& plan, std::ostream& out);
SplitPlan load_split_checkpoint(std::istream& in);
void save_split_checkpoint(const SplitPlan& plan, const std::string& path);
SplitPlan load_split_checkpoint(const std::string& path);

}  // namespace splitsim
