#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "splitsim/tensor.hpp"

namespace splitsim {

struct Dataset {
    std::vector<Tensor> inputs;  // each [1, 16, 16]
    std::vector<int> labels;
    int num_classes = 0;
    std::string split;  // "train" or "test"

    int size() const { return static_cast<int>(inputs.size()); }
    std::vector<int> histogram() const;
};

// Procedural shape classification set: each class is a distinct grayscale motif
// (disk, square, cross, stripes, ...) with jittered placement/size plus gaussian
// pixel noise. Classes cycle 0,1,...,C-1 so counts split as evenly as possible.
// Train and test items draw from disjoint seeded streams. Bit-identical for a
// given (seed, n_train, n_test, num_classes).
std::pair<Dataset, Dataset> generate_dataset(std::uint64_t seed, int n_train, int n_test,
                                             int num_classes = 4);

}  // namespace splitsim
