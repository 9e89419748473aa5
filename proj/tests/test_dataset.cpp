#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "splitsim/dataset.hpp"

using namespace splitsim;

TEST_SUITE("dataset") {

TEST_CASE("same seed twice gives bit-identical datasets") {
    const auto [tr1, te1] = generate_dataset(42, 60, 20, 4);
    const auto [tr2, te2] = generate_dataset(42, 60, 20, 4);
    REQUIRE(tr1.size() == tr2.size());
    for (int i = 0; i < tr1.size(); ++i) {
        CHECK(tr1.labels[static_cast<std::size_t>(i)] ==
              tr2.labels[static_cast<std::size_t>(i)]);
        REQUIRE(tr1.inputs[static_cast<std::size_t>(i)].data ==
                tr2.inputs[static_cast<std::size_t>(i)].data);
    }
    for (int i = 0; i < te1.size(); ++i)
        REQUIRE(te1.inputs[static_cast<std::size_t>(i)].data ==
                te2.inputs[static_cast<std::size_t>(i)].data);
}

TEST_CASE("histograms split evenly by construction") {
    const auto [tr, te] = generate_dataset(42, 2000, 400, 4);
    CHECK(tr.histogram() == std::vector<int>{500, 500, 500, 500});
    CHECK(te.histogram() == std::vector<int>{100, 100, 100, 100});
    CHECK(tr.split == "train");
    CHECK(te.split == "test");
}

TEST_CASE("uneven counts stay balanced within one item") {
    const auto [tr, te] = generate_dataset(7, 10, 5, 3);
    CHECK(tr.histogram() == std::vector<int>{4, 3, 3});
    CHECK(te.histogram() == std::vector<int>{2, 2, 1});
}

TEST_CASE("train and test inputs are disjoint") {
    const auto [tr, te] = generate_dataset(42, 300, 100, 4);
    for (const Tensor& t : te.inputs)
        for (const Tensor& s : tr.inputs) REQUIRE(t.data != s.data);
}

TEST_CASE("different seeds give different data") {
    const auto [tr1, te1] = generate_dataset(1, 10, 4, 4);
    const auto [tr2, te2] = generate_dataset(2, 10, 4, 4);
    CHECK(tr1.inputs[0].data != tr2.inputs[0].data);
}

TEST_CASE("inputs are 1x16x16 and labels cycle through classes") {
    const auto [tr, te] = generate_dataset(5, 12, 6, 5);
    for (const Tensor& t : tr.inputs) CHECK(t.shape == std::vector<int>{1, 16, 16});
    for (int i = 0; i < tr.size(); ++i)
        CHECK(tr.labels[static_cast<std::size_t>(i)] == i % 5);
    CHECK(tr.num_classes == 5);
}

TEST_CASE("preconditions are enforced") {
    CHECK_THROWS_AS(generate_dataset(1, 10, 4, 1), std::invalid_argument);
    CHECK_THROWS_AS(generate_dataset(1, 10, 4, 11), std::invalid_argument);
    CHECK_THROWS_AS(generate_dataset(1, 2, 4, 4), std::invalid_argument);
    CHECK_THROWS_AS(generate_dataset(1, 10, 2, 4), std::invalid_argument);
}

}  // TEST_SUITE
