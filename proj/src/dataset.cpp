#include "splitsim/dataset.hpp"

#include <cmath>
#include <cstdlib>
#include <stdexcept>

#include "splitsim/rng.hpp"

namespace splitsim {

std::vector<int> Dataset::histogram() const {
    std::vector<int> h(static_cast<std::size_t>(num_classes), 0);
    for (int lbl : labels) ++h[static_cast<std::size_t>(lbl)];
    return h;
}

namespace {

constexpr int kSide = 16;
constexpr double kNoiseSigma = 0.15;

// One motif painter per class, all drawing into a 16x16 canvas. `rng` supplies
// placement/size jitter; the same stream later supplies the pixel noise, so a
// painter must consume a fixed number of draws for a fixed jitter outcome.
void paint_motif(int cls, Rng& rng, double* img) {
    auto set = [&](int x, int y, double v) {
        if (x >= 0 && x < kSide && y >= 0 && y < kSide) img[y * kSide + x] = v;
    };
    const int cx = 6 + static_cast<int>(rng.below(4));
    const int cy = 6 + static_cast<int>(rng.below(4));
    switch (cls) {
        case 0: {  // disk
            const int r = 3 + static_cast<int>(rng.below(3));
            for (int y = 0; y < kSide; ++y)
                for (int x = 0; x < kSide; ++x)
                    if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r) set(x, y, 1.0);
            break;
        }
        case 1: {  // filled square
            const int h = 2 + static_cast<int>(rng.below(3));
            for (int y = cy - h; y <= cy + h; ++y)
                for (int x = cx - h; x <= cx + h; ++x) set(x, y, 1.0);
            break;
        }
        case 2: {  // plus sign
            const int arm = 4 + static_cast<int>(rng.below(3));
            const int t = static_cast<int>(rng.below(2));
            for (int d = -arm; d <= arm; ++d)
                for (int s = -t; s <= t; ++s) {
                    set(cx + d, cy + s, 1.0);
                    set(cx + s, cy + d, 1.0);
                }
            break;
        }
        case 3: {  // horizontal stripes
            const int period = 3 + static_cast<int>(rng.below(2));
            const int phase = static_cast<int>(rng.below(static_cast<std::uint64_t>(period)));
            for (int y = 0; y < kSide; ++y)
                if ((y + phase) % period == 0)
                    for (int x = 0; x < kSide; ++x) set(x, y, 1.0);
            break;
        }
        case 4: {  // vertical stripes
            const int period = 3 + static_cast<int>(rng.below(2));
            const int phase = static_cast<int>(rng.below(static_cast<std::uint64_t>(period)));
            for (int x = 0; x < kSide; ++x)
                if ((x + phase) % period == 0)
                    for (int y = 0; y < kSide; ++y) set(x, y, 1.0);
            break;
        }
        case 5: {  // ring
            const int ro = 4 + static_cast<int>(rng.below(3));
            const int ri = ro - 2;
            for (int y = 0; y < kSide; ++y)
                for (int x = 0; x < kSide; ++x) {
                    const int d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
                    if (d2 <= ro * ro && d2 > ri * ri) set(x, y, 1.0);
                }
            break;
        }
        case 6: {  // diamond
            const int r = 3 + static_cast<int>(rng.below(3));
            for (int y = 0; y < kSide; ++y)
                for (int x = 0; x < kSide; ++x)
                    if (std::abs(x - cx) + std::abs(y - cy) <= r) set(x, y, 1.0);
            break;
        }
        case 7: {  // checkerboard
            const int block = 2 + static_cast<int>(rng.below(2));
            const int phase = static_cast<int>(rng.below(2));
            for (int y = 0; y < kSide; ++y)
                for (int x = 0; x < kSide; ++x)
                    if ((x / block + y / block + phase) % 2 == 0) set(x, y, 1.0);
            break;
        }
        case 8: {  // right triangle anchored at the centre
            const int r = 4 + static_cast<int>(rng.below(3));
            for (int dy = 0; dy <= r; ++dy)
                for (int dx = 0; dx <= r - dy; ++dx) set(cx - 3 + dx, cy - 3 + dy, 1.0);
            break;
        }
        case 9: {  // dot lattice
            const int spacing = 3 + static_cast<int>(rng.below(2));
            const int phase = static_cast<int>(rng.below(static_cast<std::uint64_t>(spacing)));
            for (int y = phase; y < kSide; y += spacing)
                for (int x = phase; x < kSide; x += spacing) set(x, y, 1.0);
            break;
        }
        default:
            throw std::invalid_argument("no motif for class " + std::to_string(cls));
    }
}

Dataset make_split(std::uint64_t seed, std::uint64_t split_tag, const char* split_name,
                   int count, int num_classes) {
    Dataset ds;
    ds.num_classes = num_classes;
    ds.split = split_name;
    ds.inputs.reserve(static_cast<std::size_t>(count));
    ds.labels.reserve(static_cast<std::size_t>(count));
    const std::uint64_t stream = mix_seed(seed, split_tag);
    for (int i = 0; i < count; ++i) {
        Rng rng(mix_seed(stream, static_cast<std::uint64_t>(i)));
        const int cls = i % num_classes;
        Tensor img({1, kSide, kSide});
        paint_motif(cls, rng, img.data.data());
        for (double& v : img.data) v += kNoiseSigma * rng.gaussian();
        ds.inputs.push_back(std::move(img));
        ds.labels.push_back(cls);
    }
    return ds;
}

}  // namespace

std::pair<Dataset, Dataset> generate_dataset(std::uint64_t seed, int n_train, int n_test,
                                             int num_classes) {
    if (num_classes < 2 || num_classes > 10)
        throw std::invalid_argument("num_classes must be in [2, 10]");
    if (n_train < num_classes || n_test < num_classes)
        throw std::invalid_argument("need at least one item per class in each split");
    return {make_split(seed, 0x747261696eull, "train", n_train, num_classes),
            make_split(seed, 0x74657374ull, "test", n_test, num_classes)};
}

}  // namespace splitsim
