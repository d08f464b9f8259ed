#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace dislab {

// Deterministic random stream. Streams are derived from a master seed by
// (run index, label) so that concurrent runs never share state and results
// do not depend on task scheduling. Gaussian variates use Box-Muller on top
// of the raw 64-bit engine; consumption per draw is fixed, which keeps
// stream accounting exact across solver variants.
class RngStream {
  public:
    explicit RngStream(std::uint64_t seed) : gen_(seed) {}

    // uniform in (0, 1]
    double uniform() {
        return (static_cast<double>(gen_() >> 11) + 1.0) * 0x1.0p-53;
    }

    // uniform in [lo, hi)
    double uniform(double lo, double hi) {
        return lo + (hi - lo) * ((uniform() - 0x1.0p-53));
    }

    double normal();

    std::vector<double> normal_vec(std::size_t n);

    // categorical draw from weights that sum to 1
    std::size_t categorical(const std::vector<double>& weights);

    // uniform index in [0, n)
    std::size_t index(std::size_t n) {
        const auto i = static_cast<std::size_t>(uniform() * static_cast<double>(n));
        return i < n ? i : n - 1;
    }

    std::uint64_t raw() { return gen_(); }

  private:
    std::mt19937_64 gen_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// SplitMix64-style mixing of (master seed, run index, label) into a stream
// seed. Labels separate the independent randomness sources inside one run
// (ancestral noise, approximation noise, operator smoothing, ...), so that
// e.g. switching a solver's guidance on or off cannot shift the noise
// consumed by the diffusion path itself.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t run_index, std::string_view label);

inline RngStream make_stream(std::uint64_t master, std::uint64_t run_index, std::string_view label) {
    return RngStream(derive_seed(master, run_index, label));
}

}  // namespace dislab
