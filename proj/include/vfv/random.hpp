#pragma once

// Reproducible per-sample random streams.
//
// A stream for (master_seed, stream_id) is std::mt19937_64 seeded through
// std::seed_seq with the four 32-bit words
//     { seed & 0xffffffff, seed >> 32, id & 0xffffffff, id >> 32 }.
// Both the engine and seed_seq are fully specified by the C++ standard, so the
// sequence is identical on every conforming implementation.  Uniform doubles
// take the top 53 bits of one engine output: u = (x >> 11) * 2^-53 in [0, 1).

#include <cstdint>
#include <random>

namespace vfv {

class RandomStream {
public:
    RandomStream(std::uint64_t master_seed, std::uint64_t stream_id)
    {
        std::seed_seq seq{static_cast<std::uint32_t>(master_seed & 0xffffffffu),
                          static_cast<std::uint32_t>(master_seed >> 32),
                          static_cast<std::uint32_t>(stream_id & 0xffffffffu),
                          static_cast<std::uint32_t>(stream_id >> 32)};
        engine_.seed(seq);
    }

    /// Uniform on [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform on [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

private:
    std::mt19937_64 engine_;
};

} // namespace vfv
