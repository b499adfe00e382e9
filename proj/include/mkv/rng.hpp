#pragma once

#include <cstdint>

#include "mkv/common.hpp"

namespace mkv {

/// Counter-based random stream. Each draw is a pure function of
/// (key, counter), and substreams are derived by hashing labels into the
/// key, so a run can hand one logical substream to every
/// (iteration, time step) site and get the same numbers regardless of how
/// work is scheduled.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed);

    /// Derive an independent substream; the parent is not advanced.
    RngStream sub(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0) const;

    std::uint64_t next_u64();
    Real next_uniform();  // [0, 1)

    /// Standard normals via Box-Muller, filled row-major.
    Mat normal(int rows, int cols);
    Mat uniform(int rows, int cols, Real lo, Real hi);

    static std::uint64_t mix(std::uint64_t key, std::uint64_t label);

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace mkv
