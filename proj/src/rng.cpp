#include "mkv/rng.hpp"

#include <cmath>
#include <numbers>

namespace mkv {

namespace {

// splitmix64 finalizer
std::uint64_t splitmix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed) : key_(splitmix(seed)) {}

std::uint64_t RngStream::mix(std::uint64_t key, std::uint64_t label) {
    return splitmix(key ^ splitmix(label + 0x632be59bd9b4e019ULL));
}

RngStream RngStream::sub(std::uint64_t a, std::uint64_t b, std::uint64_t c) const {
    RngStream s(0);
    s.key_ = mix(mix(mix(key_, a), b), c);
    s.counter_ = 0;
    return s;
}

std::uint64_t RngStream::next_u64() { return splitmix(key_ + 0x9e3779b97f4a7c15ULL * ++counter_); }

Real RngStream::next_uniform() {
    return static_cast<Real>(next_u64() >> 11) * 0x1.0p-53;
}

Mat RngStream::normal(int rows, int cols) {
    Mat out(rows, cols);
    const long n = static_cast<long>(rows) * cols;
    Real spare = 0;
    bool has_spare = false;
    for (long i = 0; i < n; ++i) {
        Real z;
        if (has_spare) {
            z = spare;
            has_spare = false;
        } else {
            // u1 in (0, 1] so the log is finite
            const Real u1 = static_cast<Real>((next_u64() >> 11) + 1) * 0x1.0p-53;
            const Real u2 = next_uniform();
            const Real r = std::sqrt(-2.0 * std::log(u1));
            const Real a = 2.0 * std::numbers::pi_v<Real> * u2;
            z = r * std::cos(a);
            spare = r * std::sin(a);
            has_spare = true;
        }
        out(i / cols, i % cols) = z;
    }
    return out;
}

Mat RngStream::uniform(int rows, int cols, Real lo, Real hi) {
    Mat out(rows, cols);
    const long n = static_cast<long>(rows) * cols;
    for (long i = 0; i < n; ++i) out(i / cols, i % cols) = lo + (hi - lo) * next_uniform();
    return out;
}

}  // namespace mkv
