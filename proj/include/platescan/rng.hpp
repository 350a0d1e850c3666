#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace platescan {

// splitmix64 finalizer; derives independent stream seeds from (master, index)
// pairs so parallel per-entry work never depends on execution order.
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b = 0) {
    std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// mt19937_64 with hand-rolled distributions. The engine's output sequence is
// specified by the standard; std::uniform_*_distribution is not, so the
// distributions are spelled out here to keep results reproducible.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    // uniform in [0, n); n == 0 yields 0
    std::uint64_t uniform(std::uint64_t n) { return n ? engine_() % n : 0; }

    // uniform integer in [lo, hi] inclusive
    int uniform_int(int lo, int hi) {
        if (hi <= lo) return lo;
        return lo + static_cast<int>(uniform(static_cast<std::uint64_t>(hi - lo) + 1));
    }

    // uniform real in [lo, hi)
    double uniform_real(double lo, double hi) {
        double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
        return lo + u * (hi - lo);
    }

    // Box-Muller with cached spare
    double normal(double mean, double stddev) {
        if (have_spare_) {
            have_spare_ = false;
            return mean + stddev * spare_;
        }
        double u1 = 0.0;
        while (u1 <= 0.0) u1 = uniform_real(0.0, 1.0);
        double u2 = uniform_real(0.0, 1.0);
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return mean + stddev * r * std::cos(a);
    }

private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace platescan
