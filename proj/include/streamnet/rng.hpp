#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace streamnet {

/// Seeded random source with pinned output mappings.
///
/// Engine: std::mt19937_64. Uniform and Gaussian variates are derived with
/// fixed formulas (not the standard-library distributions, whose algorithms
/// are implementation-defined), so a seed reproduces the same sequence on
/// any conforming toolchain:
///   uniform01 = (next() >> 11) * 2^-53                  in [0, 1)
///   normal    = trig Box-Muller, second variate cached
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform01();
        while (u1 == 0.0) u1 = uniform01();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * 3.141592653589793238462643383279502884 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace streamnet
