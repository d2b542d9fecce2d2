#pragma once

#include <cstdint>
#include <random>

namespace lutpower {

// Deterministic stream derivation (splitmix64 finalizer).
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t salt);
std::uint64_t hash_name(std::uint64_t base, const std::string& name);

// mt19937_64 with hand-rolled uniform/normal draws: the engine's output
// sequence is standard-mandated, so generated corpora are reproducible across
// standard libraries, not just across reruns.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform01() {  // in [0, 1)
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    double normal(double sigma) {  // Box-Muller, one value per call pair
        if (have_spare_) {
            have_spare_ = false;
            return spare_ * sigma;
        }
        double u1 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        const double u2 = uniform01();
        const double mag = std::sqrt(-2.0 * std::log(u1));
        const double two_pi = 6.283185307179586476925286766559;
        spare_ = mag * std::sin(two_pi * u2);
        have_spare_ = true;
        return mag * std::cos(two_pi * u2) * sigma;
    }

  private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace lutpower
