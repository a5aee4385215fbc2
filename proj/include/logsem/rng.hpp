#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace logsem {

// Seeded RNG with fully specified output.  mt19937_64 is defined bit-for-bit
// by the standard; the distributions below are written out by hand because
// std::normal_distribution and friends are implementation defined and would
// break cross-compiler reproducibility.
class Rng {
  public:
    explicit Rng(uint64_t seed) : eng_(seed) {}

    uint64_t next_u64() { return eng_(); }

    // Uniform in [0, 1).  53-bit mantissa path, portable.
    double uniform() {
        return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n).  Rejection-free modulo is fine here: n is
    // always tiny relative to 2^64 so the bias is far below test tolerances,
    // but we still use Lemire-style rejection to keep draws exact.
    uint64_t uniform_index(uint64_t n) {
        if (n == 0) return 0;
        uint64_t threshold = (0 - n) % n;
        for (;;) {
            uint64_t r = eng_();
            if (r >= threshold) return r % n;
        }
    }

    // Standard normal via Box-Muller.  One spare value is cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 0.0, u2 = 0.0;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        u2 = uniform();
        double mag = std::sqrt(-2.0 * std::log(u1));
        double ang = 6.283185307179586476925286766559 * u2;
        spare_ = mag * std::sin(ang);
        has_spare_ = true;
        return mag * std::cos(ang);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    // Derive an independent stream; used to hand one seed tree to threads
    // and submodules without correlated draws.
    Rng fork(uint64_t salt) {
        uint64_t s = eng_() ^ (0x9e3779b97f4a7c15ULL * (salt + 1));
        return Rng(s);
    }

  private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// Fisher-Yates shuffle driven by Rng, again to stay portable where
// std::shuffle would not be.
template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
    for (size_t i = v.size(); i > 1; --i) {
        size_t j = static_cast<size_t>(rng.uniform_index(i));
        std::swap(v[i - 1], v[j]);
    }
}

}  // namespace logsem
