#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace xdjdl {

// mt19937_64 output is pinned by the standard; the distributions are not.
// These transforms keep seeded runs byte-identical across toolchains.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    // uniform in [0, n); modulo bias is irrelevant for the n << 2^64 used here
    std::size_t uniform_index(std::size_t n) { return static_cast<std::size_t>(eng_() % n); }

    double uniform01() {
        return (eng_() >> 11) * 0x1.0p-53; // 53 random bits -> [0,1)
    }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0, u2 = 0.0;
        do {
            u1 = uniform01();
        } while (u1 <= 0.0);
        u2 = uniform01();
        const double mag = std::sqrt(-2.0 * std::log(u1));
        const double two_pi = 6.283185307179586476925286766559;
        spare_ = mag * std::sin(two_pi * u2);
        have_spare_ = true;
        return mag * std::cos(two_pi * u2);
    }

    // first k entries of a Fisher-Yates pass over 0..n-1 (sample w/o replacement)
    std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k) {
        std::vector<std::size_t> idx(n);
        for (std::size_t i = 0; i < n; ++i) idx[i] = i;
        for (std::size_t i = 0; i < k && i + 1 < n; ++i) {
            const std::size_t j = i + uniform_index(n - i);
            std::swap(idx[i], idx[j]);
        }
        idx.resize(k <= n ? k : n);
        return idx;
    }

  private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace xdjdl
