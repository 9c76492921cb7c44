#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

namespace netwatch {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/* Derive a decorrelated seed for a named sub-stream (replication index,
 * phase-1 run, ...).  Replications seeded this way can run in any order or
 * in parallel and still reproduce bit-identically. */
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    return splitmix64(base ^ splitmix64(stream + 0xd1b54a32d192ed03ULL));
}

/* mt19937_64 plus the few draw helpers we need.  The helpers avoid
 * std::*_distribution so that identical seeds give identical streams on any
 * standard library. */
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

    std::uint64_t next() { return engine_(); }

    // uniform on [0,1) with 53 random bits
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return uniform01() < p; }

    // uniform integer in [0, n); rejection sampling keeps it unbiased
    std::uint64_t below(std::uint64_t n) {
        if (n == 0) return 0;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do { x = engine_(); } while (x >= limit);
        return x % n;
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i)
            std::swap(v[i - 1], v[below(i)]);
    }

    /* Floyd's algorithm: k distinct values from [0, n), returned sorted so
     * downstream consumption order is stable.  Draws nothing when k == 0. */
    std::vector<std::uint64_t> sample_distinct(std::uint64_t n, std::uint64_t k);

  private:
    std::mt19937_64 engine_;
};

inline std::vector<std::uint64_t> Rng::sample_distinct(std::uint64_t n, std::uint64_t k) {
    std::vector<std::uint64_t> out;
    out.reserve(k);
    for (std::uint64_t j = n - k; j < n; ++j) {
        std::uint64_t r = below(j + 1);
        bool dup = false;
        for (std::uint64_t v : out)
            if (v == r) { dup = true; break; }
        out.push_back(dup ? j : r);
    }
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace netwatch
