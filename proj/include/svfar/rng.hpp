#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace svfar {

/// Philox4x32-10 counter-based generator (Salmon et al., Random123).
///
/// A generator is identified by (seed, stream). Distinct streams under the
/// same seed are statistically independent, which is how replicates and
/// sub-tasks get their own randomness without sharing state. Output depends
/// only on (seed, stream, draw index), never on the platform's standard
/// library distributions.
class Rng {
public:
    using Block = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

    static Block philox(Block counter, Key key);

    std::uint32_t next_u32();
    std::uint64_t next_u64();

    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    /// Uniform on [lo, hi).
    double uniform(double lo, double hi);
    /// Unbiased integer in [0, bound) by rejection.
    std::uint64_t below(std::uint64_t bound);
    /// Standard normal via Box-Muller.
    double normal();

    /// Derive an independent child stream, e.g. one per replicate.
    Rng split(std::uint64_t child) const;

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream() const { return stream_; }

private:
    void refill();

    std::uint64_t seed_;
    std::uint64_t stream_;
    Key key_;
    std::uint64_t block_index_ = 0;
    Block buffer_{};
    int used_ = 4;
    bool have_spare_normal_ = false;
    double spare_normal_ = 0.0;
};

/// Fisher-Yates permutation of 0..n-1 driven by `rng`.
std::vector<std::size_t> permutation(std::size_t n, Rng& rng);

/// splitmix64 finaliser; used to mix seeds into stream identifiers.
std::uint64_t mix64(std::uint64_t x);

}  // namespace svfar
