#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace cosetcox {

/// Deterministic, splittable random stream.
///
/// A stream is identified by a 64-bit key derived from (seed, task path).
/// `split(i)` yields an independent child stream for logical subtask `i`;
/// the child does not depend on how much of the parent has been consumed,
/// so replicate loops produce identical results regardless of scheduling.
class RandomStream {
public:
    using engine_type = std::mt19937_64;

    explicit RandomStream(std::uint64_t seed);

    RandomStream split(std::uint64_t index) const;
    RandomStream split(std::initializer_list<std::uint64_t> path) const;

    std::uint64_t key() const noexcept { return key_; }

    engine_type& engine() noexcept { return engine_; }

    /// Uniform on [0, 1).
    double uniform();
    double uniform(double lo, double hi);
    std::uint64_t poisson(double mean);
    bool bernoulli(double p);
    double normal();
    /// Uniform index in [0, n).
    std::size_t index(std::size_t n);

private:
    struct FromKey {};
    RandomStream(FromKey, std::uint64_t key);

    std::uint64_t key_;
    engine_type engine_;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

}  // namespace cosetcox
