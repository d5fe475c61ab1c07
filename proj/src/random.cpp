#include "cosetcox/random.hpp"

namespace cosetcox {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

namespace {

std::seed_seq make_seed_seq(std::uint64_t key) {
    const std::uint64_t a = splitmix64(key);
    const std::uint64_t b = splitmix64(a);
    return std::seed_seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                         static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
}

}  // namespace

RandomStream::RandomStream(std::uint64_t seed) : RandomStream(FromKey{}, splitmix64(seed)) {}

RandomStream::RandomStream(FromKey, std::uint64_t key) : key_(key) {
    auto seq = make_seed_seq(key_);
    engine_.seed(seq);
}

RandomStream RandomStream::split(std::uint64_t index) const {
    return RandomStream(FromKey{}, splitmix64(key_ ^ splitmix64(index + 0x632be59bd9b4e019ULL)));
}

RandomStream RandomStream::split(std::initializer_list<std::uint64_t> path) const {
    RandomStream s = *this;
    for (auto p : path) s = s.split(p);
    return s;
}

double RandomStream::uniform() {
    return std::uniform_real_distribution<double>(0.0, 1.0)(engine_);
}

double RandomStream::uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform();
}

std::uint64_t RandomStream::poisson(double mean) {
    if (!(mean > 0.0)) return 0;
    return std::poisson_distribution<std::uint64_t>(mean)(engine_);
}

bool RandomStream::bernoulli(double p) { return uniform() < p; }

double RandomStream::normal() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }

std::size_t RandomStream::index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
}

}  // namespace cosetcox
