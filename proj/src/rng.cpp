#include "vibrancy/rng.hpp"

#include <cmath>

#include "vibrancy/errors.hpp"

namespace vibrancy {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

Rng::Rng(std::uint64_t seed) {
    std::uint64_t s = seed;
    for (auto& w : state_) w = splitmix64(s);
}

std::uint64_t Rng::next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
}

double Rng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

std::uint64_t Rng::uniform_index(std::uint64_t n) {
    if (n == 0) throw InvalidInput("uniform_index: n must be positive");
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t v;
    do {
        v = next_u64();
    } while (v >= limit);
    return v % n;
}

bool Rng::bernoulli(double p) { return uniform() < p; }

double Rng::normal() {
    // Avoid log(0); uniform() never returns 1 so 1-u is safe on that side.
    double u1 = 1.0 - uniform();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
}

double Rng::normal(double mean, double sd) { return mean + sd * normal(); }

std::int64_t Rng::poisson(double lambda) {
    if (lambda <= 0.0) return 0;
    std::int64_t total = 0;
    while (lambda > 500.0) {
        double half = lambda / 2.0;
        total += poisson(half);
        lambda -= half;
    }
    const double threshold = std::exp(-lambda);
    std::int64_t k = 0;
    double prod = uniform();
    while (prod > threshold) {
        ++k;
        prod *= uniform();
    }
    return total + k;
}

double Rng::gamma(double shape, double scale) {
    if (shape <= 0.0 || scale <= 0.0) throw InvalidInput("gamma: shape and scale must be positive");
    if (shape < 1.0) {
        double u = uniform();
        while (u <= 0.0) u = uniform();
        return gamma(shape + 1.0, scale) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    while (true) {
        double x, v;
        do {
            x = normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = uniform();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v * scale;
        if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v * scale;
    }
}

std::vector<double> Rng::dirichlet(const std::vector<double>& alpha) {
    std::vector<double> draws(alpha.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < alpha.size(); ++i) {
        draws[i] = gamma(alpha[i], 1.0);
        sum += draws[i];
    }
    for (auto& v : draws) v /= sum;
    return draws;
}

Rng Rng::fork(std::uint64_t stream_id) {
    std::uint64_t mix = next_u64() ^ (0x9e3779b97f4a7c15ULL * (stream_id + 1));
    return Rng(mix);
}

}  // namespace vibrancy
