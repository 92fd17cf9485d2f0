#pragma once

#include <cstdint>
#include <vector>

namespace vibrancy {

// xoshiro256++ (Blackman & Vigna), state seeded from the 64-bit run seed via
// splitmix64. Both algorithms are fully specified, so identical seeds yield
// identical streams on every platform and in every language with a conforming
// implementation. All distribution samplers below are built only on next_u64()
// so they inherit that portability (standard-library distributions are not
// reproducible across implementations).
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();

    // Uniform on [0,1) with 53 random mantissa bits.
    double uniform();
    double uniform(double lo, double hi);
    // Uniform integer on [0, n), n > 0, via rejection (unbiased).
    std::uint64_t uniform_index(std::uint64_t n);

    bool bernoulli(double p);

    // Standard normal via Box-Muller (two uniforms per draw, no cached spare,
    // so the stream position is a pure function of the call count).
    double normal();
    double normal(double mean, double sd);

    // Poisson: Knuth product method; lambdas above 500 are split into halves
    // (a sum of independent Poissons is Poisson) to avoid exp underflow.
    std::int64_t poisson(double lambda);

    // Gamma(shape, scale): Marsaglia-Tsang for shape >= 1, boost for shape < 1.
    double gamma(double shape, double scale);

    // Dirichlet via normalized gammas.
    std::vector<double> dirichlet(const std::vector<double>& alpha);

    // Derives an independent generator for a labeled substream.
    Rng fork(std::uint64_t stream_id);

private:
    std::uint64_t state_[4];
};

}  // namespace vibrancy
