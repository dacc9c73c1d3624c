#pragma once

#include <cstdint>
#include <vector>

// Random sparse bump positions a_j^omega, the off-diagonal coefficient
// sequence p_n, and truncation-length policy for finite sections.

namespace sparsejac::model {

struct SparsityProfile {
    enum class Kind { exponential, superexponential, subexponential };
    Kind kind = Kind::exponential;
    int beta = 2;      // exponential: integer >= 2
    double c = 1.0;    // super/sub: gap = floor(exp(c * j^gamma))
    double gamma = 1.0;

    static SparsityProfile exponential(int beta);
    static SparsityProfile superexponential(double c, double gamma);  // gamma > 1
    static SparsityProfile subexponential(double c, double gamma);    // 0 < gamma < 1
    void validate() const;

    // Gap preceding bump j (j >= 1); the first bump sits at gap(1) - 1.
    std::int64_t gap(int j) const;  // throws std::overflow_error past int64 range
};

// Deterministic positions: a_1 = beta - 1, a_j = a_{j-1} + beta^j for the
// exponential profile; gaps floor(exp(c j^gamma)) otherwise.
std::vector<std::int64_t> bump_positions(const SparsityProfile& profile, int J);

struct DisorderSample {
    std::uint64_t seed;
    std::vector<int> omegas;  // omega_j uniform on {-j,...,j}, index j = 1..J
};

// omega_j independent and uniform on {-j,...,j}; bit-reproducible per seed
// (one counter-RNG draw per j, see rng.hpp).
DisorderSample sample_disorder(int J, std::uint64_t seed);

// a_j^omega = a_j + omega_j; strictly increasing for every admissible sample.
std::vector<std::int64_t> randomized_positions(
    const std::vector<std::int64_t>& deterministic,
    const DisorderSample& disorder);

struct JacobiCoefficients {
    std::int64_t N = 0;              // site count
    double p = 1.0;                  // bump value
    std::vector<double> offdiag;     // p_n, n = 0..N-2
    std::vector<std::int64_t> bump_sites;  // positions actually placed (< N-1)
    int dropped_bumps = 0;           // positions at or beyond N-1
};

JacobiCoefficients coefficients(const std::vector<std::int64_t>& positions,
                                double p, std::int64_t N);

// N = a_J^omega + ceil(gap(J)/2): the artificial right boundary sits mid-gap.
std::int64_t default_truncation_length(const SparsityProfile& profile,
                                       const std::vector<std::int64_t>& positions);

} // namespace sparsejac::model
