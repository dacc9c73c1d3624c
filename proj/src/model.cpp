#include "sparsejac/model.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "sparsejac/rng.hpp"

namespace sparsejac::model {

SparsityProfile SparsityProfile::exponential(int beta) {
    SparsityProfile s;
    s.kind = Kind::exponential;
    s.beta = beta;
    s.validate();
    return s;
}

SparsityProfile SparsityProfile::superexponential(double c, double gamma) {
    SparsityProfile s;
    s.kind = Kind::superexponential;
    s.c = c;
    s.gamma = gamma;
    s.validate();
    return s;
}

SparsityProfile SparsityProfile::subexponential(double c, double gamma) {
    SparsityProfile s;
    s.kind = Kind::subexponential;
    s.c = c;
    s.gamma = gamma;
    s.validate();
    return s;
}

void SparsityProfile::validate() const {
    switch (kind) {
        case Kind::exponential:
            if (beta < 2)
                throw std::invalid_argument("SparsityProfile: exponential requires integer beta >= 2");
            break;
        case Kind::superexponential:
            if (!(c > 0.0) || !(gamma > 1.0))
                throw std::invalid_argument("SparsityProfile: superexponential requires c > 0, gamma > 1");
            break;
        case Kind::subexponential:
            if (!(c > 0.0) || !(gamma > 0.0 && gamma < 1.0))
                throw std::invalid_argument("SparsityProfile: subexponential requires c > 0, 0 < gamma < 1");
            break;
    }
}

std::int64_t SparsityProfile::gap(int j) const {
    if (j < 1) throw std::invalid_argument("SparsityProfile::gap: j >= 1 required");
    if (kind == Kind::exponential) {
        std::int64_t g = 1;
        for (int k = 0; k < j; ++k) {
            if (g > std::numeric_limits<std::int64_t>::max() / beta)
                throw std::overflow_error("bump position arithmetic overflows int64");
            g *= beta;
        }
        return g;
    }
    const double x = c * std::pow(static_cast<double>(j), gamma);
    if (x > 62.0 * 0.6931471805599453)
        throw std::overflow_error("bump position arithmetic overflows int64");
    return static_cast<std::int64_t>(std::floor(std::exp(x)));
}

std::vector<std::int64_t> bump_positions(const SparsityProfile& profile, int J) {
    if (J < 1) throw std::invalid_argument("bump_positions: J >= 1 required");
    profile.validate();
    std::vector<std::int64_t> a(static_cast<std::size_t>(J));
    a[0] = profile.gap(1) - 1;
    if (a[0] < 0) a[0] = 0;  // subexponential gaps can floor to 1
    for (int j = 2; j <= J; ++j) {
        const std::int64_t g = profile.gap(j);
        if (a[j - 2] > std::numeric_limits<std::int64_t>::max() - g)
            throw std::overflow_error("bump position arithmetic overflows int64");
        a[j - 1] = a[j - 2] + g;
    }
    return a;
}

DisorderSample sample_disorder(int J, std::uint64_t seed) {
    if (J < 1) throw std::invalid_argument("sample_disorder: J >= 1 required");
    DisorderSample s;
    s.seed = seed;
    s.omegas.resize(static_cast<std::size_t>(J));
    for (int j = 1; j <= J; ++j) {
        const std::uint64_t word = rng::draw(seed, static_cast<std::uint64_t>(j));
        const std::uint64_t range = 2ull * static_cast<std::uint64_t>(j) + 1ull;
        s.omegas[j - 1] = static_cast<int>(rng::bounded(word, range)) - j;
    }
    return s;
}

std::vector<std::int64_t> randomized_positions(
    const std::vector<std::int64_t>& deterministic,
    const DisorderSample& disorder) {
    if (deterministic.size() != disorder.omegas.size())
        throw std::invalid_argument("randomized_positions: length mismatch");
    std::vector<std::int64_t> out(deterministic.size());
    for (std::size_t j = 0; j < out.size(); ++j)
        out[j] = deterministic[j] + disorder.omegas[j];
    return out;
}

JacobiCoefficients coefficients(const std::vector<std::int64_t>& positions,
                                double p, std::int64_t N) {
    if (N < 2) throw std::invalid_argument("coefficients: N >= 2 required");
    if (!(p > 0.0 && p <= 1.0))
        throw std::invalid_argument("coefficients: p must lie in (0,1]");
    for (std::size_t j = 1; j < positions.size(); ++j)
        if (positions[j] <= positions[j - 1])
            throw std::invalid_argument("coefficients: positions must be strictly increasing");

    JacobiCoefficients out;
    out.N = N;
    out.p = p;
    out.offdiag.assign(static_cast<std::size_t>(N - 1), 1.0);
    for (std::int64_t pos : positions) {
        if (pos < 0) throw std::invalid_argument("coefficients: negative position");
        if (pos < N - 1) {
            out.offdiag[static_cast<std::size_t>(pos)] = p;
            out.bump_sites.push_back(pos);
        } else {
            ++out.dropped_bumps;
        }
    }
    return out;
}

std::int64_t default_truncation_length(const SparsityProfile& profile,
                                       const std::vector<std::int64_t>& positions) {
    if (positions.empty())
        throw std::invalid_argument("default_truncation_length: no positions");
    const std::int64_t g = profile.gap(static_cast<int>(positions.size()));
    return positions.back() + (g + 1) / 2;
}

} // namespace sparsejac::model
