#include "sparsejac/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "sparsejac/parallel.hpp"
#include "sparsejac/rng.hpp"

namespace sparsejac::spectra {

namespace {

constexpr double kPi = 3.14159265358979323846;

double gershgorin_bound(const TridiagonalMatrix& T) {
    double bound = 0.0;
    const std::size_t N = T.size();
    for (std::size_t n = 0; n < N; ++n) {
        double row = std::abs(T.diag[n]);
        if (n > 0) row += std::abs(T.offdiag[n - 1]);
        if (n + 1 < N) row += std::abs(T.offdiag[n]);
        bound = std::max(bound, row);
    }
    return bound;
}

} // namespace

TridiagonalMatrix build_matrix(const model::JacobiCoefficients& coeffs, double phi) {
    if (!(phi >= 0.0 && phi < kPi))
        throw std::invalid_argument("build_matrix: phi must lie in [0,pi)");
    if (std::abs(phi - kPi / 2) < 1e-3)
        throw std::invalid_argument(
            "build_matrix: phi within 1e-3 of pi/2; drop site 0 for the Dirichlet form");
    TridiagonalMatrix T;
    T.diag.assign(static_cast<std::size_t>(coeffs.N), 0.0);
    T.diag[0] = std::tan(phi);
    T.offdiag = coeffs.offdiag;
    for (double e : T.offdiag)
        if (!(e > 0.0))
            throw std::invalid_argument("build_matrix: off-diagonal entries must be > 0");
    return T;
}

int sturm_count(const TridiagonalMatrix& T, double x) {
    const std::size_t N = T.size();
    int count = 0;
    double q = T.diag[0] - x;
    if (q == 0.0) q = -1e-300;
    if (q < 0.0) ++count;
    for (std::size_t n = 1; n < N; ++n) {
        const double e = T.offdiag[n - 1];
        q = (T.diag[n] - x) - e * e / q;
        if (q == 0.0) q = -1e-300;
        if (q < 0.0) ++count;
    }
    return count;
}

namespace {

// Recursive bracket subdivision: every Sturm count is shared by all
// eigenvalues inside the bracket.
void bisect_range(const TridiagonalMatrix& T, double lo, double hi,
                  int c_lo, int c_hi, double tol, std::vector<double>& out,
                  int depth) {
    if (c_hi == c_lo) return;
    if (hi - lo <= tol || depth > 200) {
        const double mid = 0.5 * (lo + hi);
        for (int k = c_lo; k < c_hi; ++k) out.push_back(mid);
        if (depth > 200)
            throw std::runtime_error("eigenvalues: bisection iteration cap exceeded");
        return;
    }
    const double mid = 0.5 * (lo + hi);
    const int c_mid = sturm_count(T, mid);
    bisect_range(T, lo, mid, c_lo, c_mid, tol, out, depth + 1);
    bisect_range(T, mid, hi, c_mid, c_hi, tol, out, depth + 1);
}

} // namespace

std::vector<double> eigenvalues(const TridiagonalMatrix& T, double tol) {
    if (!(tol > 0.0)) throw std::invalid_argument("eigenvalues: tol must be > 0");
    const double bound = gershgorin_bound(T) + tol;
    std::vector<double> out;
    out.reserve(T.size());
    bisect_range(T, -bound, bound, 0, static_cast<int>(T.size()), tol, out, 0);
    return out;
}

std::vector<double> eigenvalues_in(const TridiagonalMatrix& T, double lo,
                                   double hi, double tol) {
    if (!(tol > 0.0) || !(hi > lo))
        throw std::invalid_argument("eigenvalues_in: bad interval or tolerance");
    const int c_lo = sturm_count(T, lo);
    const int c_hi = sturm_count(T, hi);
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(c_hi - c_lo));
    bisect_range(T, lo, hi, c_lo, c_hi, tol, out, 0);
    return out;
}

double site0_weight(const TridiagonalMatrix& T, double lambda) {
    // Orthonormal-polynomial recurrence p_n P_{n+1} = (x - d_n) P_n - p_{n-1} P_{n-1},
    // with periodic rescaling; the true sum is S * exp(2*log_scale).
    const std::size_t N = T.size();
    double P_prev = 1.0;
    double S = 1.0;
    double log_scale = 0.0;
    if (N == 1) return 1.0;
    double P_cur = (lambda - T.diag[0]) / T.offdiag[0];
    S += P_cur * P_cur;
    for (std::size_t n = 1; n + 1 < N; ++n) {
        const double P_next =
            ((lambda - T.diag[n]) * P_cur - T.offdiag[n - 1] * P_prev) / T.offdiag[n];
        P_prev = P_cur;
        P_cur = P_next;
        S += P_cur * P_cur;
        if (S > 1e280) {
            constexpr double c = 1e-140;
            P_prev *= c;
            P_cur *= c;
            S *= c * c;
            log_scale += -std::log(c);
        }
    }
    // weight = 1 / (S * exp(2*log_scale)); underflows cleanly to 0 for
    // eigenvalues the site-0 vector barely sees.
    return std::exp(-(std::log(S) + 2.0 * log_scale));
}

measure::AtomicMeasure spectral_measure(const TridiagonalMatrix& T, double tol) {
    const std::vector<double> evals = eigenvalues(T, tol);
    measure::AtomicMeasure mu;
    mu.atoms = evals;
    mu.weights.reserve(evals.size());
    for (double x : evals) mu.weights.push_back(site0_weight(T, x));
    return mu;
}

measure::AtomicMeasure spectral_measure_in(const TridiagonalMatrix& T, double lo,
                                           double hi, double tol) {
    const std::vector<double> evals = eigenvalues_in(T, lo, hi, tol);
    measure::AtomicMeasure mu;
    mu.atoms = evals;
    mu.weights.reserve(evals.size());
    for (double x : evals) mu.weights.push_back(site0_weight(T, x));
    return mu;
}

double window_mass(const measure::AtomicMeasure& mu, double lambda0, double delta) {
    if (!(delta > 0.0)) throw std::invalid_argument("window_mass: delta must be > 0");
    const auto lo = std::upper_bound(mu.atoms.begin(), mu.atoms.end(), lambda0 - delta);
    const auto hi = std::lower_bound(mu.atoms.begin(), mu.atoms.end(), lambda0 + delta);
    double mass = 0.0;
    for (auto it = lo; it != hi; ++it)
        mass += mu.weights[static_cast<std::size_t>(it - mu.atoms.begin())];
    return mass;
}

DimensionFit dimension_fit(const theory::ModelParams& params, double lambda0,
                           int J, int samples, std::vector<double> scales,
                           std::uint64_t seed, std::int64_t N, int workers) {
    params.validate();
    if (J < 1 || samples < 1)
        throw std::invalid_argument("dimension_fit: J >= 1 and samples >= 1 required");
    if (scales.size() < 2)
        throw std::invalid_argument("dimension_fit: need >= 2 scales");
    std::sort(scales.begin(), scales.end(), std::greater<double>());
    if (scales.back() <= 0.0 || scales.front() == scales.back())
        throw std::invalid_argument("dimension_fit: scales must be positive and distinct");

    const auto profile = model::SparsityProfile::exponential(params.beta);
    const auto positions = model::bump_positions(profile, J);
    const double delta_min = scales.back();
    const std::int64_t default_N = model::default_truncation_length(profile, positions);
    const std::int64_t floor_N =
        static_cast<std::int64_t>(std::ceil(10.0 * 4.0 / delta_min));
    if (N == 0) {
        N = std::max(default_N, floor_N);
    } else if (N < floor_N) {
        std::ostringstream os;
        os << "dimension_fit: scale " << delta_min << " is below the spacing floor "
           << "10*(4/N) for N=" << N;
        throw std::invalid_argument(os.str());
    }

    const double pad = scales.front() * 1.05;
    std::vector<std::vector<double>> per_sample(
        static_cast<std::size_t>(samples), std::vector<double>(scales.size(), 0.0));

    parallel_for(static_cast<std::size_t>(samples), workers, [&](std::size_t s) {
        const auto disorder =
            model::sample_disorder(J, rng::derive_seed(seed, s));
        const auto randomized = model::randomized_positions(positions, disorder);
        const auto coeffs = model::coefficients(randomized, params.p, N);
        const auto T = build_matrix(coeffs, params.phi);
        const auto mu = spectral_measure_in(T, lambda0 - pad, lambda0 + pad, 1e-9);
        for (std::size_t i = 0; i < scales.size(); ++i)
            per_sample[s][i] = window_mass(mu, lambda0, scales[i]);
    });

    DimensionFit fit;
    fit.lambda0 = lambda0;
    fit.scales = scales;
    fit.truncation = N;
    fit.samples = samples;
    fit.masses.assign(scales.size(), 0.0);
    for (int s = 0; s < samples; ++s)
        for (std::size_t i = 0; i < scales.size(); ++i)
            fit.masses[i] += per_sample[static_cast<std::size_t>(s)][i];
    for (double& m : fit.masses) m /= samples;

    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const std::size_t n = scales.size();
    std::vector<double> lx(n), ly(n);
    for (std::size_t i = 0; i < n; ++i) {
        lx[i] = std::log(scales[i]);
        ly[i] = std::log(std::max(fit.masses[i], 1e-300));
        sx += lx[i];
        sy += ly[i];
        sxx += lx[i] * lx[i];
        sxy += lx[i] * ly[i];
    }
    // The Lebesgue-fixed-center averaged mass scales as delta^(2 - alpha):
    // atom count in the window contributes delta * N * rho, and the typical
    // site-0 weight at resolution delta contributes delta^(1 - alpha), so the
    // local dimension is recovered as 2 minus the fitted mass exponent.
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    fit.alpha_hat = 2.0 - slope;
    const double intercept = (sy - slope * sx) / n;
    double ss = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = ly[i] - (slope * lx[i] + intercept);
        ss += e * e;
    }
    fit.residual = std::sqrt(ss / n);
    return fit;
}

} // namespace sparsejac::spectra
