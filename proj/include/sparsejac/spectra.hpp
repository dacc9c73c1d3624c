#pragma once

#include <cstdint>
#include <vector>

#include "sparsejac/measure.hpp"
#include "sparsejac/model.hpp"
#include "sparsejac/theory.hpp"

// Finite truncations as symmetric tridiagonal matrices, eigenvalues by Sturm
// bisection, the site-0 spectral measure via the orthonormal-polynomial
// recurrence, and window-mass local-dimension estimation.

namespace sparsejac::spectra {

struct TridiagonalMatrix {
    std::vector<double> diag;     // d_n; d_0 = tan(phi), 0 elsewhere
    std::vector<double> offdiag;  // p_n > 0, size N-1
    std::size_t size() const { return diag.size(); }
};

// Assemble the truncation of the phi-boundary operator. |phi - pi/2| >= 1e-3
// is enforced for the tan form (phi = pi/2 is the Dirichlet condition u_0 = 0,
// handled by dropping site 0 instead).
TridiagonalMatrix build_matrix(const model::JacobiCoefficients& coeffs, double phi);

// Number of eigenvalues strictly below x (Sturm sequence with the standard
// zero-pivot perturbation).
int sturm_count(const TridiagonalMatrix& T, double x);

// All N eigenvalues, ascending, to absolute tolerance tol.
std::vector<double> eigenvalues(const TridiagonalMatrix& T, double tol = 1e-10);

// Eigenvalues in [lo, hi] only; shares Sturm counts across the bracket tree,
// so the cost scales with the window population rather than N.
std::vector<double> eigenvalues_in(const TridiagonalMatrix& T, double lo,
                                   double hi, double tol = 1e-10);

// Site-0 weight at eigenvalue lambda: 1 / sum_n P_n(lambda)^2 with P_0 = 1.
double site0_weight(const TridiagonalMatrix& T, double lambda);

// Full site-0 spectral measure (normalized: weights sum to 1 over all N atoms).
measure::AtomicMeasure spectral_measure(const TridiagonalMatrix& T, double tol = 1e-10);

// Window slice of the site-0 spectral measure; weights carry the global
// normalization even though only window atoms are computed.
measure::AtomicMeasure spectral_measure_in(const TridiagonalMatrix& T, double lo,
                                           double hi, double tol = 1e-10);

// Mass of the open window (lambda0 - delta, lambda0 + delta).
double window_mass(const measure::AtomicMeasure& mu, double lambda0, double delta);

struct DimensionFit {
    double lambda0;
    std::vector<double> scales;  // window half-widths, decreasing
    std::vector<double> masses;  // disorder-averaged window masses
    double alpha_hat;            // 2 - (least-squares slope of log mass vs log delta)
    double residual;
    std::int64_t truncation;     // N actually used
    int samples;
};

// Disorder-averaged scaling fit of window mass vs half-width. N = 0 picks the
// smallest truncation honoring both the mid-gap default and the spacing floor
// (scales >= 10 * 4/N); an explicit N below the floor is rejected.
DimensionFit dimension_fit(const theory::ModelParams& params, double lambda0,
                           int J, int samples, std::vector<double> scales,
                           std::uint64_t seed, std::int64_t N = 0,
                           int workers = 1);

} // namespace sparsejac::spectra
