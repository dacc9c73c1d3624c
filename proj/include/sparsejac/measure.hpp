#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "sparsejac/theory.hpp"

// Algebra of finite positive atomic measures: Fourier-Stieltjes transforms,
// Strichartz time averages I(T), scaling, convolution (the Kronecker-sum
// spectral measure), and the numerical a.c./p.p. diagnostics built on them.

namespace sparsejac::measure {

struct AtomicMeasure {
    std::vector<double> atoms;    // strictly increasing
    std::vector<double> weights;  // w_k >= 0, aligned with atoms

    double total_mass() const;
    std::size_t size() const { return atoms.size(); }

    // Sorts and merges atoms coinciding within `merge_tol` (weights add).
    static AtomicMeasure from_unsorted(std::vector<double> atoms,
                                       std::vector<double> weights,
                                       double merge_tol = 1e-12);
};

// mu_hat(t) = sum_k w_k exp(-i lambda_k t), pairwise-summed.
std::complex<double> fs_transform(const AtomicMeasure& mu, double t);

// I(T) = integral_0^T |mu_hat(t)|^2 dt, exact closed form:
// T sum w_k^2 + 2 sum_{k<l} w_k w_l sin((l_k-l_l)T)/(l_k-l_l).
double time_average(const AtomicMeasure& mu, double T);

// 2*pi over the mean atom gap; the horizon past which a finite truncation
// reads as pure point. Time-domain fits stay below heisenberg_time/10.
double heisenberg_time(const AtomicMeasure& mu);

struct DecayFit {
    double exponent_hat;  // slope of log I(T) vs log T
    double C_hat;         // fitted prefactor
    double residual;      // rms of the log-log fit
    double T_min, T_max;
};

// Least-squares power-law fit of I(T) on the given grid; for a uniformly
// alpha-Hoelder measure the target slope is 1 - alpha.
DecayFit decay_fit(const AtomicMeasure& mu, const std::vector<double>& T_grid);

struct TimeAverage {
    std::vector<double> T_grid;
    std::vector<double> I_values;
    double heis_time;
};

TimeAverage time_average_curve(const AtomicMeasure& mu,
                               const std::vector<double>& T_grid);

// Atoms inside [window.lo, window.hi] retained; weights unchanged.
AtomicMeasure restrict(const AtomicMeasure& mu, const theory::SpectralWindow& window);
AtomicMeasure restrict(const AtomicMeasure& mu, double lo, double hi);

// Atoms scaled to theta*lambda_k; theta in (0,1].
AtomicMeasure scale(const AtomicMeasure& mu, double theta);

struct ConvolutionResult {
    AtomicMeasure measure;  // atoms l_k + l'_l, weights w_k w'_l, merged+sorted
    double theta = 1.0;
};

ConvolutionResult convolve(const AtomicMeasure& mu1, const AtomicMeasure& mu2,
                           std::size_t pair_budget = 100'000'000);

// convolve(mu1, scale(mu2, theta)): the site-0 spectral measure of the
// Kronecker sum restricted to product vectors.
ConvolutionResult kronecker_measure(const AtomicMeasure& mu1,
                                    const AtomicMeasure& mu2, double theta,
                                    std::size_t pair_budget = 100'000'000);

struct L2Diagnostics {
    std::vector<double> T_grid;
    std::vector<double> I_values;  // integral_0^T |f1(t)|^2 |f2(theta t)|^2 dt
    double tail_slope;             // log-log slope over the upper half of the grid
};

// Saturation diagnostic for the a.c. criterion: tail slope ~ 0 means the
// product integral converges (transform L2 => absolutely continuous),
// slope ~ 1 flags pure-point contamination.
L2Diagnostics l2_criterion(const AtomicMeasure& mu1, const AtomicMeasure& mu2,
                           double theta, const std::vector<double>& T_grid);

struct Histogram {
    double lo, hi;
    std::vector<double> density;  // mass per bin / bin width
    double stability_score;       // max relative central change on bin doubling
};

Histogram histogram_density(const AtomicMeasure& mu, int bins);

// Histogram of the convolution accumulated pair-by-pair over [lo, hi]
// without materializing the atom list; for central-window diagnostics
// where the pair count would blow the convolution budget.
Histogram convolution_histogram(const AtomicMeasure& mu1, const AtomicMeasure& mu2,
                                double theta, int bins, double lo, double hi);

} // namespace sparsejac::measure
