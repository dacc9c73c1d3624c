#include "sparsejac/measure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace sparsejac::measure {

namespace {

// Least-squares line through (x_i, y_i); returns {slope, intercept, rms}.
struct LineFit {
    double slope, intercept, rms;
};

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double denom = n * sxx - sx * sx;
    LineFit f;
    f.slope = (n * sxy - sx * sy) / denom;
    f.intercept = (sy - f.slope * sx) / n;
    double ss = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = y[i] - (f.slope * x[i] + f.intercept);
        ss += e * e;
    }
    f.rms = std::sqrt(ss / n);
    return f;
}

// Pairwise (cascade) summation of w_k exp(-i l_k t).
std::complex<double> fs_block(const AtomicMeasure& mu, double t,
                              std::size_t lo, std::size_t hi) {
    if (hi - lo <= 32) {
        std::complex<double> s{0.0, 0.0};
        for (std::size_t k = lo; k < hi; ++k) {
            const double ph = -mu.atoms[k] * t;
            s += mu.weights[k] * std::complex<double>(std::cos(ph), std::sin(ph));
        }
        return s;
    }
    const std::size_t mid = lo + (hi - lo) / 2;
    return fs_block(mu, t, lo, mid) + fs_block(mu, t, mid, hi);
}

} // namespace

double AtomicMeasure::total_mass() const {
    return std::accumulate(weights.begin(), weights.end(), 0.0);
}

AtomicMeasure AtomicMeasure::from_unsorted(std::vector<double> atoms,
                                           std::vector<double> weights,
                                           double merge_tol) {
    if (atoms.size() != weights.size())
        throw std::invalid_argument("AtomicMeasure: atoms/weights length mismatch");
    std::vector<std::size_t> idx(atoms.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return atoms[a] < atoms[b]; });
    AtomicMeasure out;
    out.atoms.reserve(atoms.size());
    out.weights.reserve(atoms.size());
    for (std::size_t i : idx) {
        if (!out.atoms.empty() && atoms[i] - out.atoms.back() <= merge_tol) {
            out.weights.back() += weights[i];
        } else {
            out.atoms.push_back(atoms[i]);
            out.weights.push_back(weights[i]);
        }
    }
    return out;
}

std::complex<double> fs_transform(const AtomicMeasure& mu, double t) {
    if (mu.atoms.empty()) return {0.0, 0.0};
    return fs_block(mu, t, 0, mu.atoms.size());
}

double time_average(const AtomicMeasure& mu, double T) {
    if (!(T > 0.0)) throw std::invalid_argument("time_average: T must be > 0");
    const std::size_t K = mu.size();
    double diag = 0.0;
    for (double w : mu.weights) diag += w * w;
    double cross = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
        for (std::size_t l = k + 1; l < K; ++l) {
            const double d = mu.atoms[k] - mu.atoms[l];
            cross += mu.weights[k] * mu.weights[l] *
                     (d == 0.0 ? T : std::sin(d * T) / d);
        }
    }
    return diag * T + 2.0 * cross;
}

double heisenberg_time(const AtomicMeasure& mu) {
    if (mu.size() < 2)
        return std::numeric_limits<double>::infinity();
    const double span = mu.atoms.back() - mu.atoms.front();
    if (span <= 0.0) return std::numeric_limits<double>::infinity();
    const double mean_gap = span / static_cast<double>(mu.size() - 1);
    return 2.0 * 3.14159265358979323846 / mean_gap;
}

TimeAverage time_average_curve(const AtomicMeasure& mu,
                               const std::vector<double>& T_grid) {
    TimeAverage out;
    out.T_grid = T_grid;
    out.heis_time = heisenberg_time(mu);
    out.I_values.reserve(T_grid.size());
    for (double T : T_grid) out.I_values.push_back(time_average(mu, T));
    return out;
}

DecayFit decay_fit(const AtomicMeasure& mu, const std::vector<double>& T_grid) {
    if (T_grid.size() < 5)
        throw std::invalid_argument("decay_fit: need >= 5 grid points");
    const double heis = heisenberg_time(mu);
    for (std::size_t i = 0; i < T_grid.size(); ++i) {
        if (!(T_grid[i] > 1.0))
            throw std::invalid_argument("decay_fit: T grid must exceed 1");
        if (T_grid[i] > heis / 10.0)
            throw std::invalid_argument("decay_fit: T grid exceeds heis_time/10");
        if (i && T_grid[i] <= T_grid[i - 1])
            throw std::invalid_argument("decay_fit: T grid must increase");
    }
    std::vector<double> lx, ly;
    for (double T : T_grid) {
        lx.push_back(std::log(T));
        ly.push_back(std::log(std::max(time_average(mu, T), 1e-300)));
    }
    const LineFit f = fit_line(lx, ly);
    return {f.slope, std::exp(f.intercept), f.rms, T_grid.front(), T_grid.back()};
}

AtomicMeasure restrict(const AtomicMeasure& mu, double lo, double hi) {
    AtomicMeasure out;
    for (std::size_t k = 0; k < mu.size(); ++k) {
        if (mu.atoms[k] >= lo && mu.atoms[k] <= hi) {
            out.atoms.push_back(mu.atoms[k]);
            out.weights.push_back(mu.weights[k]);
        }
    }
    return out;
}

AtomicMeasure restrict(const AtomicMeasure& mu, const theory::SpectralWindow& window) {
    if (window.empty()) return {};
    return restrict(mu, window.lo, window.hi);
}

AtomicMeasure scale(const AtomicMeasure& mu, double theta) {
    if (!(theta > 0.0 && theta <= 1.0))
        throw std::invalid_argument("scale: theta must lie in (0,1]");
    AtomicMeasure out = mu;
    for (double& a : out.atoms) a *= theta;
    return out;
}

ConvolutionResult convolve(const AtomicMeasure& mu1, const AtomicMeasure& mu2,
                           std::size_t pair_budget) {
    const std::size_t pairs = mu1.size() * mu2.size();
    if (pairs > pair_budget)
        throw std::invalid_argument(
            "convolve: atom pair count exceeds budget; use convolution_histogram");
    std::vector<double> atoms, weights;
    atoms.reserve(pairs);
    weights.reserve(pairs);
    for (std::size_t k = 0; k < mu1.size(); ++k) {
        for (std::size_t l = 0; l < mu2.size(); ++l) {
            atoms.push_back(mu1.atoms[k] + mu2.atoms[l]);
            weights.push_back(mu1.weights[k] * mu2.weights[l]);
        }
    }
    ConvolutionResult out;
    out.measure = AtomicMeasure::from_unsorted(std::move(atoms), std::move(weights));
    return out;
}

ConvolutionResult kronecker_measure(const AtomicMeasure& mu1,
                                    const AtomicMeasure& mu2, double theta,
                                    std::size_t pair_budget) {
    ConvolutionResult out = convolve(mu1, scale(mu2, theta), pair_budget);
    out.theta = theta;
    return out;
}

L2Diagnostics l2_criterion(const AtomicMeasure& mu1, const AtomicMeasure& mu2,
                           double theta, const std::vector<double>& T_grid) {
    if (!(theta > 0.0 && theta <= 1.0))
        throw std::invalid_argument("l2_criterion: theta must lie in (0,1]");
    if (T_grid.size() < 3 || !(T_grid.front() > 0.0))
        throw std::invalid_argument("l2_criterion: need an increasing positive T grid");
    const double heis1 = heisenberg_time(mu1);
    const double heis2 = heisenberg_time(mu2) / theta;
    if (T_grid.back() > std::min(heis1, heis2) / 10.0)
        throw std::invalid_argument("l2_criterion: T grid exceeds Heisenberg horizon");

    // Trapezoid quadrature of |f1|^2 |f2(theta t)|^2 with a step resolving
    // the fastest oscillation of the product.
    const double span1 = mu1.size() ? mu1.atoms.back() - mu1.atoms.front() : 0.0;
    const double span2 = mu2.size() ? mu2.atoms.back() - mu2.atoms.front() : 0.0;
    const double rate = std::max(span1 + theta * span2, 1e-3);
    const double dt = 2.0 * 3.14159265358979323846 / (16.0 * rate);

    auto integrand = [&](double t) {
        const double a = std::norm(fs_transform(mu1, t));
        const double b = std::norm(fs_transform(mu2, theta * t));
        return a * b;
    };

    L2Diagnostics out;
    out.T_grid = T_grid;
    out.I_values.reserve(T_grid.size());
    double acc = 0.0, t_prev = 0.0, f_prev = integrand(0.0);
    for (double T : T_grid) {
        const int steps = std::max(1, static_cast<int>(std::ceil((T - t_prev) / dt)));
        const double h = (T - t_prev) / steps;
        for (int s = 1; s <= steps; ++s) {
            const double t = t_prev + h * s;
            const double f = integrand(t);
            acc += 0.5 * h * (f_prev + f);
            f_prev = f;
        }
        t_prev = T;
        out.I_values.push_back(acc);
    }

    std::vector<double> lx, ly;
    const std::size_t n = T_grid.size();
    for (std::size_t i = n / 2; i < n; ++i) {
        lx.push_back(std::log(T_grid[i]));
        ly.push_back(std::log(std::max(out.I_values[i], 1e-300)));
    }
    out.tail_slope = lx.size() >= 2 ? fit_line(lx, ly).slope : 0.0;
    return out;
}

namespace {

std::vector<double> bin_masses(const AtomicMeasure& mu, int bins,
                               double lo, double hi) {
    std::vector<double> mass(static_cast<std::size_t>(bins), 0.0);
    const double width = hi - lo;
    for (std::size_t k = 0; k < mu.size(); ++k) {
        const double x = mu.atoms[k];
        if (x < lo || x > hi) continue;
        int b = static_cast<int>((x - lo) / width * bins);
        if (b == bins) b = bins - 1;
        mass[static_cast<std::size_t>(b)] += mu.weights[k];
    }
    return mass;
}

// Stability: compare each fine-bin density in the central third against its
// parent coarse bin. Smooth densities change little on refinement (score near
// 0); a lone atom doubles in one child and vanishes in the other (score 1).
double stability_from(const std::vector<double>& coarse,
                      const std::vector<double>& fine, int bins) {
    const int c0 = bins / 3, c1 = bins - bins / 3;
    double worst = 0.0;
    for (int b = c0; b < c1; ++b) {
        const double rho_c = coarse[static_cast<std::size_t>(b)];
        if (rho_c <= 0.0) continue;
        for (int half = 0; half < 2; ++half) {
            const double rho_f = fine[static_cast<std::size_t>(2 * b + half)];
            worst = std::max(worst, std::abs(rho_f - rho_c) / rho_c);
        }
    }
    return worst;
}

Histogram histogram_from_masses(std::vector<double> coarse_mass,
                                const std::vector<double>& fine_mass,
                                int bins, double lo, double hi) {
    Histogram h;
    h.lo = lo;
    h.hi = hi;
    const double w_c = (hi - lo) / bins;
    const double w_f = (hi - lo) / (2 * bins);
    h.density.resize(static_cast<std::size_t>(bins));
    std::vector<double> fine_density(static_cast<std::size_t>(2 * bins));
    for (int b = 0; b < bins; ++b)
        h.density[static_cast<std::size_t>(b)] = coarse_mass[static_cast<std::size_t>(b)] / w_c;
    for (int b = 0; b < 2 * bins; ++b)
        fine_density[static_cast<std::size_t>(b)] = fine_mass[static_cast<std::size_t>(b)] / w_f;
    h.stability_score = stability_from(h.density, fine_density, bins);
    return h;
}

} // namespace

Histogram histogram_density(const AtomicMeasure& mu, int bins) {
    if (bins < 16) throw std::invalid_argument("histogram_density: bins >= 16 required");
    if (mu.size() == 0) throw std::invalid_argument("histogram_density: empty measure");
    double lo = mu.atoms.front(), hi = mu.atoms.back();
    if (hi <= lo) {  // single atom (or degenerate support)
        lo -= 0.5;
        hi += 0.5;
    }
    return histogram_from_masses(bin_masses(mu, bins, lo, hi),
                                 bin_masses(mu, 2 * bins, lo, hi), bins, lo, hi);
}

Histogram convolution_histogram(const AtomicMeasure& mu1, const AtomicMeasure& mu2,
                                double theta, int bins, double lo, double hi) {
    if (bins < 16) throw std::invalid_argument("convolution_histogram: bins >= 16 required");
    if (!(hi > lo)) throw std::invalid_argument("convolution_histogram: empty range");
    std::vector<double> fine(static_cast<std::size_t>(2 * bins), 0.0);
    const double width = hi - lo;
    for (std::size_t k = 0; k < mu1.size(); ++k) {
        const double base = mu1.atoms[k];
        const double wk = mu1.weights[k];
        for (std::size_t l = 0; l < mu2.size(); ++l) {
            const double x = base + theta * mu2.atoms[l];
            if (x < lo || x > hi) continue;
            int b = static_cast<int>((x - lo) / width * (2 * bins));
            if (b == 2 * bins) b = 2 * bins - 1;
            fine[static_cast<std::size_t>(b)] += wk * mu2.weights[l];
        }
    }
    std::vector<double> coarse(static_cast<std::size_t>(bins), 0.0);
    for (int b = 0; b < bins; ++b)
        coarse[static_cast<std::size_t>(b)] =
            fine[static_cast<std::size_t>(2 * b)] + fine[static_cast<std::size_t>(2 * b + 1)];
    return histogram_from_masses(std::move(coarse), fine, bins, lo, hi);
}

} // namespace sparsejac::measure
