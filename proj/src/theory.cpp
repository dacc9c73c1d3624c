#include "sparsejac/theory.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace sparsejac::theory {

namespace {

constexpr double kPi = 3.14159265358979323846;

[[noreturn]] void fail(const std::string& msg) {
    throw std::invalid_argument(msg);
}

} // namespace

void ModelParams::validate() const {
    if (!(p > 0.0 && p <= 1.0)) fail("ModelParams.p must lie in (0,1]");
    if (beta < 2) fail("ModelParams.beta must be an integer >= 2");
    if (!(phi >= 0.0 && phi < kPi)) fail("ModelParams.phi must lie in [0,pi)");
    if (std::abs(phi - kPi / 2) < 1e-3)
        fail("ModelParams.phi within 1e-3 of pi/2; use the Dirichlet form instead");
}

double coupling_v(double p) {
    if (!(p > 0.0 && p <= 1.0)) fail("coupling_v: p must lie in (0,1]");
    return (1.0 - p * p) / p;
}

DerivedCouplings critical_couplings(int beta) {
    if (beta < 2) fail("critical_couplings: beta must be an integer >= 2");
    const double b = beta;
    DerivedCouplings c;
    c.v_c = 2.0 * std::sqrt(b - 1.0);
    c.p_c = std::sqrt(2.0 * b - 1.0 - 2.0 * std::sqrt(b * b - b));
    c.v = c.v_c;
    return c;
}

double r_factor(double lambda, double v) {
    if (!(std::abs(lambda) < 2.0))
        fail("r_factor: |lambda| must be < 2 (r diverges at the band edge)");
    return 1.0 + v * v / (4.0 - lambda * lambda);
}

LocalDimension local_dimension(double lambda, double v, int beta) {
    const double logb = std::log(static_cast<double>(beta));
    if (std::abs(lambda) >= 2.0) return {-1.0, false};
    const double alpha = 1.0 - std::log(r_factor(lambda, v)) / logb;
    return {alpha, alpha > 0.0 || (alpha == 0.0)};
}

std::optional<std::pair<double, double>> mobility_edges(double v, int beta) {
    const double v_c = 2.0 * std::sqrt(static_cast<double>(beta) - 1.0);
    if (v >= v_c) return std::nullopt;
    const double lp = 2.0 * std::sqrt(1.0 - (v * v) / (v_c * v_c));
    return std::make_pair(-lp, lp);
}

SpectralWindow sc_interval(double v, int beta) {
    // {lambda : v^{-2}(beta-1)(4-lambda^2) >= 1}
    const double disc = 4.0 - v * v / (static_cast<double>(beta) - 1.0);
    if (disc < 0.0) return {1.0, -1.0, WindowKind::sc_interval_I};
    const double lp = std::sqrt(disc);
    return {-lp, lp, WindowKind::sc_interval_I};
}

namespace {

// Preimage of a target dimension value on [0, lambda^+]; alpha is strictly
// decreasing in |lambda|, so the map inverts cleanly.
double inverse_alpha(double target, double v, int beta) {
    const double r = std::pow(static_cast<double>(beta), 1.0 - target);
    const double disc = 4.0 - v * v / (r - 1.0);
    return disc > 0.0 ? std::sqrt(disc) : 0.0;
}

PartitionSpec partition_with_cells(double v, int beta, double epsilon,
                                   std::size_t half_cells) {
    const double alpha0 = local_dimension(0.0, v, beta).alpha;
    const std::size_t m = half_cells;
    std::vector<double> bounds(m + 1);
    bounds[0] = 0.0;
    for (std::size_t k = 1; k < m; ++k)
        bounds[k] = inverse_alpha(alpha0 * (1.0 - static_cast<double>(k) / m), v, beta);
    bounds[m] = sc_interval(v, beta).hi;  // exact endpoint, Eq.-level identity

    PartitionSpec spec;
    spec.epsilon = epsilon;
    // negative half, mirrored
    for (std::size_t k = m; k >= 2; --k) {
        spec.centers.push_back(-(bounds[k] + bounds[k - 1]) / 2.0);
        spec.half_widths.push_back((bounds[k] - bounds[k - 1]) / 2.0);
    }
    // central cell straddling 0
    spec.centers.push_back(0.0);
    spec.half_widths.push_back(bounds[1]);
    // positive half
    for (std::size_t k = 1; k < m; ++k) {
        spec.centers.push_back((bounds[k] + bounds[k + 1]) / 2.0);
        spec.half_widths.push_back((bounds[k + 1] - bounds[k]) / 2.0);
    }
    spec.delta_bar = 0.0;
    for (double d : spec.half_widths) spec.delta_bar = std::max(spec.delta_bar, d);
    return spec;
}

} // namespace

PartitionSpec build_partition(double v, int beta, double epsilon,
                              std::size_t cell_cap) {
    if (!(epsilon > 0.0)) fail("build_partition: epsilon must be > 0");
    const double v_c = 2.0 * std::sqrt(static_cast<double>(beta) - 1.0);
    if (!(v < v_c)) fail("build_partition: requires v < v_c (nonempty I)");

    const double alpha0 = local_dimension(0.0, v, beta).alpha;
    std::size_t m = static_cast<std::size_t>(std::ceil(alpha0 / epsilon));
    if (m < 1) m = 1;
    for (;;) {
        if (2 * m - 1 > cell_cap) {
            std::ostringstream os;
            os << "build_partition: epsilon=" << epsilon << " needs "
               << 2 * m - 1 << " cells, above the cap of " << cell_cap;
            throw std::invalid_argument(os.str());
        }
        PartitionSpec spec = partition_with_cells(v, beta, epsilon, m);
        if (spec.delta_bar < 1.0) return spec;
        m *= 2;  // Eq.-mandated 0 < delta_i < 1; refine until it holds
    }
}

AppendixParams choose_parameters(double p, int beta, double a) {
    const double v = coupling_v(p);
    const double sqb = std::sqrt(static_cast<double>(beta));
    const double v_c2 = 4.0 * (static_cast<double>(beta) - 1.0);
    const double logb = std::log(static_cast<double>(beta));

    if (!(a < 4.0))
        fail("choose_parameters: admissibility requires a < 4");
    if (!(v * v < a * (sqb - 1.0)))
        fail("choose_parameters: admissibility violated, v^2 >= a(sqrt(beta)-1)");
    if (!(a * (sqb - 1.0) < v_c2))
        fail("choose_parameters: admissibility violated, a(sqrt(beta)-1) >= v_c^2");

    // Provisional pass with delta_bar = 0 to get an epsilon scale.
    const double r0 = std::sqrt((1.0 + v * v / 4.0) * sqb);
    const double eps_guess = 0.5 * std::log(sqb / r0) / logb;

    PartitionSpec provisional = build_partition(v, beta, eps_guess);
    double db = provisional.delta_bar;

    // Geometric mean of the admissible r* interval at the constructed delta_bar.
    const double r_lo = 1.0 + v * v / (4.0 - db * db);
    if (!(r_lo < sqb))
        fail("choose_parameters: epsilon_1 check failed, 1+v^2/(4-db^2) >= sqrt(beta)");
    const double r_star = std::sqrt(r_lo * sqb);

    const double eps0 = std::log(sqb / r_star) / logb;
    const double eps = std::min(eps_guess, 0.5 * eps0);

    // One rebuild at the final epsilon; r* stays fixed (single fixed-point pass).
    PartitionSpec partition = build_partition(v, beta, eps);
    db = partition.delta_bar;
    if (!(1.0 + v * v / (4.0 - db * db) < r_star))
        fail("choose_parameters: rebuilt delta_bar left r* below its lower bound");

    AppendixParams out;
    out.a = a;
    out.r_star = r_star;
    out.lambda_tilde_plus = std::sqrt(4.0 - v * v / (r_star - 1.0)) - db;
    out.epsilon_0 = eps0;
    out.epsilon = eps;
    out.delta_bar = db;
    out.alpha_min = 1.0 - std::log(r_star) / logb - eps;
    out.partition = std::move(partition);

    const double lp = sc_interval(v, beta).hi;
    if (!(out.lambda_tilde_plus > 0.0 && out.lambda_tilde_plus < lp))
        fail("choose_parameters: inner edge left (0, lambda^+)");
    if (!(out.alpha_min > 0.5))
        fail("choose_parameters: alpha_min failed to exceed 1/2");
    return out;
}

} // namespace sparsejac::theory
