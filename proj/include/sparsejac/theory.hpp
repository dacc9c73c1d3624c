#pragma once

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

// Closed-form quantities of the sparse off-diagonal model: effective and
// critical couplings, the per-bump growth factor r(lambda), the local
// dimension profile alpha(lambda), mobility edges, the singular-continuous
// interval I, the epsilon-partition of I, and the parameter chooser that
// certifies a dimension lower bound > 1/2 on an inner window.

namespace sparsejac::theory {

struct ModelParams {
    double p;    // bump transmission amplitude, in (0,1]
    int beta;    // sparsity base, integer >= 2
    double phi;  // boundary phase, radians, in [0,pi), guarded away from pi/2

    void validate() const;  // throws std::invalid_argument
};

struct DerivedCouplings {
    double v;    // (1-p^2)/p
    double v_c;  // 2 sqrt(beta-1)
    double p_c;  // sqrt(2 beta - 1 - 2 sqrt(beta^2 - beta))
};

// v(p) = (1 - p^2)/p. Requires 0 < p <= 1.
double coupling_v(double p);

// (v_c, p_c) for integer beta >= 2; v(p_c) = v_c.
DerivedCouplings critical_couplings(int beta);

// r(lambda) = 1 + v^2 / (4 - lambda^2). Requires |lambda| < 2.
double r_factor(double lambda, double v);

struct LocalDimension {
    double alpha;
    bool inside;  // false when lambda lies outside the interval I
};

// alpha(lambda) = 1 - log r(lambda) / log beta. Outside I the value is
// non-positive and flagged rather than rejected, so phase sweeps stay total.
LocalDimension local_dimension(double lambda, double v, int beta);

// Mobility edges lambda^{+/-} = +/- 2 sqrt(1 - v^2/v_c^2), or nullopt when
// v >= v_c (the interval I is empty and the whole band is pure point).
std::optional<std::pair<double, double>> mobility_edges(double v, int beta);

enum class WindowKind { sc_interval_I, pp_complement_Ic, ac_window_I0, full_band };

struct SpectralWindow {
    double lo;
    double hi;
    WindowKind kind;
    bool empty() const { return lo > hi; }
    bool contains(double x) const { return lo <= x && x <= hi; }
};

// The closed symmetric interval {lambda : (beta-1)(4-lambda^2) >= v^2},
// an empty window when v > v_c and the single point {0} at v = v_c.
SpectralWindow sc_interval(double v, int beta);

struct PartitionSpec {
    std::vector<double> centers;      // lambda_i, ascending
    std::vector<double> half_widths;  // delta_i, each in (0,1)
    double epsilon;
    double delta_bar;                 // max_i delta_i
    std::size_t size() const { return centers.size(); }
};

// Disjoint half-open cover of I with the oscillation of alpha over each cell
// bounded by epsilon. Cells are uniform in alpha: boundaries are preimages of
// an equipartition of [0, alpha(0)], so the bound holds by construction.
PartitionSpec build_partition(double v, int beta, double epsilon,
                              std::size_t cell_cap = 1u << 20);

struct AppendixParams {
    double a;                  // admissibility constant, < 4
    double r_star;             // target growth factor, in (1+v^2/(4-db^2), sqrt(beta))
    double lambda_tilde_plus;  // inner window edge, 0 < lt+ < lambda^+
    double epsilon_0;          // tolerance bound
    double epsilon;            // the epsilon actually used, < epsilon_0
    double delta_bar;          // max partition half-width at that epsilon
    double alpha_min;          // 1 - ln r*/ln beta - epsilon, > 1/2
    PartitionSpec partition;
};

// Executable parameter chooser. Verifies the admissibility chain
// v^2 < a(sqrt(beta)-1) < v_c^2 with a < 4 (rejecting with the violated
// inequality named), then picks r* as the geometric mean of its admissible
// interval after one partition/delta_bar fixed-point pass.
AppendixParams choose_parameters(double p, int beta, double a);

} // namespace sparsejac::theory
