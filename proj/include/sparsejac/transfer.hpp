#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sparsejac/model.hpp"
#include "sparsejac/theory.hpp"

// Fixed-energy transfer across the sparse lattice in Pruefer variables.
// Free stretches are exact rotations by phi0 per site, so all radius growth
// localizes at bumps; stretches of length beta^j are skipped in one rotation
// whose angle is reduced mod 2*pi in extended precision (see angle table).

namespace sparsejac::transfer {

// Energy lambda = 2 cos(phi0) with phi0 = pi * x. Whether x = phi0/pi is
// rational is declared at construction, never inferred from the float:
// rational energies belong to the excluded sets 2 cos(pi Q) and are tagged.
struct EnergyPoint {
    enum class Tag { rational, named, value };
    Tag tag = Tag::value;
    long long num = 0, den = 1;  // rational x = num/den
    std::string name;            // "inv_sqrt2" or "golden"
    double x = 0.5;              // phi0 / pi, in (0,1)
    double phi0 = 0.0;
    double lambda = 0.0;

    bool excluded() const { return tag == Tag::rational; }

    static EnergyPoint rational(long long num, long long den);
    static EnergyPoint named(const std::string& name);
    static EnergyPoint value(double x);
};

struct TransferState {
    double u_prev = 0.0;  // u_{n-1}
    double u_curr = 1.0;  // u_n
};

struct PruferState {
    double log_R2 = 0.0;  // natural log of the squared Pruefer radius
    double theta = 0.0;   // Pruefer angle, radians
};

// One step of the difference equation: u_{n+1} = (lambda u_n - p_prev u_{n-1}) / p_n.
TransferState step(const TransferState& state, double lambda, double p_n, double p_prev);

// x = u_n - u_{n-1} cos(phi0), y = u_{n-1} sin(phi0); R^2 = x^2 + y^2.
PruferState to_prufer(const TransferState& state, const EnergyPoint& energy);
TransferState from_prufer(const PruferState& prufer, const EnergyPoint& energy);

// Pruefer state sampled immediately after each bump, iterating the explicit
// coefficient array site by site (the small-N reference path).
std::vector<PruferState> propagate_bumps(const model::JacobiCoefficients& coeffs,
                                         const EnergyPoint& energy, double phi);

// Per-gap rotation fractions frac(gap_j * phi0 / (2 pi)), precomputed in
// extended precision so the sparse fast path stays accurate out to J ~ 64
// even though gap_J overflows any native integer.
struct AngleTable {
    std::vector<double> gap_frac;  // index j-1 holds frac(gap(j) * x/2)
    double x_half = 0.0;           // x / 2, for the small omega adjustments
};

AngleTable build_angle_table(const model::SparsityProfile& profile,
                             const EnergyPoint& energy, int J);

// Fast path over the implicit lattice: explicit steps only at bumps, one
// rotation per free stretch. Initial data (u_{-1}, u_0) = (sin phi, cos phi).
std::vector<PruferState> propagate_sparse(const model::SparsityProfile& profile,
                                          const model::DisorderSample& disorder,
                                          double p, const EnergyPoint& energy,
                                          double phi, const AngleTable& table);

struct GrowthEstimate {
    double rate_mean = 0.0;    // mean growth of log R^2 per bump past a J/4 burn-in
    double rate_stderr = 0.0;  // over independent disorder samples
    int samples = 0;
    int j_max = 0;
    bool excluded_energy = false;  // rational phi0/pi: equidistribution fails
};

GrowthEstimate growth_rate(const theory::ModelParams& params,
                           const EnergyPoint& energy, int J, int samples,
                           std::uint64_t seed, int workers = 1);

// Star discrepancy of {theta_j / pi mod 1}.
double angle_discrepancy(const std::vector<double>& angles);

} // namespace sparsejac::transfer
