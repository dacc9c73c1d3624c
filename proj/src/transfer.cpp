#include "sparsejac/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "sparsejac/parallel.hpp"
#include "sparsejac/rng.hpp"

namespace sparsejac::transfer {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;

double frac(double t) { return t - std::floor(t); }

} // namespace

EnergyPoint EnergyPoint::rational(long long num, long long den) {
    if (den <= 0 || num <= 0 || num >= den)
        throw std::invalid_argument("EnergyPoint::rational: need 0 < num/den < 1");
    EnergyPoint e;
    e.tag = Tag::rational;
    e.num = num;
    e.den = den;
    e.x = static_cast<double>(num) / static_cast<double>(den);
    e.phi0 = kPi * e.x;
    e.lambda = 2.0 * std::cos(e.phi0);
    return e;
}

EnergyPoint EnergyPoint::named(const std::string& name) {
    EnergyPoint e;
    e.tag = Tag::named;
    e.name = name;
    if (name == "inv_sqrt2") {
        e.x = 1.0 / std::sqrt(2.0);
    } else if (name == "golden") {
        e.x = (std::sqrt(5.0) - 1.0) / 2.0;
    } else {
        throw std::invalid_argument("EnergyPoint::named: unknown name " + name);
    }
    e.phi0 = kPi * e.x;
    e.lambda = 2.0 * std::cos(e.phi0);
    return e;
}

EnergyPoint EnergyPoint::value(double x) {
    if (!(x > 0.0 && x < 1.0))
        throw std::invalid_argument("EnergyPoint::value: x must lie in (0,1)");
    EnergyPoint e;
    e.tag = Tag::value;
    e.x = x;
    e.phi0 = kPi * x;
    e.lambda = 2.0 * std::cos(e.phi0);
    return e;
}

TransferState step(const TransferState& state, double lambda, double p_n,
                   double p_prev) {
    if (!(p_n > 0.0)) throw std::invalid_argument("step: p_n must be > 0");
    return {state.u_curr, (lambda * state.u_curr - p_prev * state.u_prev) / p_n};
}

PruferState to_prufer(const TransferState& state, const EnergyPoint& energy) {
    const double x = state.u_curr - state.u_prev * std::cos(energy.phi0);
    const double y = state.u_prev * std::sin(energy.phi0);
    const double R2 = x * x + y * y;
    if (!(R2 > 1e-280))
        throw std::runtime_error("to_prufer: Pruefer radius underflow");
    return {std::log(R2), std::atan2(y, x)};
}

TransferState from_prufer(const PruferState& prufer, const EnergyPoint& energy) {
    const double R = std::exp(0.5 * prufer.log_R2);
    const double x = R * std::cos(prufer.theta);
    const double y = R * std::sin(prufer.theta);
    const double s = std::sin(energy.phi0);
    const double u_prev = y / s;
    return {u_prev, x + u_prev * std::cos(energy.phi0)};
}

std::vector<PruferState> propagate_bumps(const model::JacobiCoefficients& coeffs,
                                         const EnergyPoint& energy, double phi) {
    std::vector<PruferState> out;
    out.reserve(coeffs.bump_sites.size());
    TransferState state{std::sin(phi), std::cos(phi)};
    double log_scale = 0.0;
    double p_prev = 1.0;  // p_{-1}
    std::size_t next_bump = 0;
    for (std::size_t n = 0; n + 1 < static_cast<std::size_t>(coeffs.N); ++n) {
        const double p_n = coeffs.offdiag[n];
        state = step(state, energy.lambda, p_n, p_prev);
        p_prev = p_n;
        const double mag = std::max(std::abs(state.u_prev), std::abs(state.u_curr));
        if (mag > 1e100 || (mag > 0.0 && mag < 1e-100)) {
            state.u_prev /= mag;
            state.u_curr /= mag;
            log_scale += std::log(mag);
        }
        if (next_bump < coeffs.bump_sites.size() &&
            static_cast<std::int64_t>(n) == coeffs.bump_sites[next_bump]) {
            PruferState ps = to_prufer(state, energy);
            ps.log_R2 += 2.0 * log_scale;
            out.push_back(ps);
            ++next_bump;
        }
    }
    return out;
}

namespace {

// Internal walker state: normalized (x, y) Pruefer coordinates plus the
// accumulated log scale.
struct Walker {
    double x, y;
    double log_scale = 0.0;

    void renormalize() {
        const double m = std::max(std::abs(x), std::abs(y));
        if (m > 1e100 || (m > 0.0 && m < 1e-100)) {
            x /= m;
            y /= m;
            log_scale += std::log(m);
        }
    }

    // Advance by a free stretch whose rotation is 2*pi*rot_frac.
    void rotate(double rot_frac) {
        const double ang = kTwoPi * rot_frac;
        const double c = std::cos(ang), s = std::sin(ang);
        const double nx = c * x - s * y;
        const double ny = s * x + c * y;
        x = nx;
        y = ny;
    }

    PruferState prufer() const {
        return {2.0 * log_scale + std::log(x * x + y * y), std::atan2(y, x)};
    }
};

} // namespace

std::vector<PruferState> propagate_sparse(const model::SparsityProfile& profile,
                                          const model::DisorderSample& disorder,
                                          double p, const EnergyPoint& energy,
                                          double phi, const AngleTable& table) {
    const int J = static_cast<int>(disorder.omegas.size());
    if (table.gap_frac.size() < static_cast<std::size_t>(J))
        throw std::invalid_argument("propagate_sparse: angle table too short");
    if (!(p > 0.0 && p <= 1.0))
        throw std::invalid_argument("propagate_sparse: p must lie in (0,1]");

    const double lambda = energy.lambda;
    const double cphi0 = std::cos(energy.phi0);
    const double sphi0 = std::sin(energy.phi0);

    auto to_xy = [&](const TransferState& st) {
        return std::pair<double, double>{st.u_curr - st.u_prev * cphi0,
                                         st.u_prev * sphi0};
    };
    auto to_uv = [&](double x, double y) {
        const double u_prev = y / sphi0;
        return TransferState{u_prev, x + u_prev * cphi0};
    };

    Walker w;
    {
        const auto [x0, y0] = to_xy({std::sin(phi), std::cos(phi)});
        w.x = x0;
        w.y = y0;
    }

    auto explicit_step = [&](double p_n, double p_prev) {
        TransferState st = to_uv(w.x, w.y);
        st = step(st, lambda, p_n, p_prev);
        const auto [nx, ny] = to_xy(st);
        w.x = nx;
        w.y = ny;
    };

    std::vector<PruferState> out;
    out.reserve(static_cast<std::size_t>(J));
    double p_prev = 1.0;
    // Free stretch before bump j has m = gap(j) + adj steps, with adj the
    // small omega correction; m == 0 means the bumps sit on adjacent sites.
    for (int j = 1; j <= J; ++j) {
        long long adj = (j == 1)
                            ? disorder.omegas[0] - 1
                            : disorder.omegas[j - 1] - disorder.omegas[j - 2] - 1;
        // m == 0 is only reachable while gap(j) is small enough to evaluate.
        bool stretch_empty = false;
        const bool gap_fits =
            profile.kind != model::SparsityProfile::Kind::exponential ||
            j * std::log2(static_cast<double>(profile.beta)) < 62.0;
        if (gap_fits) {
            const long long m = profile.gap(j) + adj;
            if (m < 0)
                throw std::runtime_error("propagate_sparse: positions not increasing");
            stretch_empty = (m == 0);
        }
        if (!stretch_empty) {
            if (p_prev != 1.0) {
                // the step out of the previous bump still carries p_prev = p
                explicit_step(1.0, p_prev);
                p_prev = 1.0;
                adj -= 1;
            }
            // rotation by the remaining gap(j) + adj free steps; when that
            // count is zero the fraction cancels to ~0 and this is a no-op
            w.rotate(frac(table.gap_frac[static_cast<std::size_t>(j - 1)] +
                          static_cast<double>(adj) * table.x_half));
        }
        explicit_step(p, p_prev);  // the bump step divides by p_n = p
        p_prev = p;
        w.renormalize();
        out.push_back(w.prufer());
    }
    return out;
}

GrowthEstimate growth_rate(const theory::ModelParams& params,
                           const EnergyPoint& energy, int J, int samples,
                           std::uint64_t seed, int workers) {
    params.validate();
    if (J < 1) throw std::invalid_argument("growth_rate: J >= 1 required");
    if (samples < 2) throw std::invalid_argument("growth_rate: samples >= 2 required");

    const auto profile = model::SparsityProfile::exponential(params.beta);
    const AngleTable table = build_angle_table(profile, energy, J);
    const double log_R2_0 =
        to_prufer({std::sin(params.phi), std::cos(params.phi)}, energy).log_R2;

    // The first quarter of the bumps is a transient: the Prufer angle is not
    // yet equidistributed and the amplitude growth overshoots its stationary
    // rate. Discard it, as the discrepancy stage does.
    const int J0 = J / 4;
    std::vector<double> rates(static_cast<std::size_t>(samples));
    parallel_for(static_cast<std::size_t>(samples), workers, [&](std::size_t s) {
        const auto disorder = model::sample_disorder(J, rng::derive_seed(seed, s));
        const auto states =
            propagate_sparse(profile, disorder, params.p, energy, params.phi, table);
        const double base =
            J0 >= 1 ? states[static_cast<std::size_t>(J0 - 1)].log_R2 : log_R2_0;
        rates[s] = (states.back().log_R2 - base) / (J - J0);
    });

    GrowthEstimate est;
    est.samples = samples;
    est.j_max = J;
    est.excluded_energy = energy.excluded();
    double mean = 0.0;
    for (double r : rates) mean += r;
    mean /= samples;
    double var = 0.0;
    for (double r : rates) var += (r - mean) * (r - mean);
    var /= (samples - 1);
    est.rate_mean = mean;
    est.rate_stderr = std::sqrt(var / samples);
    return est;
}

double angle_discrepancy(const std::vector<double>& angles) {
    if (angles.size() < 1)
        throw std::invalid_argument("angle_discrepancy: need at least one angle");
    std::vector<double> pts;
    pts.reserve(angles.size());
    for (double th : angles) pts.push_back(frac(th / kPi));
    std::sort(pts.begin(), pts.end());
    const double n = static_cast<double>(pts.size());
    double d = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        d = std::max(d, (i + 1) / n - pts[i]);
        d = std::max(d, pts[i] - i / n);
    }
    return d;
}

} // namespace sparsejac::transfer
