#include "sparsejac/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "sparsejac/parallel.hpp"
#include "sparsejac/rng.hpp"

namespace sparsejac::experiment {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double x) {
    char buf[64];
    for (int prec = 15; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, x);
        if (std::strtod(buf, nullptr) == x) break;
    }
    return buf;
}

void ExperimentConfig::validate() const {
    model.validate();
    profile.validate();
    if (profile.kind == model::SparsityProfile::Kind::exponential &&
        profile.beta != model.beta)
        throw std::invalid_argument("config: profile.beta disagrees with model.beta");
    if (depth_J < 1) throw std::invalid_argument("config: depth_J must be >= 1 (model)");
    if (samples < 1) throw std::invalid_argument("config: samples must be >= 1 (transfer)");
    if (truncation < 0)
        throw std::invalid_argument("config: truncation must be >= 0 (spectra)");
    if (!(theta.min > 0.0 && theta.min < 1.0))
        throw std::invalid_argument("config: theta.min must lie in (0,1) (measure)");
    if (theta.grid < 1 || theta.draws < 0)
        throw std::invalid_argument("config: theta policy counts invalid (measure)");
    for (std::size_t i = 0; i < scales.size(); ++i) {
        if (!(scales[i] > 0.0))
            throw std::invalid_argument("config: scales must be positive (spectra)");
        if (i && scales[i] >= scales[i - 1])
            throw std::invalid_argument("config: scales must be strictly decreasing (spectra)");
    }
    if (appendix_a && !(*appendix_a < 4.0))
        throw std::invalid_argument("config: appendix_a must be < 4 (theory)");
    if (kronecker && kronecker_J < 1)
        throw std::invalid_argument("config: kronecker_J must be >= 1 (model)");
    if (phase_lambda_points < 2 || phase_ratio_points < 1)
        throw std::invalid_argument("config: phase grid needs >= 2 lambda and >= 1 ratio points (cli)");
}

namespace {

json energy_to_json(const transfer::EnergyPoint& e) {
    json j;
    switch (e.tag) {
        case transfer::EnergyPoint::Tag::rational:
            j["type"] = "rational";
            j["num"] = e.num;
            j["den"] = e.den;
            break;
        case transfer::EnergyPoint::Tag::named:
            j["type"] = "named";
            j["name"] = e.name;
            break;
        case transfer::EnergyPoint::Tag::value:
            j["type"] = "value";
            j["x"] = e.x;
            break;
    }
    j["lambda"] = e.lambda;
    return j;
}

transfer::EnergyPoint energy_from_json(const json& j) {
    const std::string type = j.at("type").get<std::string>();
    if (type == "rational")
        return transfer::EnergyPoint::rational(j.at("num").get<long long>(),
                                               j.at("den").get<long long>());
    if (type == "named")
        return transfer::EnergyPoint::named(j.at("name").get<std::string>());
    if (type == "value")
        return transfer::EnergyPoint::value(j.at("x").get<double>());
    throw std::invalid_argument("config: unknown energy type " + type);
}

} // namespace

ExperimentConfig ExperimentConfig::from_json(const json& j) {
    ExperimentConfig c;
    const json& m = j.at("model");
    c.model.p = m.at("p").get<double>();
    c.model.beta = m.at("beta").get<int>();
    c.model.phi = m.value("phi", 0.0);
    if (j.contains("profile")) {
        const json& pr = j.at("profile");
        const std::string kind = pr.value("kind", "exponential");
        if (kind == "exponential")
            c.profile = model::SparsityProfile::exponential(c.model.beta);
        else if (kind == "superexponential")
            c.profile = model::SparsityProfile::superexponential(
                pr.at("c").get<double>(), pr.at("gamma").get<double>());
        else if (kind == "subexponential")
            c.profile = model::SparsityProfile::subexponential(
                pr.at("c").get<double>(), pr.at("gamma").get<double>());
        else
            throw std::invalid_argument("config: unknown profile kind " + kind);
    } else {
        c.profile = model::SparsityProfile::exponential(c.model.beta);
    }
    if (j.contains("energies"))
        for (const json& e : j.at("energies")) c.energies.push_back(energy_from_json(e));
    c.depth_J = j.value("depth_J", 16);
    if (j.contains("truncation") && j.at("truncation").is_number())
        c.truncation = j.at("truncation").get<std::int64_t>();
    c.samples = j.value("samples", 100);
    c.seed = j.value("seed", std::uint64_t{1});
    if (j.contains("theta")) {
        const json& t = j.at("theta");
        c.theta.grid = t.value("grid", 8);
        c.theta.draws = t.value("draws", 2);
        c.theta.min = t.value("min", 0.1);
    }
    if (j.contains("scales"))
        c.scales = j.at("scales").get<std::vector<double>>();
    if (j.contains("appendix_a")) c.appendix_a = j.at("appendix_a").get<double>();
    c.kronecker = j.value("kronecker", false);
    c.kronecker_J = j.value("kronecker_J", 6);
    if (j.contains("phase")) {
        c.phase_lambda_points = j.at("phase").value("lambda_points", 81);
        c.phase_ratio_points = j.at("phase").value("ratio_points", 21);
    }
    c.validate();
    return c;
}

json ExperimentConfig::to_json() const {
    json j;
    j["model"] = {{"p", model.p}, {"beta", model.beta}, {"phi", model.phi}};
    switch (profile.kind) {
        case model::SparsityProfile::Kind::exponential:
            j["profile"] = {{"kind", "exponential"}};
            break;
        case model::SparsityProfile::Kind::superexponential:
            j["profile"] = {{"kind", "superexponential"}, {"c", profile.c}, {"gamma", profile.gamma}};
            break;
        case model::SparsityProfile::Kind::subexponential:
            j["profile"] = {{"kind", "subexponential"}, {"c", profile.c}, {"gamma", profile.gamma}};
            break;
    }
    j["energies"] = json::array();
    for (const auto& e : energies) j["energies"].push_back(energy_to_json(e));
    j["depth_J"] = depth_J;
    j["truncation"] = truncation;
    j["samples"] = samples;
    j["seed"] = seed;
    j["theta"] = {{"grid", theta.grid}, {"draws", theta.draws}, {"min", theta.min}};
    j["scales"] = scales;
    if (appendix_a) j["appendix_a"] = *appendix_a;
    j["kronecker"] = kronecker;
    j["kronecker_J"] = kronecker_J;
    j["phase"] = {{"lambda_points", phase_lambda_points}, {"ratio_points", phase_ratio_points}};
    return j;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config: cannot open " + path);
    json j;
    in >> j;
    return from_json(j);
}

std::vector<double> theta_values(const ThetaPolicy& policy, std::uint64_t seed) {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(policy.grid + policy.draws));
    for (int i = 0; i < policy.grid; ++i) {
        const double t = policy.grid == 1
                             ? 1.0
                             : policy.min + (1.0 - policy.min) * i / (policy.grid - 1);
        out.push_back(t);
    }
    for (int i = 0; i < policy.draws; ++i) {
        const std::uint64_t word = rng::draw(seed, 0xC0FFEEull + i);
        const double u = (word >> 11) * 0x1.0p-53;  // [0,1)
        out.push_back(policy.min + (1.0 - policy.min) * u);
    }
    return out;
}

std::vector<PhaseDiagramRow> run_phase_diagram(const ExperimentConfig& config) {
    std::vector<PhaseDiagramRow> rows;
    rows.reserve(static_cast<std::size_t>(config.phase_lambda_points) *
                 config.phase_ratio_points);
    const double v_c = theory::critical_couplings(config.model.beta).v_c;
    for (int i = 0; i < config.phase_ratio_points; ++i) {
        const double ratio =
            config.phase_ratio_points == 1
                ? 0.0
                : 0.999 * i / (config.phase_ratio_points - 1);
        const auto window = theory::sc_interval(ratio * v_c, config.model.beta);
        for (int k = 0; k < config.phase_lambda_points; ++k) {
            const double lambda =
                -2.0 + 4.0 * (k + 0.5) / config.phase_lambda_points;
            rows.push_back({lambda, ratio,
                            window.contains(lambda) ? "sc" : "pp"});
        }
    }
    return rows;
}

namespace {

std::vector<double> dyadic_grid(double lo, double hi) {
    std::vector<double> g;
    for (double t = lo; t <= hi; t *= 2.0) g.push_back(t);
    return g;
}

json growth_stage(const ExperimentConfig& c, const transfer::EnergyPoint& e,
                  int workers) {
    const auto est = transfer::growth_rate(c.model, e, c.depth_J, c.samples,
                                           c.seed, workers);
    json j;
    j["rate_mean"] = est.rate_mean;
    j["rate_stderr"] = est.rate_stderr;
    j["samples"] = est.samples;
    j["J"] = est.j_max;
    j["excluded_energy"] = est.excluded_energy;
    const double v = theory::coupling_v(c.model.p);
    if (std::abs(e.lambda) < 2.0) {
        const auto dim = theory::local_dimension(e.lambda, v, c.model.beta);
        if (dim.inside)
            j["log_r_target"] = std::log(theory::r_factor(e.lambda, v));
    }
    return j;
}

json discrepancy_stage(const ExperimentConfig& c, const transfer::EnergyPoint& e,
                       int workers) {
    const int J_hi = c.depth_J;
    const int J_lo = std::max(2, c.depth_J / 4);
    const auto profile = model::SparsityProfile::exponential(c.model.beta);
    const auto table = transfer::build_angle_table(profile, e, J_hi);
    std::vector<double> d_lo(static_cast<std::size_t>(c.samples));
    std::vector<double> d_hi(static_cast<std::size_t>(c.samples));
    parallel_for(static_cast<std::size_t>(c.samples), workers, [&](std::size_t s) {
        const auto disorder =
            model::sample_disorder(J_hi, rng::derive_seed(c.seed, s));
        const auto states = transfer::propagate_sparse(
            profile, disorder, c.model.p, e, c.model.phi, table);
        std::vector<double> angles;
        angles.reserve(states.size());
        for (const auto& st : states) angles.push_back(st.theta);
        d_hi[s] = transfer::angle_discrepancy(angles);
        angles.resize(static_cast<std::size_t>(J_lo));
        d_lo[s] = transfer::angle_discrepancy(angles);
    });
    double mean_lo = 0, mean_hi = 0;
    int improved = 0;
    for (int s = 0; s < c.samples; ++s) {
        mean_lo += d_lo[static_cast<std::size_t>(s)];
        mean_hi += d_hi[static_cast<std::size_t>(s)];
        if (d_hi[static_cast<std::size_t>(s)] < d_lo[static_cast<std::size_t>(s)])
            ++improved;
    }
    json j;
    j["J_lo"] = J_lo;
    j["J_hi"] = J_hi;
    j["mean_D_lo"] = mean_lo / c.samples;
    j["mean_D_hi"] = mean_hi / c.samples;
    j["improved_fraction"] = static_cast<double>(improved) / c.samples;
    j["excluded_energy"] = e.excluded();
    return j;
}

json dimension_stage(const ExperimentConfig& c, const transfer::EnergyPoint& e,
                     int workers) {
    const auto fit = spectra::dimension_fit(c.model, e.lambda, c.depth_J,
                                            c.samples, c.scales, c.seed,
                                            c.truncation, workers);
    json j;
    j["alpha_hat"] = fit.alpha_hat;
    j["residual"] = fit.residual;
    j["truncation"] = fit.truncation;
    j["samples"] = fit.samples;
    j["scales"] = fit.scales;
    j["masses"] = fit.masses;
    const double v = theory::coupling_v(c.model.p);
    const auto dim = theory::local_dimension(e.lambda, v, c.model.beta);
    j["alpha_target"] = dim.inside ? dim.alpha : 0.0;
    return j;
}

measure::AtomicMeasure factor_measure(const ExperimentConfig& c, int J,
                                      std::uint64_t seed, std::int64_t N) {
    const auto profile = model::SparsityProfile::exponential(c.model.beta);
    const auto positions = model::randomized_positions(
        model::bump_positions(profile, J), model::sample_disorder(J, seed));
    if (N == 0) N = model::default_truncation_length(profile, positions);
    const auto coeffs = model::coefficients(positions, c.model.p, N);
    return spectra::spectral_measure(spectra::build_matrix(coeffs, c.model.phi));
}

} // namespace

json run_decay_stage(const ExperimentConfig& config,
                     const transfer::EnergyPoint& energy, double half_width,
                     int workers) {
    if (!(half_width > 0.0))
        throw std::invalid_argument("decay: half_width must be positive (measure)");
    const double lam = energy.lambda;
    const auto profile = model::SparsityProfile::exponential(config.model.beta);
    const int J = config.depth_J;
    const int S = config.samples;

    std::vector<measure::AtomicMeasure> windows(static_cast<std::size_t>(S));
    parallel_for(static_cast<std::size_t>(S), workers, [&](std::size_t s) {
        const auto positions = model::randomized_positions(
            model::bump_positions(profile, J),
            model::sample_disorder(J, rng::derive_seed(config.seed, s)));
        std::int64_t N = config.truncation;
        if (N == 0) N = model::default_truncation_length(profile, positions);
        const auto coeffs = model::coefficients(positions, config.model.p, N);
        const auto T = spectra::build_matrix(coeffs, config.model.phi);
        const double pad = 1.05 * half_width;
        windows[s] = measure::restrict(
            spectra::spectral_measure_in(T, lam - pad, lam + pad, 1e-11),
            lam - half_width, lam + half_width);
    });

    double heis_min = std::numeric_limits<double>::infinity();
    for (const auto& w : windows)
        if (w.size() >= 2) heis_min = std::min(heis_min, measure::heisenberg_time(w));
    if (!std::isfinite(heis_min) || heis_min / 10.0 <= 32.0)
        throw std::runtime_error("decay: window too sparse for a time-domain fit");

    // T below ~1/half_width is ballistic (transform not yet decaying); the
    // fit starts past that crossover and stays below the Heisenberg horizon.
    const auto grid = dyadic_grid(16.0, heis_min / 10.0);
    if (grid.size() < 5)
        throw std::runtime_error("decay: fewer than 5 usable dyadic times");

    std::vector<double> mean_I(grid.size(), 0.0);
    for (const auto& w : windows)
        for (std::size_t i = 0; i < grid.size(); ++i)
            mean_I[i] += measure::time_average(w, grid[i]) / S;

    // least-squares slope of log I vs log T
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const auto n = static_cast<double>(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double lx = std::log(grid[i]), ly = std::log(mean_I[i]);
        sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);

    const double v = theory::coupling_v(config.model.p);
    const auto dim = theory::local_dimension(lam, v, config.model.beta);
    json j;
    j["lambda"] = lam;
    j["half_width"] = half_width;
    j["T_grid"] = grid;
    j["mean_I"] = mean_I;
    j["decay_exponent"] = slope;  // I(T) ~ T^slope
    j["target_exponent"] = dim.inside ? 1.0 - dim.alpha : 1.0;
    j["samples"] = S;
    return j;
}

json run_kronecker_stage(const ExperimentConfig& config, double a, int workers) {
    const auto ap = theory::choose_parameters(config.model.p, config.model.beta, a);
    const double ltp = ap.lambda_tilde_plus;
    const double lp = theory::sc_interval(theory::coupling_v(config.model.p),
                                          config.model.beta)
                          .hi;
    const int J = config.kronecker_J;
    const auto profile = model::SparsityProfile::exponential(config.model.beta);
    const auto pos1 = model::randomized_positions(
        model::bump_positions(profile, J),
        model::sample_disorder(J, rng::derive_seed(config.seed, 101)));
    const std::int64_t N = model::default_truncation_length(profile, pos1);

    const auto mu1 = factor_measure(config, J, rng::derive_seed(config.seed, 101), N);
    const auto mu2 = factor_measure(config, J, rng::derive_seed(config.seed, 202), N);
    const auto mu1d = factor_measure(config, J, rng::derive_seed(config.seed, 101), 2 * N);
    const auto mu2d = factor_measure(config, J, rng::derive_seed(config.seed, 202), 2 * N);

    const auto thetas = theta_values(config.theta, config.seed);
    std::vector<json> per_theta(thetas.size());
    parallel_for(thetas.size(), workers, [&](std::size_t i) {
        const double theta = thetas[i];
        const auto r1 = measure::restrict(mu1, -ltp, ltp);
        const auto r2 = measure::restrict(mu2, -ltp, ltp);
        const double cap = std::min(measure::heisenberg_time(r1),
                                    measure::heisenberg_time(r2) / theta) /
                           10.0;
        const auto grid = dyadic_grid(1.0, std::min(512.0, cap));
        const auto l2 = measure::l2_criterion(r1, r2, theta, grid);
        const auto hist = measure::convolution_histogram(
            r1, r2, theta, 64, -ltp * (1.0 + theta), ltp * (1.0 + theta));

        // outer tail |E| > lambda^+(1+theta): only pairs with both factors in
        // the band tails can land there, so the restricted convolution is tiny.
        auto outer_max = [&](const measure::AtomicMeasure& a1,
                             const measure::AtomicMeasure& a2) {
            const double edge = lp * (1.0 + theta);
            const auto t1 = measure::restrict(a1, edge - 2.0 * theta, 2.0);
            const auto t2 = measure::restrict(a2, (edge - 2.0) / theta, 2.0);
            if (t1.size() == 0 || t2.size() == 0) return 0.0;
            const auto conv = measure::kronecker_measure(t1, t2, theta);
            const auto tail = measure::restrict(conv.measure, edge, 4.0);
            double m = 0.0;
            for (double w : tail.weights) m = std::max(m, w);
            return m;
        };
        const double w_base = outer_max(mu1, mu2);
        const double w_doubled = outer_max(mu1d, mu2d);

        json row;
        row["theta"] = theta;
        row["l2_tail_slope"] = l2.tail_slope;
        row["hist_stability"] = hist.stability_score;
        row["outer_max_weight"] = w_base;
        row["outer_max_weight_doubled"] = w_doubled;
        row["outer_weight_ratio"] = w_base > 0.0 ? w_doubled / w_base : 1.0;
        per_theta[i] = std::move(row);
    });

    json j;
    j["J"] = J;
    j["N"] = N;
    j["atoms"] = mu1.size();
    j["lambda_plus"] = lp;
    j["lambda_tilde_plus"] = ltp;
    j["per_theta"] = per_theta;
    return j;
}

json run_transition_suite(const ExperimentConfig& config, int workers) {
    config.validate();
    json record;
    record["schema_version"] = 1;
    record["config"] = config.to_json();

    const double v = theory::coupling_v(config.model.p);
    const auto crit = theory::critical_couplings(config.model.beta);
    json th;
    th["v"] = v;
    th["v_c"] = crit.v_c;
    th["p_c"] = crit.p_c;
    const auto window = theory::sc_interval(v, config.model.beta);
    th["lambda_plus"] = window.empty() ? json() : json(window.hi);
    th["alpha_center"] = theory::local_dimension(0.0, v, config.model.beta).alpha;
    record["theory"] = th;

    if (config.appendix_a) {
        try {
            const auto ap =
                theory::choose_parameters(config.model.p, config.model.beta,
                                          *config.appendix_a);
            record["appendix"] = {{"a", ap.a},
                                  {"r_star", ap.r_star},
                                  {"lambda_tilde_plus", ap.lambda_tilde_plus},
                                  {"epsilon_0", ap.epsilon_0},
                                  {"epsilon", ap.epsilon},
                                  {"delta_bar", ap.delta_bar},
                                  {"alpha_min", ap.alpha_min},
                                  {"cells", ap.partition.size()}};
        } catch (const std::exception& ex) {
            record["appendix"] = {{"error", ex.what()}};
        }
    }

    record["energies"] = json::array();
    for (const auto& e : config.energies) {
        json je;
        je["energy"] = energy_to_json(e);
        try {
            je["growth"] = growth_stage(config, e, workers);
        } catch (const std::exception& ex) {
            je["growth"] = {{"error", ex.what()}};
        }
        try {
            je["discrepancy"] = discrepancy_stage(config, e, workers);
        } catch (const std::exception& ex) {
            je["discrepancy"] = {{"error", ex.what()}};
        }
        if (!config.scales.empty()) {
            try {
                je["dimension"] = dimension_stage(config, e, workers);
            } catch (const std::exception& ex) {
                je["dimension"] = {{"error", ex.what()}};
            }
            try {
                je["decay"] = run_decay_stage(config, e, 0.1, workers);
            } catch (const std::exception& ex) {
                je["decay"] = {{"error", ex.what()}};
            }
        }
        record["energies"].push_back(std::move(je));
    }

    if (config.kronecker) {
        try {
            const double a = config.appendix_a.value_or(1.0);
            record["kronecker"] =
                run_kronecker_stage(config, a, workers);
        } catch (const std::exception& ex) {
            record["kronecker"] = {{"error", ex.what()}};
        }
    }
    return record;
}

void emit(const json& record, const std::string& out_dir) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec)
        throw std::runtime_error("emit: cannot create " + out_dir + ": " + ec.message());

    {
        std::ofstream out(fs::path(out_dir) / "results.jsonl");
        if (!out) throw std::runtime_error("emit: cannot write results.jsonl in " + out_dir);
        out << record.dump() << "\n";
    }
    {
        // timing lives outside the payload so reruns stay byte-identical
        json meta;
        meta["written_unix_ms"] =
            std::chrono::duration_cast<std::chrono::milliseconds>(
                std::chrono::system_clock::now().time_since_epoch())
                .count();
        std::ofstream out(fs::path(out_dir) / "meta.json");
        out << meta.dump(2) << "\n";
    }

    // flat tables for plotting
    if (record.contains("phase_diagram")) {
        std::ofstream csv(fs::path(out_dir) / "phase_diagram.csv");
        csv << "lambda,v_over_vc,region\n";
        for (const json& row : record.at("phase_diagram"))
            csv << format_double(row.at("lambda").get<double>()) << ","
                << format_double(row.at("v_over_vc").get<double>()) << ","
                << row.at("region").get<std::string>() << "\n";
    }
    if (record.contains("energies")) {
        std::ofstream csv(fs::path(out_dir) / "energies.csv");
        csv << "lambda,rate_mean,rate_stderr,mean_D_hi,improved_fraction,alpha_hat,alpha_target\n";
        for (const json& je : record.at("energies")) {
            auto field = [&](const char* stage, const char* key) -> std::string {
                if (!je.contains(stage) || je.at(stage).contains("error") ||
                    !je.at(stage).contains(key))
                    return "";
                return format_double(je.at(stage).at(key).get<double>());
            };
            csv << format_double(je.at("energy").at("lambda").get<double>()) << ","
                << field("growth", "rate_mean") << ","
                << field("growth", "rate_stderr") << ","
                << field("discrepancy", "mean_D_hi") << ","
                << field("discrepancy", "improved_fraction") << ","
                << field("dimension", "alpha_hat") << ","
                << field("dimension", "alpha_target") << "\n";
        }
    }
    if (record.contains("kronecker") && record.at("kronecker").contains("per_theta")) {
        std::ofstream csv(fs::path(out_dir) / "kronecker.csv");
        csv << "theta,l2_tail_slope,hist_stability,outer_weight_ratio\n";
        for (const json& row : record.at("kronecker").at("per_theta"))
            csv << format_double(row.at("theta").get<double>()) << ","
                << format_double(row.at("l2_tail_slope").get<double>()) << ","
                << format_double(row.at("hist_stability").get<double>()) << ","
                << format_double(row.at("outer_weight_ratio").get<double>()) << "\n";
    }
}

} // namespace sparsejac::experiment
