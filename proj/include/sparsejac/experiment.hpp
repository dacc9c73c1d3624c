#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sparsejac/measure.hpp"
#include "sparsejac/model.hpp"
#include "sparsejac/spectra.hpp"
#include "sparsejac/theory.hpp"
#include "sparsejac/transfer.hpp"

// Experiment harness: config parsing/validation, seeded orchestration of the
// Monte Carlo stages, and deterministic emission of JSONL records plus flat
// CSV tables. Every number in a record is a pure function of (config, seed).

namespace sparsejac::experiment {

struct ThetaPolicy {
    int grid = 8;       // uniform grid points on [min, 1]
    int draws = 2;      // seeded uniform draws on [min, 1]
    double min = 0.1;
};

struct ExperimentConfig {
    theory::ModelParams model{0.8, 2, 0.0};
    model::SparsityProfile profile = model::SparsityProfile::exponential(2);
    std::vector<transfer::EnergyPoint> energies;
    int depth_J = 16;
    std::int64_t truncation = 0;  // 0 = auto (mid-gap default)
    int samples = 100;
    std::uint64_t seed = 1;
    ThetaPolicy theta;
    std::vector<double> scales;      // dimension-fit window half-widths
    std::optional<double> appendix_a;  // enables the parameter-chooser stage
    bool kronecker = false;
    int kronecker_J = 6;
    int phase_lambda_points = 81;
    int phase_ratio_points = 21;

    void validate() const;
    static ExperimentConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
    static ExperimentConfig load(const std::string& path);
};

// Collect theta values for the "a.e. theta" stand-in: uniform grid plus
// seeded draws, reproducible from the config seed.
std::vector<double> theta_values(const ThetaPolicy& policy, std::uint64_t seed);

struct PhaseDiagramRow {
    double lambda;
    double v_ratio;  // v / v_c
    std::string region;  // "sc" or "pp"
};

std::vector<PhaseDiagramRow> run_phase_diagram(const ExperimentConfig& config);

// Disorder-averaged Strichartz average I(T) on a dyadic grid for the spectral
// measure restricted to (lambda - half_width, lambda + half_width), with the
// log-log slope of the mean curve; for an alpha-Hoelder window the target
// decay exponent is 1 - alpha(lambda).
nlohmann::json run_decay_stage(const ExperimentConfig& config,
                               const transfer::EnergyPoint& energy,
                               double half_width, int workers);

// Kronecker-sum diagnostics: one disorder sample per factor at depth
// kronecker_J, then per-theta central-window histogram stability, L2 tail
// slope inside the inner window, and outer-tail max-atom behavior under
// truncation doubling. `a` is the admissibility constant of the parameter
// chooser that fixes the inner window edge.
nlohmann::json run_kronecker_stage(const ExperimentConfig& config, double a,
                                   int workers);

// One full record: growth, discrepancy, dimension and decay fits per energy,
// plus per-theta Kronecker diagnostics when enabled. Stage failures are
// recorded in place and do not abort the remaining stages.
nlohmann::json run_transition_suite(const ExperimentConfig& config, int workers);

// Write record + flat CSV tables under out_dir. The JSONL payload carries no
// timing; wall-clock goes to a separate meta.json so payloads stay
// byte-identical across reruns.
void emit(const nlohmann::json& record, const std::string& out_dir);

// Round-trip float formatting (shortest representation that parses back
// exactly) used for every CSV field.
std::string format_double(double x);

} // namespace sparsejac::experiment
