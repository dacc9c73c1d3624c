// Command-line driver. Every subcommand reads a JSON config, runs one stage
// of the experiment harness, and writes results.jsonl + CSV tables into the
// output directory. Exit codes: 0 success, 1 invalid config/arguments, 2
// compute failure.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "sparsejac/experiment.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sparsejac;

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out_dir = "out";
    std::optional<std::uint64_t> seed;
    int workers = 1;
};

void attach_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "JSON config file")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--out", opts.out_dir, "output directory");
    cmd->add_option("--seed", opts.seed, "override the config seed");
    cmd->add_option("--workers", opts.workers, "worker threads")
        ->check(CLI::PositiveNumber);
}

experiment::ExperimentConfig load_config(const CommonOpts& opts) {
    auto config = experiment::ExperimentConfig::load(opts.config_path);
    if (opts.seed) config.seed = *opts.seed;
    return config;
}

json base_record(const experiment::ExperimentConfig& config,
                 const std::string& subcommand) {
    json record;
    record["schema_version"] = 1;
    record["subcommand"] = subcommand;
    record["config"] = config.to_json();
    return record;
}

void write_csv(const fs::path& path, const std::string& header,
               const std::vector<std::string>& rows) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << header << "\n";
    for (const auto& row : rows) out << row << "\n";
}

int run_phase_diagram(const CommonOpts& opts) {
    const auto config = load_config(opts);
    const auto rows = experiment::run_phase_diagram(config);
    auto record = base_record(config, "phase-diagram");
    record["phase_diagram"] = json::array();
    for (const auto& r : rows)
        record["phase_diagram"].push_back(
            {{"lambda", r.lambda}, {"v_over_vc", r.v_ratio}, {"region", r.region}});
    experiment::emit(record, opts.out_dir);
    return 0;
}

int run_spectrum(const CommonOpts& opts) {
    const auto config = load_config(opts);
    const auto profile = model::SparsityProfile::exponential(config.model.beta);
    const auto positions = model::randomized_positions(
        model::bump_positions(profile, config.depth_J),
        model::sample_disorder(config.depth_J, config.seed));
    std::int64_t N = config.truncation;
    if (N == 0) N = model::default_truncation_length(profile, positions);
    const auto coeffs = model::coefficients(positions, config.model.p, N);
    const auto mu = spectra::spectral_measure(
        spectra::build_matrix(coeffs, config.model.phi));

    auto record = base_record(config, "spectrum");
    record["N"] = N;
    record["atoms"] = mu.size();
    record["total_mass"] = mu.total_mass();
    experiment::emit(record, opts.out_dir);

    std::vector<std::string> rows;
    rows.reserve(mu.size());
    for (std::size_t k = 0; k < mu.size(); ++k)
        rows.push_back(experiment::format_double(mu.atoms[k]) + "," +
                       experiment::format_double(mu.weights[k]));
    write_csv(fs::path(opts.out_dir) / "spectrum.csv", "lambda,weight", rows);
    return 0;
}

int run_per_energy(const CommonOpts& opts, const std::string& name) {
    auto config = load_config(opts);
    if (config.energies.empty())
        throw std::invalid_argument("config: " + name + " needs at least one energy");
    // keep only the stage this subcommand is about
    if (name == "dimension" && config.scales.empty())
        throw std::invalid_argument("config: dimension needs non-empty scales");
    config.kronecker = false;
    if (name != "dimension" && name != "decay") config.scales.clear();

    auto record = base_record(config, name);
    record["energies"] = json::array();
    if (name == "decay") {
        for (const auto& e : config.energies) {
            json je;
            je["energy"] = {{"lambda", e.lambda}};
            try {
                je["decay"] =
                    experiment::run_decay_stage(config, e, 0.1, opts.workers);
            } catch (const std::exception& ex) {
                je["decay"] = {{"error", ex.what()}};
            }
            record["energies"].push_back(je);
        }
    } else {
        const auto suite = experiment::run_transition_suite(config, opts.workers);
        for (const auto& je : suite.at("energies")) {
            json out;
            out["energy"] = je.at("energy");
            const char* stage = name == "prufer" ? "growth" : "dimension";
            out[stage] = je.at(stage);
            if (name == "prufer") out["discrepancy"] = je.at("discrepancy");
            record["energies"].push_back(out);
        }
    }
    experiment::emit(record, opts.out_dir);
    return 0;
}

int run_kronecker(const CommonOpts& opts) {
    auto config = load_config(opts);
    const double a = config.appendix_a.value_or(1.0);
    auto record = base_record(config, "kronecker");
    record["kronecker"] = experiment::run_kronecker_stage(config, a, opts.workers);
    experiment::emit(record, opts.out_dir);
    return 0;
}

int run_params(const CommonOpts& opts) {
    const auto config = load_config(opts);
    if (!config.appendix_a)
        throw std::invalid_argument("config: params needs appendix_a");
    const auto ap = theory::choose_parameters(config.model.p, config.model.beta,
                                              *config.appendix_a);
    auto record = base_record(config, "params");
    record["params"] = {{"a", ap.a},
                        {"r_star", ap.r_star},
                        {"lambda_tilde_plus", ap.lambda_tilde_plus},
                        {"epsilon_0", ap.epsilon_0},
                        {"epsilon", ap.epsilon},
                        {"delta_bar", ap.delta_bar},
                        {"alpha_min", ap.alpha_min},
                        {"cells", ap.partition.size()}};
    experiment::emit(record, opts.out_dir);

    std::vector<std::string> rows;
    for (std::size_t i = 0; i < ap.partition.size(); ++i)
        rows.push_back(experiment::format_double(ap.partition.centers[i]) + "," +
                       experiment::format_double(ap.partition.half_widths[i]));
    write_csv(fs::path(opts.out_dir) / "partition.csv", "center,half_width", rows);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"sparse Jacobi spectral-transition experiments"};
    app.require_subcommand(1);

    CommonOpts opts;
    std::string selected;
    for (const char* name : {"phase-diagram", "spectrum", "dimension", "decay",
                             "prufer", "kronecker", "params"}) {
        auto* cmd = app.add_subcommand(name);
        attach_common(cmd, opts);
        cmd->callback([&selected, name] { selected = name; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) ? 1 : 0;
    }

    try {
        if (selected == "phase-diagram") return run_phase_diagram(opts);
        if (selected == "spectrum") return run_spectrum(opts);
        if (selected == "dimension" || selected == "prufer")
            return run_per_energy(opts, selected);
        if (selected == "decay") return run_per_energy(opts, "decay");
        if (selected == "kronecker") return run_kronecker(opts);
        if (selected == "params") return run_params(opts);
        std::cerr << "unknown subcommand\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid input: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "compute error: " << e.what() << "\n";
        return 2;
    }
}
