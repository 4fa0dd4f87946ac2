// attrisk command line: simulate cohorts from the extended illness-death
// model, estimate the four attributable-fraction estimands from a cohort
// file, and run replicated simulation studies.
//
// Exit codes: 0 success, 2 argument error, 3 data error, 4 numerical error.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "attrisk/attrisk.hpp"

namespace {

struct SimulateOptions {
    int scenario_id = 0;
    std::string params_path;
    std::size_t n = 0;
    std::uint64_t seed = 1;
    std::string out_path;
};

struct EstimateOptions {
    std::string input_path;
    std::string estimand = "all";
    std::optional<double> window;
    std::string landmarks_spec;
    std::vector<std::string> covariates;
    std::size_t bootstrap = 0;
    double level = 0.95;
    std::uint64_t seed = 1;
    double min_cell = 5.0;
    std::string basis = "quadratic";
    std::string out_path;
    std::string curves_path;
};

struct StudyOptions {
    int scenario_id = 0;
    std::size_t reps = 0;
    std::size_t n = 0;
    std::uint64_t seed = 1;
    std::optional<double> window;
    std::string landmarks_spec;
    double min_cell = 5.0;
    std::string basis = "quadratic";
    std::size_t threads = 1;
    std::string out_path;
};

/// Inclusive A:B:STEP landmark grid specification.
std::vector<double> parse_landmarks_spec(const std::string& spec) {
    const auto parts = attrisk::detail::split(spec, ':');
    if (parts.size() != 3)
        throw attrisk::ArgumentError("landmark spec must be FIRST:LAST:STEP, got '" + spec + "'");
    double numbers[3];
    for (std::size_t i = 0; i < 3; ++i) {
        const auto v = attrisk::detail::parse_double(attrisk::detail::trim(parts[i]));
        if (!v)
            throw attrisk::ArgumentError("landmark spec field '" + std::string(parts[i]) +
                                         "' is not a number");
        numbers[i] = *v;
    }
    // Reuse the grid constructor for range validation, then return the points.
    return attrisk::make_landmark_grid(numbers[0], numbers[1], numbers[2], 1.0).landmarks;
}

void run_simulate(const SimulateOptions& opt) {
    if (opt.scenario_id == 0 && opt.params_path.empty())
        throw attrisk::ArgumentError("simulate needs --scenario or --params");
    attrisk::Scenario scenario;
    if (!opt.params_path.empty()) {
        scenario.id = 0;
        scenario.label = "custom (" + opt.params_path + ")";
        scenario.hazards = attrisk::ingest_hazard_params(opt.params_path);
    } else {
        scenario = attrisk::scenario_registry(opt.scenario_id);
    }
    const attrisk::Cohort cohort = attrisk::simulate_cohort(scenario, opt.n, opt.seed);
    attrisk::export_cohort(cohort, opt.out_path);
    std::size_t infected = 0, deaths = 0;
    for (const auto& p : cohort.patients) {
        if (p.infection_time) ++infected;
        if (p.died()) ++deaths;
    }
    std::cout << "cohort: n=" << cohort.size() << " infected=" << infected
              << " deaths=" << deaths << " tau=" << attrisk::detail::format_double(cohort.tau)
              << '\n';
}

/// Integer times 0..min(floor(tau), 200) plus the end of follow-up itself,
/// so the last row always sits at tau.
std::vector<double> estimate_grid(double tau) {
    std::vector<double> times;
    const double cap = std::min(std::floor(tau), 200.0);
    for (double t = 0.0; t <= cap; t += 1.0) times.push_back(t);
    if (times.empty() || times.back() < tau) times.push_back(tau);
    return times;
}

void run_estimate(const EstimateOptions& opt) {
    const bool all = opt.estimand == "all";
    const bool want_crude = all || opt.estimand == "crude";
    const bool want_o = all || opt.estimand == "paf_o";
    const bool want_c = all || opt.estimand == "paf_c";
    const bool want_lm = all || opt.estimand == "paf_lm";
    if (!want_crude && !want_o && !want_c && !want_lm)
        throw attrisk::ArgumentError("unknown estimand '" + opt.estimand +
                                     "' (expected crude, paf_o, paf_c, paf_lm, or all)");
    if (want_lm) {
        if (!opt.window || opt.landmarks_spec.empty())
            throw attrisk::ArgumentError("paf_lm needs --window and --landmarks");
    } else if (opt.window || !opt.landmarks_spec.empty()) {
        throw attrisk::ArgumentError("--window/--landmarks only apply when paf_lm is requested");
    }
    const attrisk::SupermodelBasis basis = attrisk::parse_supermodel_basis(opt.basis);

    const attrisk::Cohort cohort = attrisk::ingest_cohort(opt.input_path);
    attrisk::BootstrapOptions boot;
    boot.replicates = opt.bootstrap;
    boot.level = opt.level;
    boot.seed = opt.seed;
    const bool bands = opt.bootstrap > 0;

    std::vector<attrisk::ResultRow> rows;
    if (want_crude) {
        try {
            if (bands) {
                rows = attrisk::result_rows(
                    attrisk::bootstrap_paf_crude(cohort, boot, opt.covariates));
            } else {
                attrisk::ScalarEstimate crude;
                if (opt.covariates.empty()) {
                    crude.value = attrisk::paf_crude(attrisk::fourfold_table(cohort));
                } else {
                    const auto fit = attrisk::paf_greenland_drescher(cohort, opt.covariates);
                    crude.value = fit.value;
                    crude.variance = fit.variance;
                }
                rows = attrisk::result_rows(crude);
            }
        } catch (const attrisk::DataError& err) {
            // Under --estimand all, skip the crude row on data that cannot
            // support it (censoring) instead of failing the whole run.
            if (!all) throw;
            std::cerr << "note: skipping paf_crude: " << err.what() << '\n';
        }
    }

    std::optional<attrisk::TransitionCurves> curves;
    if (want_o || want_c || !opt.curves_path.empty())
        curves = attrisk::aalen_johansen(cohort);
    const std::vector<double> times = curves ? estimate_grid(cohort.tau) : std::vector<double>{};

    if (want_o) {
        if (!opt.covariates.empty())
            std::cerr << "note: paf_o has no adjusted form; covariates ignored\n";
        const auto curve = bands ? attrisk::bootstrap_paf_o(cohort, times, boot)
                                 : attrisk::paf_o_curve(*curves, times);
        const auto curve_rows = attrisk::result_rows(curve);
        rows.insert(rows.end(), curve_rows.begin(), curve_rows.end());
    }

    std::optional<attrisk::CensoredCif> cif;
    if (want_c) {
        attrisk::PafCurve curve;
        if (bands) {
            curve = attrisk::bootstrap_paf_c(cohort, times, boot, opt.covariates);
            // Recompute the full-sample incidence for the optional curve dump.
        }
        if (opt.covariates.empty()) {
            cif = attrisk::cif_censor_at_exposure(cohort);
        } else {
            const auto ipw = attrisk::ipw_uninfected_weights(
                cohort, opt.covariates, attrisk::integer_time_grid(cohort.tau));
            if (ipw.truncated > 0)
                std::cerr << "note: " << ipw.truncated
                          << " inverse-probability weights truncated at the cap\n";
            cif = attrisk::cif_censor_at_exposure(cohort, {}, &ipw.weights);
        }
        if (!bands) curve = attrisk::paf_c_curve(*curves, *cif, times);
        const auto curve_rows = attrisk::result_rows(curve);
        rows.insert(rows.end(), curve_rows.begin(), curve_rows.end());
    }

    if (want_lm) {
        const auto grid = attrisk::make_landmark_grid(parse_landmarks_spec(opt.landmarks_spec),
                                                      *opt.window);
        attrisk::LandmarkOptions lm_options;
        lm_options.min_cell = opt.min_cell;
        lm_options.covariates = opt.covariates;
        const auto analysis = bands
                                  ? attrisk::bootstrap_paf_lm_separate(cohort, grid, boot, lm_options)
                                  : attrisk::paf_lm_separate(cohort, grid, lm_options);
        for (const auto& skip : analysis.skipped)
            std::cerr << "note: landmark " << attrisk::detail::format_double(skip.landmark)
                      << " skipped: " << skip.reason << '\n';
        auto lm_rows = attrisk::result_rows(analysis);
        rows.insert(rows.end(), lm_rows.begin(), lm_rows.end());

        attrisk::LandmarkOptions super_options;  // the supermodel takes no covariates
        super_options.min_cell = opt.min_cell;
        if (!opt.covariates.empty())
            std::cerr << "note: supermodel rows are unadjusted; covariates apply to the "
                         "separate fits only\n";
        const auto fit =
            bands ? attrisk::bootstrap_paf_lm_supermodel(cohort, grid, boot, basis, super_options)
                  : attrisk::paf_lm_supermodel(cohort, grid, basis, super_options);
        auto super_rows = attrisk::result_rows(fit);
        rows.insert(rows.end(), super_rows.begin(), super_rows.end());
    }

    if (!opt.curves_path.empty()) {
        if (!cif) cif = attrisk::cif_censor_at_exposure(cohort);
        attrisk::write_occupancy_curves(opt.curves_path, *curves, &*cif);
    }
    if (opt.out_path.empty())
        attrisk::write_results(std::cout, rows);
    else
        attrisk::write_results(opt.out_path, rows);
}

void run_study(const StudyOptions& opt) {
    attrisk::StudyConfig config;
    config.scenario_id = opt.scenario_id;
    config.n = opt.n;
    config.replications = opt.reps;
    config.seed = opt.seed;
    config.landmarks = parse_landmarks_spec(opt.landmarks_spec);
    if (opt.window) config.window = *opt.window;
    config.min_cell = opt.min_cell;
    config.basis = attrisk::parse_supermodel_basis(opt.basis);
    config.threads = opt.threads;
    const auto rows = attrisk::run_study(config);
    if (opt.out_path.empty())
        attrisk::write_study(std::cout, rows);
    else
        attrisk::write_study(opt.out_path, rows);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"attrisk: attributable-fraction estimation for a time-dependent exposure "
                 "with competing risks"};
    app.require_subcommand(1);

    SimulateOptions sim;
    auto* simulate = app.add_subcommand("simulate", "simulate a cohort and write it to a file");
    auto* sim_scenario =
        simulate->add_option("--scenario", sim.scenario_id, "built-in scenario id (1-10)");
    auto* sim_params =
        simulate->add_option("--params", sim.params_path, "custom hazard parameter file");
    sim_scenario->excludes(sim_params);
    sim_params->excludes(sim_scenario);
    simulate->add_option("--n", sim.n, "number of patients")->required();
    simulate->add_option("--seed", sim.seed, "random seed");
    simulate->add_option("--out", sim.out_path, "output cohort file")->required();

    EstimateOptions est;
    auto* estimate =
        app.add_subcommand("estimate", "estimate attributable fractions from a cohort file");
    estimate->add_option("--input", est.input_path, "cohort file")->required();
    estimate->add_option("--estimand", est.estimand,
                         "crude, paf_o, paf_c, paf_lm, or all (default all)");
    estimate->add_option("--window", est.window, "landmark outcome window length");
    estimate->add_option("--landmarks", est.landmarks_spec, "landmark grid FIRST:LAST:STEP");
    estimate->add_option("--covariates", est.covariates,
                         "comma-separated covariate columns for adjustment")
        ->delimiter(',');
    estimate->add_option("--bootstrap", est.bootstrap,
                         "bootstrap replicates for confidence bands (0 = none)");
    estimate->add_option("--level", est.level, "confidence level (default 0.95)");
    estimate->add_option("--seed", est.seed, "bootstrap seed");
    estimate->add_option("--min-cell", est.min_cell,
                         "smallest admissible landmark fourfold cell (default 5)");
    estimate->add_option("--basis", est.basis,
                         "supermodel basis: constant, quadratic, or saturated");
    estimate->add_option("--out", est.out_path, "results file (default: stdout)");
    estimate->add_option("--curves", est.curves_path,
                         "also write the occupancy and incidence curves here");

    StudyOptions study;
    auto* study_cmd = app.add_subcommand("study", "replicated simulation study");
    study_cmd->add_option("--scenario", study.scenario_id, "built-in scenario id (1-10)")
        ->required();
    study_cmd->add_option("--reps", study.reps, "number of replications")->required();
    study_cmd->add_option("--n", study.n, "patients per replication")->required();
    study_cmd->add_option("--seed", study.seed, "base seed; replicate r uses seed + r");
    study_cmd->add_option("--window", study.window,
                          "landmark outcome window (default: scenario-specific)");
    study_cmd->add_option("--landmarks", study.landmarks_spec, "landmark grid FIRST:LAST:STEP")
        ->required();
    study_cmd->add_option("--min-cell", study.min_cell,
                          "smallest admissible landmark fourfold cell (default 5)");
    study_cmd->add_option("--basis", study.basis,
                          "supermodel basis: constant, quadratic, or saturated");
    study_cmd->add_option("--threads", study.threads, "parallel replication workers");
    study_cmd->add_option("--out", study.out_path, "summary file (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (simulate->parsed()) run_simulate(sim);
        if (estimate->parsed()) run_estimate(est);
        if (study_cmd->parsed()) run_study(study);
        return 0;
    } catch (const attrisk::ArgumentError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const attrisk::DataError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const attrisk::NumericalError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << '\n';
        return 4;
    }
}
