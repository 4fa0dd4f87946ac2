#pragma once

// Replicated simulation study: simulate R independent cohorts from one
// scenario, estimate all four attributable-fraction estimands on each, and
// summarize every grid point across replications (mean and quartiles).
// Replicate r draws its cohort from seed + r, so any replicate can be
// reproduced in isolation with the simulate command.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "attrisk/aalen_johansen.hpp"
#include "attrisk/bootstrap.hpp"
#include "attrisk/cohort.hpp"
#include "attrisk/errors.hpp"
#include "attrisk/landmark.hpp"
#include "attrisk/paf.hpp"
#include "attrisk/results_io.hpp"
#include "attrisk/scenarios.hpp"
#include "attrisk/simulate.hpp"

namespace attrisk {

struct StudyConfig {
    int scenario_id = 0;
    std::size_t n = 0;
    std::size_t replications = 0;
    std::uint64_t seed = 1;
    std::vector<double> landmarks;
    double window = 0.0;  // <= 0 selects the scenario's default window
    double min_cell = 5.0;
    SupermodelBasis basis = SupermodelBasis::quadratic;
    std::size_t threads = 1;
    /// Curve summaries run on integer times 0..min(max observed exit, cap).
    double time_cap = 200.0;
};

namespace detail {

/// Everything one replication contributes; nullopt marks grid points where
/// the estimand was undefined for that replicate.
struct StudyReplicate {
    double tau = 0.0;
    std::optional<double> crude;
    std::vector<std::optional<double>> paf_o;         // integer times 0..cap
    std::vector<std::optional<double>> paf_c;         // integer times 0..cap
    std::vector<std::optional<double>> lm_separate;   // per requested landmark
    std::vector<std::optional<double>> lm_supermodel;
};

inline std::vector<std::optional<double>> optional_values(const PafCurve& curve) {
    std::vector<std::optional<double>> out(curve.values.size());
    for (std::size_t k = 0; k < curve.values.size(); ++k)
        if (curve.defined[k]) out[k] = curve.values[k];
    return out;
}

/// Match an analysis' kept landmarks back onto the requested grid.
template <typename Landmarks, typename Values>
inline void scatter_landmark_values(const std::vector<double>& requested,
                                    const Landmarks& kept, const Values& values,
                                    std::vector<std::optional<double>>& out) {
    std::size_t j = 0;
    for (std::size_t k = 0; k < kept.size(); ++k) {
        while (j < requested.size() && requested[j] < kept[k]) ++j;
        if (j == requested.size()) break;
        if (requested[j] == kept[k]) out[j] = values[k];
    }
}

inline StudyReplicate run_study_replicate(const Scenario& scenario, const StudyConfig& config,
                                          std::size_t r, const std::vector<double>& times,
                                          const LandmarkGrid& grid) {
    StudyReplicate rep;
    const Cohort cohort = simulate_cohort(scenario, config.n, config.seed + r);
    rep.tau = cohort.tau;
    try {
        rep.crude = paf_crude(fourfold_table(cohort));
    } catch (const DataError&) {
        // a replicate without deaths has no crude estimand
    }
    const auto curves = aalen_johansen(cohort);
    rep.paf_o = optional_values(paf_o_curve(curves, times));
    rep.paf_c = optional_values(paf_c_curve(curves, cif_censor_at_exposure(cohort), times));

    rep.lm_separate.assign(config.landmarks.size(), std::nullopt);
    rep.lm_supermodel.assign(config.landmarks.size(), std::nullopt);
    LandmarkOptions lm_options;
    lm_options.min_cell = config.min_cell;
    try {
        const auto analysis = paf_lm_separate(cohort, grid, lm_options);
        std::vector<double> kept, values;
        for (const auto& est : analysis.estimates) {
            kept.push_back(est.landmark);
            values.push_back(est.value);
        }
        scatter_landmark_values(config.landmarks, kept, values, rep.lm_separate);
    } catch (const DataError&) {
        // every landmark skipped in this replicate
    }
    try {
        const auto fit = paf_lm_supermodel(cohort, grid, config.basis, lm_options);
        scatter_landmark_values(config.landmarks, fit.landmarks, fit.values, rep.lm_supermodel);
    } catch (const DataError&) {
    } catch (const NumericalError&) {
        // supermodel failed to converge for this replicate
    }
    return rep;
}

/// Summarize one grid point across replications; no row when the estimand
/// was never defined there.
inline std::optional<StudyRow> summarize_point(
    const std::vector<StudyReplicate>& reps, const StudyConfig& config,
    const std::string& estimand, const std::string& tag, std::optional<double> at,
    const std::function<const std::optional<double>&(const StudyReplicate&)>& pick) {
    std::vector<double> values;
    values.reserve(reps.size());
    for (const auto& rep : reps)
        if (const auto& v = pick(rep)) values.push_back(*v);
    if (values.empty()) return std::nullopt;
    std::sort(values.begin(), values.end());
    StudyRow row;
    row.scenario = config.scenario_id;
    row.n = config.n;
    row.reps = config.replications;
    row.estimand = estimand;
    row.detail = tag;
    row.time_or_landmark = at;
    row.reps_defined = values.size();
    double sum = 0.0;
    for (const double v : values) sum += v;
    row.mean = sum / static_cast<double>(values.size());
    row.q1 = quantile_type7(values, 0.25);
    row.median = quantile_type7(values, 0.50);
    row.q3 = quantile_type7(values, 0.75);
    return row;
}

}  // namespace detail

/// Run the replicated study and return the summary table: crude first, then
/// the two curves over integer times, then both landmark fits.
inline std::vector<StudyRow> run_study(const StudyConfig& config) {
    if (config.replications == 0) throw ArgumentError("study needs at least one replication");
    if (config.n == 0) throw ArgumentError("study cohort size must be >= 1");
    if (config.landmarks.empty()) throw ArgumentError("study needs a landmark grid");
    if (!(config.time_cap >= 0.0)) throw ArgumentError("time cap must be >= 0");
    const Scenario scenario = scenario_registry(config.scenario_id);
    const double window = config.window > 0.0 ? config.window : scenario.default_window;
    const LandmarkGrid grid = make_landmark_grid(config.landmarks, window);

    std::vector<double> times;
    for (double t = 0.0; t <= config.time_cap; t += 1.0) times.push_back(t);

    std::vector<detail::StudyReplicate> reps(config.replications);
    const std::size_t workers =
        std::max<std::size_t>(1, std::min(config.threads, config.replications));
    if (workers == 1) {
        for (std::size_t r = 0; r < config.replications; ++r)
            reps[r] = detail::run_study_replicate(scenario, config, r, times, grid);
    } else {
        std::atomic<std::size_t> next{0};
        std::mutex failure_lock;
        std::exception_ptr failure;
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t r; (r = next.fetch_add(1)) < config.replications;) {
                    try {
                        reps[r] = detail::run_study_replicate(scenario, config, r, times, grid);
                    } catch (...) {
                        const std::lock_guard<std::mutex> hold(failure_lock);
                        if (!failure) failure = std::current_exception();
                        return;
                    }
                }
            });
        for (auto& t : pool) t.join();
        if (failure) std::rethrow_exception(failure);
    }

    // Trim the time grid to what was actually observed.
    double tau_max = 0.0;
    for (const auto& rep : reps) tau_max = std::max(tau_max, rep.tau);
    const std::size_t grid_size =
        std::min(times.size(), static_cast<std::size_t>(std::floor(tau_max)) + 1);

    std::vector<StudyRow> rows;
    const auto add = [&rows](std::optional<StudyRow> row) {
        if (row) rows.push_back(std::move(*row));
    };
    using detail::StudyReplicate;
    add(detail::summarize_point(reps, config, estimand_name(Estimand::paf_crude), "", std::nullopt,
                                [](const StudyReplicate& r) -> const std::optional<double>& {
                                    return r.crude;
                                }));
    for (std::size_t k = 0; k < grid_size; ++k)
        add(detail::summarize_point(reps, config, estimand_name(Estimand::paf_o), "", times[k],
                                    [k](const StudyReplicate& r) -> const std::optional<double>& {
                                        return r.paf_o[k];
                                    }));
    for (std::size_t k = 0; k < grid_size; ++k)
        add(detail::summarize_point(reps, config, estimand_name(Estimand::paf_c), "", times[k],
                                    [k](const StudyReplicate& r) -> const std::optional<double>& {
                                        return r.paf_c[k];
                                    }));
    for (std::size_t k = 0; k < config.landmarks.size(); ++k)
        add(detail::summarize_point(reps, config, estimand_name(Estimand::paf_lm), "separate",
                                    config.landmarks[k],
                                    [k](const StudyReplicate& r) -> const std::optional<double>& {
                                        return r.lm_separate[k];
                                    }));
    for (std::size_t k = 0; k < config.landmarks.size(); ++k)
        add(detail::summarize_point(reps, config, estimand_name(Estimand::paf_lm), "supermodel",
                                    config.landmarks[k],
                                    [k](const StudyReplicate& r) -> const std::optional<double>& {
                                        return r.lm_supermodel[k];
                                    }));
    return rows;
}

}  // namespace attrisk
