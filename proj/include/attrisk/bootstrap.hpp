#pragma once

// Nonparametric bootstrap for every estimand.  A replicate draws n patients
// with replacement and is represented by a per-patient multiplicity vector,
// so the weighted estimators reproduce exactly what rebuilding a duplicated
// cohort would give, without copying any data.  Intervals are percentile
// intervals with type-7 (linear interpolation) quantiles.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "attrisk/aalen_johansen.hpp"
#include "attrisk/cohort.hpp"
#include "attrisk/errors.hpp"
#include "attrisk/greenland_drescher.hpp"
#include "attrisk/ipw.hpp"
#include "attrisk/paf.hpp"
#include "attrisk/rng.hpp"

namespace attrisk {

struct BootstrapOptions {
    std::size_t replicates = 500;
    double level = 0.95;
    std::uint64_t seed = 1;
};

/// Pointwise percentile band.  `support[k]` counts the replicates where the
/// estimand was defined at evaluation point k; where it is zero the band is
/// undefined and lower/upper hold NaN.
struct BootstrapBand {
    std::vector<double> lower;
    std::vector<double> upper;
    std::vector<char> band_defined;
    std::vector<std::size_t> support;
    std::size_t replicates_used = 0;
    std::size_t replicates_dropped = 0;
};

namespace detail {

/// Type-7 quantile (linear interpolation between order statistics) of an
/// ascending sample.
inline double quantile_type7(const std::vector<double>& sorted, double p) {
    const double h = static_cast<double>(sorted.size() - 1) * p;
    const auto lo = static_cast<std::size_t>(h);
    if (lo + 1 >= sorted.size()) return sorted.back();
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace detail

/// Generic percentile-bootstrap engine.  `replicate_estimator` receives the
/// multiplicity vector of one resample and returns one optional value per
/// evaluation point (nullopt where the estimand is undefined for that
/// resample).  Replicates that throw a data or numerical error are dropped;
/// more than 10% dropped makes the whole bootstrap unreliable and raises a
/// numerical error.  Replicate b is driven by RngStream(seed, b), so bands
/// are reproducible and independent of evaluation order.
template <typename Estimator>
inline BootstrapBand bootstrap_percentile(std::size_t cohort_size, std::size_t point_count,
                                          const BootstrapOptions& options,
                                          Estimator&& replicate_estimator) {
    if (cohort_size == 0) throw ArgumentError("cannot bootstrap an empty cohort");
    if (point_count == 0) throw ArgumentError("bootstrap needs at least one evaluation point");
    if (options.replicates == 0) throw ArgumentError("bootstrap needs at least one replicate");
    if (!(options.level > 0.0) || !(options.level < 1.0))
        throw ArgumentError("confidence level must lie strictly between 0 and 1");

    std::vector<std::vector<double>> samples(point_count);
    std::vector<double> multiplicity(cohort_size);
    std::size_t dropped = 0;
    for (std::size_t b = 0; b < options.replicates; ++b) {
        RngStream rng(options.seed, b);
        std::fill(multiplicity.begin(), multiplicity.end(), 0.0);
        for (std::size_t j = 0; j < cohort_size; ++j)
            multiplicity[rng.bounded(cohort_size)] += 1.0;
        try {
            const std::vector<std::optional<double>> values =
                replicate_estimator(std::span<const double>(multiplicity));
            if (values.size() != point_count)
                throw ArgumentError("replicate estimator returned " +
                                    std::to_string(values.size()) + " values for " +
                                    std::to_string(point_count) + " evaluation points");
            for (std::size_t k = 0; k < point_count; ++k)
                if (values[k]) samples[k].push_back(*values[k]);
        } catch (const DataError&) {
            ++dropped;
        } catch (const NumericalError&) {
            ++dropped;
        }
    }
    if (dropped * 10 > options.replicates)
        throw NumericalError("bootstrap unreliable: " + std::to_string(dropped) + " of " +
                             std::to_string(options.replicates) + " replicates failed");

    BootstrapBand band;
    band.replicates_used = options.replicates - dropped;
    band.replicates_dropped = dropped;
    band.lower.resize(point_count, std::numeric_limits<double>::quiet_NaN());
    band.upper.resize(point_count, std::numeric_limits<double>::quiet_NaN());
    band.band_defined.resize(point_count, 0);
    band.support.resize(point_count, 0);
    const double tail = (1.0 - options.level) / 2.0;
    for (std::size_t k = 0; k < point_count; ++k) {
        auto& sample = samples[k];
        band.support[k] = sample.size();
        if (sample.empty()) continue;
        std::sort(sample.begin(), sample.end());
        band.lower[k] = detail::quantile_type7(sample, tail);
        band.upper[k] = detail::quantile_type7(sample, 1.0 - tail);
        band.band_defined[k] = 1;
    }
    return band;
}

namespace detail {

inline void attach_band(PafCurve& curve, const BootstrapBand& band) {
    curve.lower = band.lower;
    curve.upper = band.upper;
    curve.band_defined = band.band_defined;
}

/// Fourfold table of a weighted resample; same validation as the unweighted
/// tabulation.
inline FourfoldTable weighted_fourfold(const Cohort& cohort, std::span<const double> multiplicity) {
    if (cohort.patients.empty()) throw DataError("fourfold table undefined on an empty cohort");
    check_multiplicity(cohort, multiplicity);
    FourfoldTable table;
    for (std::size_t i = 0; i < cohort.size(); ++i) {
        const auto& p = cohort.patients[i];
        if (p.censored)
            throw DataError("fourfold table undefined: patient '" + p.id +
                            "' is censored; estimate paf_o and read its value at end of follow-up");
        const double w = multiplicity.empty() ? 1.0 : multiplicity[i];
        if (w <= 0.0) continue;
        const bool exposed = p.infection_time.has_value();
        (exposed ? table.exposed_total : table.unexposed_total) += w;
        if (p.died()) (exposed ? table.exposed_deaths : table.unexposed_deaths) += w;
    }
    return table;
}

}  // namespace detail

/// Scalar estimate with an optional bootstrap interval attached.
struct ScalarEstimate {
    double value = 0.0;
    std::optional<double> variance;  // delta-method variance, regression fits only
    std::optional<double> lower;
    std::optional<double> upper;
    std::size_t replicates_used = 0;
    std::size_t replicates_dropped = 0;
};

/// Crude attributable fraction with a percentile interval; with covariates
/// the point estimate and replicates use the regression standardization.
inline ScalarEstimate bootstrap_paf_crude(const Cohort& cohort, const BootstrapOptions& options,
                                          const std::vector<std::string>& covariates = {}) {
    ScalarEstimate out;
    if (covariates.empty()) {
        out.value = paf_crude(fourfold_table(cohort));
    } else {
        const auto fit = paf_greenland_drescher(cohort, covariates);
        out.value = fit.value;
        out.variance = fit.variance;
    }
    const auto band = bootstrap_percentile(
        cohort.size(), 1, options,
        [&](std::span<const double> multiplicity) -> std::vector<std::optional<double>> {
            if (covariates.empty())
                return {paf_crude(detail::weighted_fourfold(cohort, multiplicity))};
            return {paf_greenland_drescher(cohort, covariates, multiplicity).value};
        });
    if (band.band_defined[0]) {
        out.lower = band.lower[0];
        out.upper = band.upper[0];
    }
    out.replicates_used = band.replicates_used;
    out.replicates_dropped = band.replicates_dropped;
    return out;
}

/// Observational attributable-fraction curve on the given grid, with a
/// pointwise percentile band.
inline PafCurve bootstrap_paf_o(const Cohort& cohort, const std::vector<double>& times,
                                const BootstrapOptions& options) {
    PafCurve curve = paf_o_curve(aalen_johansen(cohort), times);
    const auto band = bootstrap_percentile(
        cohort.size(), times.size(), options,
        [&](std::span<const double> multiplicity) {
            const auto rep = paf_o_curve(aalen_johansen(cohort, multiplicity), times);
            std::vector<std::optional<double>> values(rep.values.size());
            for (std::size_t k = 0; k < rep.values.size(); ++k)
                if (rep.defined[k]) values[k] = rep.values[k];
            return values;
        });
    detail::attach_band(curve, band);
    return curve;
}

/// Causally oriented attributable-fraction curve on the given grid, with a
/// pointwise percentile band.  With covariates the infection-censored
/// incidence is reweighted by inverse probability weights, refitted inside
/// every replicate; `ipw_grid` defaults to unit intervals covering follow-up.
inline PafCurve bootstrap_paf_c(const Cohort& cohort, const std::vector<double>& times,
                                const BootstrapOptions& options,
                                const std::vector<std::string>& covariates = {},
                                const IpwOptions& ipw_options = {},
                                std::vector<double> ipw_grid = {}) {
    if (!covariates.empty() && ipw_grid.empty()) ipw_grid = integer_time_grid(cohort.tau);
    const auto estimate_curve = [&](std::span<const double> multiplicity) {
        const auto curves = aalen_johansen(cohort, multiplicity);
        if (covariates.empty())
            return paf_c_curve(curves, cif_censor_at_exposure(cohort, multiplicity), times);
        const auto ipw =
            ipw_uninfected_weights(cohort, covariates, ipw_grid, ipw_options, multiplicity);
        return paf_c_curve(curves,
                           cif_censor_at_exposure(cohort, multiplicity, &ipw.weights), times);
    };
    PafCurve curve = estimate_curve({});
    const auto band = bootstrap_percentile(
        cohort.size(), times.size(), options,
        [&](std::span<const double> multiplicity) {
            const auto rep = estimate_curve(multiplicity);
            std::vector<std::optional<double>> values(rep.values.size());
            for (std::size_t k = 0; k < rep.values.size(); ++k)
                if (rep.defined[k]) values[k] = rep.values[k];
            return values;
        });
    detail::attach_band(curve, band);
    return curve;
}

/// Per-landmark fourfold (or adjusted) estimates with percentile intervals.
/// Evaluation points are the landmarks kept by the full-sample analysis; a
/// replicate that skips one of them simply contributes nothing there.
inline LandmarkAnalysis bootstrap_paf_lm_separate(const Cohort& cohort, const LandmarkGrid& grid,
                                                  const BootstrapOptions& options,
                                                  const LandmarkOptions& lm_options = {}) {
    LandmarkAnalysis analysis = paf_lm_separate(cohort, grid, lm_options);
    std::vector<double> kept;
    kept.reserve(analysis.estimates.size());
    for (const auto& est : analysis.estimates) kept.push_back(est.landmark);
    const auto band = bootstrap_percentile(
        cohort.size(), kept.size(), options,
        [&](std::span<const double> multiplicity) {
            const auto rep = paf_lm_separate(cohort, grid, lm_options, multiplicity);
            std::vector<std::optional<double>> values(kept.size());
            std::size_t j = 0;
            for (const auto& est : rep.estimates) {
                while (j < kept.size() && kept[j] < est.landmark) ++j;
                if (j == kept.size()) break;
                if (kept[j] == est.landmark) values[j] = est.value;
            }
            return values;
        });
    for (std::size_t k = 0; k < kept.size(); ++k) {
        if (!band.band_defined[k]) continue;
        analysis.estimates[k].lower = band.lower[k];
        analysis.estimates[k].upper = band.upper[k];
    }
    return analysis;
}

/// Supermodel landmark curve with percentile intervals at the full-sample
/// kept landmarks.
inline SupermodelFit bootstrap_paf_lm_supermodel(const Cohort& cohort, const LandmarkGrid& grid,
                                                 const BootstrapOptions& options,
                                                 SupermodelBasis basis = SupermodelBasis::quadratic,
                                                 const LandmarkOptions& lm_options = {}) {
    SupermodelFit fit = paf_lm_supermodel(cohort, grid, basis, lm_options);
    const auto band = bootstrap_percentile(
        cohort.size(), fit.landmarks.size(), options,
        [&](std::span<const double> multiplicity) {
            const auto rep = paf_lm_supermodel(cohort, grid, basis, lm_options, multiplicity);
            std::vector<std::optional<double>> values(fit.landmarks.size());
            std::size_t j = 0;
            for (std::size_t r = 0; r < rep.landmarks.size(); ++r) {
                while (j < fit.landmarks.size() && fit.landmarks[j] < rep.landmarks[r]) ++j;
                if (j == fit.landmarks.size()) break;
                if (fit.landmarks[j] == rep.landmarks[r]) values[j] = rep.values[r];
            }
            return values;
        });
    fit.lower.assign(fit.landmarks.size(), std::nullopt);
    fit.upper.assign(fit.landmarks.size(), std::nullopt);
    for (std::size_t k = 0; k < fit.landmarks.size(); ++k) {
        if (!band.band_defined[k]) continue;
        fit.lower[k] = band.lower[k];
        fit.upper[k] = band.upper[k];
    }
    return fit;
}

}  // namespace attrisk
