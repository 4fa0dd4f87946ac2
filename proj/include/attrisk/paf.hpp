#pragma once

// The four population-attributable-fraction estimands: the crude fourfold
// estimate, the two time-resolved curves built from transition-probability
// estimates, and the landmark analysis (per-landmark fourfold tables plus a
// pooled regression across landmarks).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "attrisk/aalen_johansen.hpp"
#include "attrisk/cohort.hpp"
#include "attrisk/detail/text.hpp"
#include "attrisk/errors.hpp"
#include "attrisk/greenland_drescher.hpp"
#include "attrisk/landmark.hpp"
#include "attrisk/logistic.hpp"

namespace attrisk {

enum class Estimand { paf_crude, paf_o, paf_c, paf_lm };

inline const char* estimand_name(Estimand e) {
    switch (e) {
        case Estimand::paf_crude: return "paf_crude";
        case Estimand::paf_o: return "paf_o";
        case Estimand::paf_c: return "paf_c";
        case Estimand::paf_lm: return "paf_lm";
    }
    return "unknown";
}

inline Estimand parse_estimand(const std::string& name) {
    if (name == "paf_crude") return Estimand::paf_crude;
    if (name == "paf_o") return Estimand::paf_o;
    if (name == "paf_c") return Estimand::paf_c;
    if (name == "paf_lm") return Estimand::paf_lm;
    throw ArgumentError("unknown estimand '" + name +
                        "' (expected paf_crude, paf_o, paf_c, or paf_lm)");
}

/// Attributable fraction as a step function of time.  `defined[j]` is 0
/// where the estimand does not exist yet (no deaths observed, or an empty
/// conditioning group); `values[j]` holds NaN there.  `lower`/`upper` stay
/// empty until a bootstrap band is attached.
struct PafCurve {
    Estimand estimand = Estimand::paf_o;
    std::vector<double> times;
    std::vector<double> values;
    std::vector<char> defined;
    std::vector<double> lower;
    std::vector<double> upper;
    std::vector<char> band_defined;
    std::size_t n = 0;

    /// Step-function lookup; NaN before the first grid point or where the
    /// estimand is undefined.
    double value_at(double t) const {
        const auto it = std::upper_bound(times.begin(), times.end(), t);
        if (it == times.begin()) return std::numeric_limits<double>::quiet_NaN();
        const auto j = static_cast<std::size_t>(it - times.begin()) - 1;
        return defined[j] ? values[j] : std::numeric_limits<double>::quiet_NaN();
    }
};

/// Crude attributable fraction 1 - P(death | unexposed) / P(death) from a
/// fully observed fourfold table.
inline double paf_crude(const FourfoldTable& table) {
    if (table.total() <= 0.0)
        throw DataError("crude attributable fraction undefined on an empty table");
    if (table.unexposed_total <= 0.0)
        throw DataError("crude attributable fraction undefined: no unexposed patients");
    if (table.deaths() <= 0.0)
        throw DataError("crude attributable fraction undefined: no deaths observed");
    const double prob_death = table.deaths() / table.total();
    const double prob_death_unexposed = table.unexposed_deaths / table.unexposed_total;
    return 1.0 - prob_death_unexposed / prob_death;
}

/// Observational attributable fraction over time,
///   1 - P(death without prior exposure | never exposed by t) / P(death by t),
/// read off the six occupancy curves.  Undefined while no deaths have
/// occurred or the never-exposed group is empty.
inline PafCurve paf_o_curve(const TransitionCurves& curves, std::vector<double> times) {
    PafCurve out;
    out.estimand = Estimand::paf_o;
    out.n = curves.n;
    out.times = std::move(times);
    out.values.reserve(out.times.size());
    out.defined.reserve(out.times.size());
    for (const double t : out.times) {
        const double p00 = curves.value(State::initial, t);
        const double p02 = curves.value(State::discharged_uninfected, t);
        const double p03 = curves.value(State::dead_uninfected, t);
        const double prob_death = p03 + curves.value(State::dead_infected, t);
        const double never_exposed = p00 + p02 + p03;
        if (prob_death > 0.0 && never_exposed > 0.0) {
            out.values.push_back(1.0 - (p03 / never_exposed) / prob_death);
            out.defined.push_back(1);
        } else {
            out.values.push_back(std::numeric_limits<double>::quiet_NaN());
            out.defined.push_back(0);
        }
    }
    return out;
}

inline PafCurve paf_o_curve(const TransitionCurves& curves) {
    return paf_o_curve(curves, curves.times);
}

/// Causally oriented attributable fraction over time,
///   (P(death by t) - P0(death by t)) / P(death by t),
/// where P0 comes from the infection-censored incidence curve.  Undefined
/// while no deaths have occurred.
inline PafCurve paf_c_curve(const TransitionCurves& curves, const CensoredCif& cif,
                            std::vector<double> times) {
    if (curves.n != cif.n)
        throw ArgumentError("occupancy curves and censored incidence curve come from "
                            "different cohorts (sizes " + std::to_string(curves.n) + " and " +
                            std::to_string(cif.n) + ")");
    PafCurve out;
    out.estimand = Estimand::paf_c;
    out.n = curves.n;
    out.times = std::move(times);
    out.values.reserve(out.times.size());
    out.defined.reserve(out.times.size());
    for (const double t : out.times) {
        const double prob_death = curves.prob_death(t);
        if (prob_death > 0.0) {
            out.values.push_back((prob_death - cif.value(t)) / prob_death);
            out.defined.push_back(1);
        } else {
            out.values.push_back(std::numeric_limits<double>::quiet_NaN());
            out.defined.push_back(0);
        }
    }
    return out;
}

/// Default evaluation grid: the union of both curves' jump times.
inline PafCurve paf_c_curve(const TransitionCurves& curves, const CensoredCif& cif) {
    std::vector<double> merged;
    merged.reserve(curves.times.size() + cif.times.size());
    std::merge(curves.times.begin(), curves.times.end(), cif.times.begin(), cif.times.end(),
               std::back_inserter(merged));
    merged.erase(std::unique(merged.begin(), merged.end()), merged.end());
    return paf_c_curve(curves, cif, std::move(merged));
}

/// One landmark's contribution to the landmark analysis.  `value` is the
/// attributable fraction among patients still in hospital at the landmark,
/// for death inside (landmark, landmark + window].  `relative_risk` and
/// `prevalence_cases` are the factors of the equivalent prevalence-of-cases
/// form value = prevalence_cases * (RR - 1) / RR.
struct LandmarkEstimate {
    double landmark = 0.0;
    double window = 0.0;
    double value = 0.0;
    double relative_risk = 0.0;
    double prevalence_cases = 0.0;
    FourfoldTable table;
    std::optional<double> variance;  // delta-method variance, regression fits only
    std::optional<double> lower;     // bootstrap band when attached
    std::optional<double> upper;
};

struct SkippedLandmark {
    double landmark = 0.0;
    std::string reason;
};

struct LandmarkOptions {
    /// Smallest admissible fourfold cell; landmarks below it are skipped.
    double min_cell = 5.0;
    /// When non-empty, replace the fourfold estimate by a covariate-adjusted
    /// regression standardization at each landmark.
    std::vector<std::string> covariates;
};

struct LandmarkAnalysis {
    double window = 0.0;
    std::vector<LandmarkEstimate> estimates;
    std::vector<SkippedLandmark> skipped;
};

namespace detail {

/// Weighted fourfold table over one landmark's members.
inline FourfoldTable landmark_fourfold(const Cohort& cohort,
                                       const std::vector<std::size_t>& members, double landmark,
                                       double window, std::span<const double> multiplicity) {
    FourfoldTable table;
    for (const std::size_t i : members) {
        const double w = multiplicity.empty() ? 1.0 : multiplicity[i];
        if (w <= 0.0) continue;
        const auto& p = cohort.patients[i];
        const bool exposed = p.infected_by(landmark);
        const bool died = landmark_death(p, landmark, window);
        (exposed ? table.exposed_total : table.unexposed_total) += w;
        if (died) (exposed ? table.exposed_deaths : table.unexposed_deaths) += w;
    }
    return table;
}

struct LandmarkScreen {
    std::vector<double> kept;
    std::vector<std::vector<std::size_t>> members;  // aligned with kept
    std::vector<FourfoldTable> tables;              // aligned with kept
    std::vector<SkippedLandmark> skipped;
};

/// Decide per landmark whether its fourfold table supports an estimate.
inline LandmarkScreen screen_landmarks(const Cohort& cohort, const LandmarkGrid& grid,
                                       double min_cell, std::span<const double> multiplicity) {
    if (grid.landmarks.empty()) throw ArgumentError("landmark grid must contain at least one landmark");
    if (!(grid.window > 0.0) || !std::isfinite(grid.window))
        throw ArgumentError("landmark window must be > 0");
    if (min_cell < 0.0) throw ArgumentError("minimum cell count must be >= 0");
    check_multiplicity(cohort, multiplicity);

    LandmarkScreen screen;
    for (const double l : grid.landmarks) {
        auto members = landmark_members(cohort, l, grid.window);
        const auto table = landmark_fourfold(cohort, members, l, grid.window, multiplicity);
        std::string reason;
        if (table.total() <= 0.0) {
            reason = "no patients in hospital at the landmark";
        } else if (table.exposed_total <= 0.0) {
            reason = "no exposed patients at the landmark";
        } else if (table.unexposed_total <= 0.0) {
            reason = "no unexposed patients at the landmark";
        } else if (table.deaths() <= 0.0) {
            reason = "no deaths inside the window";
        } else {
            const double smallest =
                std::min(std::min(table.exposed_deaths, table.exposed_total - table.exposed_deaths),
                         std::min(table.unexposed_deaths,
                                  table.unexposed_total - table.unexposed_deaths));
            if (smallest < min_cell)
                reason = "fourfold cell below minimum " + format_double(min_cell) +
                         " (exposed deaths " + format_double(table.exposed_deaths) +
                         ", exposed survivors " +
                         format_double(table.exposed_total - table.exposed_deaths) +
                         ", unexposed deaths " + format_double(table.unexposed_deaths) +
                         ", unexposed survivors " +
                         format_double(table.unexposed_total - table.unexposed_deaths) + ")";
        }
        if (reason.empty()) {
            screen.kept.push_back(l);
            screen.members.push_back(std::move(members));
            screen.tables.push_back(table);
        } else {
            screen.skipped.push_back({l, std::move(reason)});
        }
    }
    return screen;
}

inline std::string skipped_summary(const std::vector<SkippedLandmark>& skipped) {
    std::string text;
    for (const auto& s : skipped) {
        if (!text.empty()) text += "; ";
        text += "landmark " + format_double(s.landmark) + ": " + s.reason;
    }
    return text;
}

}  // namespace detail

/// Landmark analysis with one fourfold table (or one adjusted regression)
/// per landmark.  Landmarks whose table fails the cell-count screen are
/// reported in `skipped`; if every landmark is skipped the analysis is
/// undefined and a data error names each reason.
inline LandmarkAnalysis paf_lm_separate(const Cohort& cohort, const LandmarkGrid& grid,
                                        const LandmarkOptions& options = {},
                                        std::span<const double> multiplicity = {}) {
    const auto screen = detail::screen_landmarks(cohort, grid, options.min_cell, multiplicity);
    if (screen.kept.empty())
        throw DataError("no landmark produced an estimate: " +
                        detail::skipped_summary(screen.skipped));

    LandmarkAnalysis analysis;
    analysis.window = grid.window;
    analysis.skipped = screen.skipped;
    for (std::size_t k = 0; k < screen.kept.size(); ++k) {
        const double l = screen.kept[k];
        const auto& table = screen.tables[k];
        LandmarkEstimate est;
        est.landmark = l;
        est.window = grid.window;
        est.table = table;
        const double risk_exposed = table.exposed_deaths / table.exposed_total;
        const double risk_unexposed = table.unexposed_deaths / table.unexposed_total;
        est.relative_risk = risk_unexposed > 0.0
                                ? risk_exposed / risk_unexposed
                                : std::numeric_limits<double>::infinity();
        est.prevalence_cases = table.exposed_deaths / table.deaths();
        if (options.covariates.empty()) {
            est.value = 1.0 - risk_unexposed / (table.deaths() / table.total());
        } else {
            const auto rows = landmark_dataset(cohort, l, grid.window);
            std::vector<double> row_weights;
            if (!multiplicity.empty()) {
                row_weights.reserve(rows.size());
                for (const std::size_t i : screen.members[k]) row_weights.push_back(multiplicity[i]);
            }
            const auto fit = paf_greenland_drescher(rows, cohort.covariate_names,
                                                    options.covariates, row_weights);
            est.value = fit.value;
            est.variance = fit.variance;
        }
        analysis.estimates.push_back(std::move(est));
    }
    return analysis;
}

enum class SupermodelBasis { constant, quadratic, saturated };

inline const char* supermodel_basis_name(SupermodelBasis b) {
    switch (b) {
        case SupermodelBasis::constant: return "constant";
        case SupermodelBasis::quadratic: return "quadratic";
        case SupermodelBasis::saturated: return "saturated";
    }
    return "unknown";
}

inline SupermodelBasis parse_supermodel_basis(const std::string& name) {
    if (name == "constant") return SupermodelBasis::constant;
    if (name == "quadratic") return SupermodelBasis::quadratic;
    if (name == "saturated") return SupermodelBasis::saturated;
    throw ArgumentError("unknown supermodel basis '" + name +
                        "' (expected constant, quadratic, or saturated)");
}

/// One logistic model pooled over every kept landmark, with baseline risk
/// and exposure effect both expanded in a basis of the landmark time.
/// `values[k]` is the standardized attributable fraction at `landmarks[k]`:
/// (mean fitted risk - mean fitted risk with exposure switched off) / mean
/// fitted risk, averaged over that landmark's rows.
struct SupermodelFit {
    SupermodelBasis basis = SupermodelBasis::quadratic;
    double window = 0.0;
    LogisticFit fit;
    std::vector<double> landmarks;
    std::vector<double> values;
    std::vector<std::optional<double>> lower;  // bootstrap band when attached
    std::vector<std::optional<double>> upper;
    std::vector<SkippedLandmark> skipped;
};

inline SupermodelFit paf_lm_supermodel(const Cohort& cohort, const LandmarkGrid& grid,
                                       SupermodelBasis basis = SupermodelBasis::quadratic,
                                       const LandmarkOptions& options = {},
                                       std::span<const double> multiplicity = {}) {
    if (!options.covariates.empty())
        throw ArgumentError("the landmark supermodel does not take covariates; "
                            "use the separate per-landmark fits for adjustment");
    const auto screen = detail::screen_landmarks(cohort, grid, options.min_cell, multiplicity);
    if (screen.kept.empty())
        throw DataError("no landmark entered the supermodel: " +
                        detail::skipped_summary(screen.skipped));

    // Basis columns b(l), duplicated once plain and once multiplied by the
    // exposure indicator.
    const std::size_t kept_count = screen.kept.size();
    std::vector<std::string> base_names;
    std::size_t basis_size = 0;
    switch (basis) {
        case SupermodelBasis::constant:
            basis_size = 1;
            base_names = {"baseline"};
            break;
        case SupermodelBasis::quadratic:
            basis_size = 3;
            base_names = {"baseline", "baseline_l", "baseline_l2"};
            break;
        case SupermodelBasis::saturated:
            basis_size = kept_count;
            for (const double l : screen.kept)
                base_names.push_back("baseline_at_" + detail::format_double(l));
            break;
    }
    if (kept_count < basis_size)
        throw NumericalError("landmark supermodel basis '" +
                             std::string(supermodel_basis_name(basis)) + "' needs " +
                             std::to_string(basis_size) + " distinct landmarks but only " +
                             std::to_string(kept_count) +
                             " survived screening; use a coarser basis or a wider grid");
    const auto basis_row = [&](std::size_t kept_index, std::vector<double>& out) {
        out.assign(basis_size, 0.0);
        const double l = screen.kept[kept_index];
        switch (basis) {
            case SupermodelBasis::constant: out[0] = 1.0; break;
            case SupermodelBasis::quadratic:
                out[0] = 1.0;
                out[1] = l;
                out[2] = l * l;
                break;
            case SupermodelBasis::saturated: out[kept_index] = 1.0; break;
        }
    };

    std::size_t total_rows = 0;
    for (const auto& members : screen.members) total_rows += members.size();

    DesignMatrix design;
    design.x.resize(static_cast<Eigen::Index>(total_rows), static_cast<Eigen::Index>(2 * basis_size));
    design.response.resize(static_cast<Eigen::Index>(total_rows));
    design.weights.resize(static_cast<Eigen::Index>(total_rows));
    design.column_names = base_names;
    for (const auto& name : base_names) {
        std::string exposed_name = name;
        const std::string prefix = "baseline";
        exposed_name.replace(0, prefix.size(), "exposure");
        design.column_names.push_back(std::move(exposed_name));
    }

    std::vector<std::size_t> row_landmark;  // kept-index of each stacked row
    row_landmark.reserve(total_rows);
    std::vector<double> b;
    Eigen::Index r = 0;
    for (std::size_t k = 0; k < kept_count; ++k) {
        basis_row(k, b);
        const double l = screen.kept[k];
        for (const std::size_t i : screen.members[k]) {
            const auto& p = cohort.patients[i];
            const double exposed = p.infected_by(l) ? 1.0 : 0.0;
            for (std::size_t c = 0; c < basis_size; ++c) {
                design.x(r, static_cast<Eigen::Index>(c)) = b[c];
                design.x(r, static_cast<Eigen::Index>(basis_size + c)) = exposed * b[c];
            }
            design.response[r] = landmark_death(p, l, grid.window) ? 1.0 : 0.0;
            design.weights[r] = multiplicity.empty() ? 1.0 : multiplicity[i];
            row_landmark.push_back(k);
            ++r;
        }
    }

    SupermodelFit out;
    out.basis = basis;
    out.window = grid.window;
    out.landmarks = screen.kept;
    out.skipped = screen.skipped;
    try {
        out.fit = fit_logistic(design);
    } catch (const ArgumentError& e) {
        // the stacked design is assembled right here, so an argument error
        // can only be the rank check firing on degenerate data
        throw NumericalError(std::string("landmark supermodel could not be fitted: ") + e.what());
    }
    if (!out.fit.converged)
        throw NumericalError("landmark supermodel did not converge");

    // Standardize within each landmark: average the fitted risk as observed
    // and with exposure forced off, over that landmark's rows.
    std::vector<double> mass(kept_count, 0.0), risk(kept_count, 0.0), risk_off(kept_count, 0.0);
    for (Eigen::Index row = 0; row < design.x.rows(); ++row) {
        const std::size_t k = row_landmark[static_cast<std::size_t>(row)];
        const double w = design.weights[row];
        if (w <= 0.0) continue;
        double eta = 0.0, eta_exposure = 0.0;
        for (Eigen::Index c = 0; c < design.x.cols(); ++c) {
            const double term = design.x(row, c) * out.fit.coefficients[c];
            eta += term;
            if (c >= static_cast<Eigen::Index>(basis_size)) eta_exposure += term;
        }
        mass[k] += w;
        risk[k] += w * detail::sigmoid(eta);
        risk_off[k] += w * detail::sigmoid(eta - eta_exposure);
    }
    out.values.resize(kept_count);
    for (std::size_t k = 0; k < kept_count; ++k) {
        const double prob_death = risk[k] / mass[k];
        out.values[k] = (prob_death - risk_off[k] / mass[k]) / prob_death;
    }
    return out;
}

/// Local-linear smoother for display of a landmark curve (Epanechnikov
/// kernel).  Purely cosmetic: never feeds any estimate or interval.  A
/// non-positive bandwidth selects three times the mean landmark spacing.
inline std::vector<double> smooth_landmark_curve(const std::vector<double>& landmarks,
                                                 const std::vector<double>& values,
                                                 double bandwidth = 0.0) {
    if (landmarks.size() != values.size())
        throw ArgumentError("landmark and value vectors must have equal length");
    if (landmarks.empty()) throw ArgumentError("cannot smooth an empty curve");
    if (landmarks.size() < 3) return values;
    if (!(bandwidth > 0.0)) {
        bandwidth = 3.0 * (landmarks.back() - landmarks.front()) /
                    static_cast<double>(landmarks.size() - 1);
        if (!(bandwidth > 0.0)) return values;
    }
    std::vector<double> smoothed(values.size());
    for (std::size_t j = 0; j < landmarks.size(); ++j) {
        // Weighted least squares of value on (l - l0) around l0 = landmarks[j].
        double s0 = 0.0, s1 = 0.0, s2 = 0.0, t0 = 0.0, t1 = 0.0;
        for (std::size_t i = 0; i < landmarks.size(); ++i) {
            const double u = (landmarks[i] - landmarks[j]) / bandwidth;
            if (std::abs(u) >= 1.0) continue;
            const double w = 0.75 * (1.0 - u * u);
            const double d = landmarks[i] - landmarks[j];
            s0 += w;
            s1 += w * d;
            s2 += w * d * d;
            t0 += w * values[i];
            t1 += w * d * values[i];
        }
        const double det = s0 * s2 - s1 * s1;
        if (det > 1e-12 * std::max(1.0, s0 * s2)) {
            smoothed[j] = (s2 * t0 - s1 * t1) / det;
        } else {
            smoothed[j] = s0 > 0.0 ? t0 / s0 : values[j];
        }
    }
    return smoothed;
}

}  // namespace attrisk
