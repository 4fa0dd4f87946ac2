#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "attrisk/cohort.hpp"
#include "attrisk/errors.hpp"

namespace attrisk {

/// One subject of a landmark analysis: in hospital just after time
/// `landmark`, classified by exposure status at the landmark and by death
/// within the window (landmark, landmark + window].  `at_risk` is true for
/// every emitted row by construction; it is kept so exported datasets are
/// self-describing.
struct LandmarkRow {
    std::string patient_id;
    double landmark = 0.0;
    bool at_risk = true;
    bool exposed = false;
    bool died = false;
    std::vector<double> covariate_values; // cohort covariate order
};

/// Landmark time points (strictly increasing, >= 0) sharing one outcome
/// window length.
struct LandmarkGrid {
    std::vector<double> landmarks;
    double window = 0.0;
};

inline LandmarkGrid make_landmark_grid(std::vector<double> landmarks, double window) {
    if (landmarks.empty()) throw ArgumentError("landmark grid must contain at least one landmark");
    if (!(window > 0.0) || !std::isfinite(window))
        throw ArgumentError("landmark window must be > 0");
    for (std::size_t i = 0; i < landmarks.size(); ++i) {
        if (!std::isfinite(landmarks[i]) || landmarks[i] < 0.0)
            throw ArgumentError("landmarks must be finite and >= 0");
        if (i > 0 && !(landmarks[i] > landmarks[i - 1]))
            throw ArgumentError("landmarks must be strictly increasing");
    }
    return LandmarkGrid{std::move(landmarks), window};
}

/// Inclusive arithmetic grid first, first+step, ..., last.
inline LandmarkGrid make_landmark_grid(double first, double last, double step, double window) {
    if (!(step > 0.0)) throw ArgumentError("landmark step must be > 0");
    if (!(last >= first)) throw ArgumentError("landmark range must satisfy last >= first");
    const auto count = static_cast<std::size_t>(std::floor((last - first) / step + 1e-9)) + 1;
    std::vector<double> points(count);
    for (std::size_t i = 0; i < count; ++i) points[i] = first + static_cast<double>(i) * step;
    return make_landmark_grid(std::move(points), window);
}

/// Outcome indicator of one landmark subject: death in (l, l+w], counting a
/// death at exactly l+w.
inline bool landmark_death(const PatientHistory& p, double landmark, double window) {
    return !p.censored && p.died() && p.exit_time > landmark && p.exit_time <= landmark + window;
}

/// Indices of the patients forming the landmark dataset at l: those still in
/// hospital just after l (exit_time > l).  A censoring time in (l, l+w]
/// leaves the outcome unknowable and is an error; censoring after l+w pins
/// the outcome to 0.
inline std::vector<std::size_t> landmark_members(const Cohort& cohort, double landmark,
                                                 double window) {
    if (!(landmark >= 0.0) || !std::isfinite(landmark))
        throw ArgumentError("landmark must be finite and >= 0");
    if (!(window > 0.0) || !std::isfinite(window))
        throw ArgumentError("landmark window must be > 0");
    const double horizon = landmark + window;
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < cohort.size(); ++i) {
        const auto& p = cohort.patients[i];
        if (!(p.exit_time > landmark)) continue;
        if (p.censored && p.exit_time <= horizon)
            throw DataError("patient '" + p.id + "' censored at " + std::to_string(p.exit_time) +
                            " inside landmark window (" + std::to_string(landmark) + ", " +
                            std::to_string(horizon) + "]: outcome unknowable");
        members.push_back(i);
    }
    return members;
}

/// Build the landmark dataset at one landmark l with window w.  Exposure is
/// infection by l (inclusive); see landmark_members for inclusion rules.
inline std::vector<LandmarkRow> landmark_dataset(const Cohort& cohort, double landmark,
                                                 double window) {
    std::vector<LandmarkRow> rows;
    for (const std::size_t i : landmark_members(cohort, landmark, window)) {
        const auto& p = cohort.patients[i];
        LandmarkRow row;
        row.patient_id = p.id;
        row.landmark = landmark;
        row.at_risk = true;
        row.exposed = p.infected_by(landmark);
        row.died = landmark_death(p, landmark, window);
        row.covariate_values.reserve(cohort.covariate_names.size());
        for (const auto& name : cohort.covariate_names)
            row.covariate_values.push_back(p.covariates.at(name));
        rows.push_back(std::move(row));
    }
    return rows;
}

/// Exposure-by-outcome counts of a landmark dataset.
inline FourfoldTable fourfold_table(const std::vector<LandmarkRow>& rows) {
    FourfoldTable table;
    for (const auto& row : rows) {
        (row.exposed ? table.exposed_total : table.unexposed_total) += 1.0;
        if (row.died) (row.exposed ? table.exposed_deaths : table.unexposed_deaths) += 1.0;
    }
    return table;
}

} // namespace attrisk
