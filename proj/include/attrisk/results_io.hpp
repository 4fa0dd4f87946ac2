#pragma once

// Plot-ready delimited output: long-format estimate rows, occupancy-curve
// export, and the replicated-study summary table.

#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "attrisk/aalen_johansen.hpp"
#include "attrisk/bootstrap.hpp"
#include "attrisk/detail/text.hpp"
#include "attrisk/errors.hpp"
#include "attrisk/paf.hpp"

namespace attrisk {

/// One line of the long-format results file.  `detail` distinguishes the two
/// landmark fits (separate | supermodel) and stays empty elsewhere.  Empty
/// optionals print as empty fields.
struct ResultRow {
    std::string estimand;
    std::optional<double> time_or_landmark;
    double estimate = 0.0;
    std::optional<double> lower;
    std::optional<double> upper;
    std::string detail;
};

namespace detail {

inline std::string field(const std::optional<double>& v) {
    return v ? format_double(*v) : std::string();
}

}  // namespace detail

inline constexpr const char* results_header = "estimand,time_or_landmark,estimate,lower,upper,detail";

inline void write_results(std::ostream& out, const std::vector<ResultRow>& rows) {
    out << results_header << '\n';
    for (const auto& r : rows)
        out << r.estimand << ',' << detail::field(r.time_or_landmark) << ','
            << detail::format_double(r.estimate) << ',' << detail::field(r.lower) << ','
            << detail::field(r.upper) << ',' << r.detail << '\n';
    if (!out) throw DataError("failed while writing results");
}

inline void write_results(const std::string& path, const std::vector<ResultRow>& rows) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open '" + path + "' for writing");
    write_results(out, rows);
}

/// Rows for one scalar estimate (the crude attributable fraction); the time
/// column stays empty because the estimate is not time-resolved.
inline std::vector<ResultRow> result_rows(const ScalarEstimate& estimate) {
    ResultRow row;
    row.estimand = estimand_name(Estimand::paf_crude);
    row.estimate = estimate.value;
    row.lower = estimate.lower;
    row.upper = estimate.upper;
    return {row};
}

/// Rows for a time-resolved curve: one row per grid point where the
/// estimand is defined, with band fields filled where a band exists.
inline std::vector<ResultRow> result_rows(const PafCurve& curve) {
    std::vector<ResultRow> rows;
    for (std::size_t k = 0; k < curve.times.size(); ++k) {
        if (!curve.defined[k]) continue;
        ResultRow row;
        row.estimand = estimand_name(curve.estimand);
        row.time_or_landmark = curve.times[k];
        row.estimate = curve.values[k];
        if (k < curve.band_defined.size() && curve.band_defined[k]) {
            row.lower = curve.lower[k];
            row.upper = curve.upper[k];
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

inline std::vector<ResultRow> result_rows(const LandmarkAnalysis& analysis) {
    std::vector<ResultRow> rows;
    for (const auto& est : analysis.estimates) {
        ResultRow row;
        row.estimand = estimand_name(Estimand::paf_lm);
        row.time_or_landmark = est.landmark;
        row.estimate = est.value;
        row.lower = est.lower;
        row.upper = est.upper;
        row.detail = "separate";
        rows.push_back(std::move(row));
    }
    return rows;
}

inline std::vector<ResultRow> result_rows(const SupermodelFit& fit) {
    std::vector<ResultRow> rows;
    for (std::size_t k = 0; k < fit.landmarks.size(); ++k) {
        ResultRow row;
        row.estimand = estimand_name(Estimand::paf_lm);
        row.time_or_landmark = fit.landmarks[k];
        row.estimate = fit.values[k];
        if (k < fit.lower.size()) row.lower = fit.lower[k];
        if (k < fit.upper.size()) row.upper = fit.upper[k];
        row.detail = "supermodel";
        rows.push_back(std::move(row));
    }
    return rows;
}

/// Export the six occupancy curves (ids p00..p05) and optionally the
/// infection-censored incidence curve (id p03_0) as step-function vertices.
inline void write_occupancy_curves(std::ostream& out, const TransitionCurves& curves,
                                   const CensoredCif* cif = nullptr) {
    out << "curve,time,value\n";
    static const char* ids[state_count] = {"p00", "p01", "p02", "p03", "p04", "p05"};
    for (std::size_t s = 0; s < state_count; ++s)
        for (std::size_t j = 0; j < curves.times.size(); ++j)
            out << ids[s] << ',' << detail::format_double(curves.times[j]) << ','
                << detail::format_double(curves.occupancy[s][j]) << '\n';
    if (cif != nullptr)
        for (std::size_t j = 0; j < cif->times.size(); ++j)
            out << "p03_0," << detail::format_double(cif->times[j]) << ','
                << detail::format_double(cif->values[j]) << '\n';
    if (!out) throw DataError("failed while writing curves");
}

inline void write_occupancy_curves(const std::string& path, const TransitionCurves& curves,
                                   const CensoredCif* cif = nullptr) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open '" + path + "' for writing");
    write_occupancy_curves(out, curves, cif);
}

/// One line of the replicated-study summary: the distribution of one
/// estimand at one grid point across replications.  `reps_defined` counts
/// the replications where the estimand existed at that point (landmarks can
/// be skipped, early times predate the first death).
struct StudyRow {
    int scenario = 0;
    std::size_t n = 0;
    std::size_t reps = 0;
    std::string estimand;
    std::string detail;
    std::optional<double> time_or_landmark;
    std::size_t reps_defined = 0;
    double mean = 0.0;
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
};

inline constexpr const char* study_header =
    "scenario,n,reps,estimand,detail,time_or_landmark,reps_defined,mean,q1,median,q3";

inline void write_study(std::ostream& out, const std::vector<StudyRow>& rows) {
    out << study_header << '\n';
    for (const auto& r : rows)
        out << r.scenario << ',' << r.n << ',' << r.reps << ',' << r.estimand << ',' << r.detail
            << ',' << detail::field(r.time_or_landmark) << ',' << r.reps_defined << ','
            << detail::format_double(r.mean) << ',' << detail::format_double(r.q1) << ','
            << detail::format_double(r.median) << ',' << detail::format_double(r.q3) << '\n';
    if (!out) throw DataError("failed while writing study summary");
}

inline void write_study(const std::string& path, const std::vector<StudyRow>& rows) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open '" + path + "' for writing");
    write_study(out, rows);
}

}  // namespace attrisk
