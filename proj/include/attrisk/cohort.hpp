#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "attrisk/errors.hpp"

namespace attrisk {

/// States of the extended illness-death model.  Everyone starts in `initial`;
/// `infected` is the intermediate exposure state; the four absorbing states
/// split hospital exit by route (discharge/death) and by exposure.
enum class State {
    initial = 0,
    infected = 1,
    discharged_uninfected = 2,
    dead_uninfected = 3,
    discharged_infected = 4,
    dead_infected = 5,
};

inline constexpr int state_count = 6;
inline constexpr int idx(State s) { return static_cast<int>(s); }

enum class ExitState { discharge, death };

/// One patient's observed history: optional infection time, then either an
/// observed hospital exit (discharge or death) or a right-censoring time.
/// `exit_state` is empty exactly when `censored` is true.  Covariates are
/// baseline values; time-varying covariates are out of scope.
struct PatientHistory {
    std::string id;
    std::optional<double> infection_time;
    double exit_time = 0.0;
    std::optional<ExitState> exit_state;
    bool censored = false;
    std::map<std::string, double> covariates;

    bool infected_by(double t) const {
        return infection_time.has_value() && *infection_time <= t;
    }
    bool died() const { return exit_state == ExitState::death; }
};

/// All invariant violations of one record, empty when the record is sound.
inline std::vector<std::string> validate(const PatientHistory& p) {
    std::vector<std::string> problems;
    if (p.id.empty()) problems.push_back("empty id");
    if (!std::isfinite(p.exit_time) || p.exit_time <= 0.0)
        problems.push_back("exit_time must be finite and > 0");
    if (p.infection_time) {
        if (!std::isfinite(*p.infection_time) || *p.infection_time <= 0.0)
            problems.push_back("infection_time must be finite and > 0");
        else if (std::isfinite(p.exit_time) && *p.infection_time > p.exit_time)
            problems.push_back("infection_time exceeds exit_time");
    }
    if (p.censored == p.exit_state.has_value())
        problems.push_back(p.censored ? "censored record must not carry an exit state"
                                      : "uncensored record must carry an exit state");
    for (const auto& [name, value] : p.covariates)
        if (!std::isfinite(value))
            problems.push_back("covariate '" + name + "' not finite");
    return problems;
}

/// A cohort of validated patient histories with a fixed covariate column
/// order and the end of follow-up tau = max exit time.
struct Cohort {
    std::vector<PatientHistory> patients;
    std::vector<std::string> covariate_names;
    double tau = 0.0;

    std::size_t size() const { return patients.size(); }
    bool any_censored() const {
        return std::any_of(patients.begin(), patients.end(),
                           [](const PatientHistory& p) { return p.censored; });
    }
};

/// Build a cohort, enforcing record validity, unique ids, and that every
/// patient carries exactly the named covariates.  Throws DataError.
inline Cohort make_cohort(std::vector<PatientHistory> patients,
                          std::vector<std::string> covariate_names = {}) {
    Cohort cohort;
    cohort.covariate_names = std::move(covariate_names);
    {
        std::vector<std::string> sorted_names = cohort.covariate_names;
        std::sort(sorted_names.begin(), sorted_names.end());
        if (std::adjacent_find(sorted_names.begin(), sorted_names.end()) != sorted_names.end())
            throw DataError("duplicate covariate name");
    }
    std::vector<std::string> ids;
    ids.reserve(patients.size());
    for (const auto& p : patients) {
        const auto problems = validate(p);
        if (!problems.empty())
            throw DataError("patient '" + p.id + "': " + problems.front());
        if (p.covariates.size() != cohort.covariate_names.size())
            throw DataError("patient '" + p.id + "': expected " +
                            std::to_string(cohort.covariate_names.size()) + " covariates, got " +
                            std::to_string(p.covariates.size()));
        for (const auto& name : cohort.covariate_names)
            if (!p.covariates.count(name))
                throw DataError("patient '" + p.id + "': missing covariate '" + name + "'");
        ids.push_back(p.id);
    }
    std::sort(ids.begin(), ids.end());
    if (auto dup = std::adjacent_find(ids.begin(), ids.end()); dup != ids.end())
        throw DataError("duplicate patient id '" + *dup + "'");
    cohort.patients = std::move(patients);
    cohort.tau = 0.0;
    for (const auto& p : cohort.patients) cohort.tau = std::max(cohort.tau, p.exit_time);
    return cohort;
}

/// Exposure-by-outcome counts at end of follow-up.
struct FourfoldTable {
    double exposed_deaths = 0.0;
    double exposed_total = 0.0;
    double unexposed_deaths = 0.0;
    double unexposed_total = 0.0;

    double total() const { return exposed_total + unexposed_total; }
    double deaths() const { return exposed_deaths + unexposed_deaths; }
};

/// Tabulate ever-infected x died for a fully observed cohort.  Any censored
/// patient makes the table (and PAF_crude) undefined; the first offender is
/// named in the error.
inline FourfoldTable fourfold_table(const Cohort& cohort) {
    if (cohort.patients.empty())
        throw DataError("fourfold table undefined on an empty cohort");
    FourfoldTable table;
    for (const auto& p : cohort.patients) {
        if (p.censored)
            throw DataError("fourfold table undefined: patient '" + p.id +
                            "' is censored; estimate paf_o and read its value at end of follow-up");
        const bool exposed = p.infection_time.has_value();
        (exposed ? table.exposed_total : table.unexposed_total) += 1.0;
        if (p.died()) (exposed ? table.exposed_deaths : table.unexposed_deaths) += 1.0;
    }
    return table;
}

} // namespace attrisk
