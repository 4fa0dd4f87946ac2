#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "attrisk/cohort.hpp"
#include "attrisk/errors.hpp"
#include "attrisk/hazards.hpp"

namespace attrisk {

/// State-occupancy step curves P(X(t) = j | X(0) = initial) for the six
/// states, aligned to the sorted transition times.  Right-continuous;
/// before the first jump the process sits in the initial state.
struct TransitionCurves {
    std::vector<double> times;
    std::array<std::vector<double>, state_count> occupancy;
    std::size_t n = 0;

    std::size_t jump_count() const { return times.size(); }

    /// Last-value carry-forward lookup.
    double value(State s, double t) const {
        const auto it = std::upper_bound(times.begin(), times.end(), t);
        if (it == times.begin()) return s == State::initial ? 1.0 : 0.0;
        return occupancy[idx(s)][static_cast<std::size_t>(it - times.begin()) - 1];
    }

    double prob_death(double t) const {
        return value(State::dead_uninfected, t) + value(State::dead_infected, t);
    }
};

/// Cumulative incidence of uninfected death when infection censors instead
/// of competing: jumps only at uninfected death times, zero before the first.
struct CensoredCif {
    std::vector<double> times;
    std::vector<double> values;
    std::size_t n = 0;

    double value(double t) const {
        const auto it = std::upper_bound(times.begin(), times.end(), t);
        if (it == times.begin()) return 0.0;
        return values[static_cast<std::size_t>(it - times.begin()) - 1];
    }
};

/// Per-patient piecewise-constant weight functions on one shared grid:
/// patient i carries weight values[i][k] on [grid[k], grid[k+1]), with the
/// last interval extending to +inf.  Grid starts at 0.
struct PatientTimeWeights {
    std::vector<double> grid;
    std::vector<std::vector<double>> values;

    std::size_t interval_of(double t) const {
        const auto it = std::upper_bound(grid.begin(), grid.end(), t);
        return it == grid.begin() ? 0 : static_cast<std::size_t>(it - grid.begin()) - 1;
    }
    double at(std::size_t patient, double t) const {
        return values[patient][interval_of(t)];
    }

    static PatientTimeWeights ones(std::size_t n) {
        PatientTimeWeights w;
        w.grid = {0.0};
        w.values.assign(n, std::vector<double>{1.0});
        return w;
    }
};

namespace detail {

/// One patient's contribution to the event sweep, grouped by time.
enum class EventKind : int {
    infection,           // initial -> infected (patient continues)
    exit_discharge_0,    // initial -> discharged_uninfected
    exit_death_0,        // initial -> dead_uninfected
    exit_discharge_1,    // infected -> discharged_infected
    exit_death_1,        // infected -> dead_infected
    pass_discharge,      // infection tied with discharge: initial -> discharged_infected
    pass_death,          // infection tied with death:     initial -> dead_infected
    censor_0,            // censored while uninfected
    censor_1,            // censored after infection
};

struct Event {
    double time;
    EventKind kind;
    std::size_t patient;
};

inline std::vector<Event> event_table(const Cohort& cohort) {
    std::vector<Event> events;
    events.reserve(2 * cohort.size());
    for (std::size_t i = 0; i < cohort.size(); ++i) {
        const auto& p = cohort.patients[i];
        if (!p.infection_time) {
            if (p.censored)
                events.push_back({p.exit_time, EventKind::censor_0, i});
            else if (*p.exit_state == ExitState::death)
                events.push_back({p.exit_time, EventKind::exit_death_0, i});
            else
                events.push_back({p.exit_time, EventKind::exit_discharge_0, i});
            continue;
        }
        if (*p.infection_time == p.exit_time && !p.censored) {
            // Tie of infection and terminal event: the infection is ordered
            // first, so the patient reaches the infected absorbing state
            // within the single product-integral factor at this time.
            events.push_back({p.exit_time, *p.exit_state == ExitState::death
                                               ? EventKind::pass_death
                                               : EventKind::pass_discharge,
                              i});
            continue;
        }
        events.push_back({*p.infection_time, EventKind::infection, i});
        if (p.censored)
            events.push_back({p.exit_time, EventKind::censor_1, i});
        else if (*p.exit_state == ExitState::death)
            events.push_back({p.exit_time, EventKind::exit_death_1, i});
        else
            events.push_back({p.exit_time, EventKind::exit_discharge_1, i});
    }
    std::stable_sort(events.begin(), events.end(),
                     [](const Event& a, const Event& b) { return a.time < b.time; });
    return events;
}

inline void check_multiplicity(const Cohort& cohort, std::span<const double> multiplicity) {
    if (!multiplicity.empty() && multiplicity.size() != cohort.size())
        throw ArgumentError("patient multiplicity vector must match cohort size");
    for (const double m : multiplicity)
        if (!(m >= 0.0) || !std::isfinite(m))
            throw ArgumentError("patient multiplicities must be finite and >= 0");
}

} // namespace detail

/// Aalen-Johansen product-integral estimator of the six occupancy curves.
///
/// At each distinct event time t the current occupancy row is multiplied by
/// one factor I + dA, where dA(i->j) is (weight of i->j events at t) divided
/// by the weight at risk in i just before t.  Ties across patients share the
/// factor; a censoring tied with an event is removed after the factor (event
/// first).  `multiplicity` gives optional per-patient frequency weights
/// (bootstrap resamples); empty means one of each.
inline TransitionCurves aalen_johansen(const Cohort& cohort,
                                       std::span<const double> multiplicity = {}) {
    if (cohort.patients.empty()) throw ArgumentError("aalen_johansen requires a nonempty cohort");
    detail::check_multiplicity(cohort, multiplicity);
    const auto weight_of = [&multiplicity](std::size_t i) {
        return multiplicity.empty() ? 1.0 : multiplicity[i];
    };

    const auto events = detail::event_table(cohort);
    double risk0 = 0.0; // weight at risk in the initial state
    for (std::size_t i = 0; i < cohort.size(); ++i) risk0 += weight_of(i);
    double risk1 = 0.0; // weight at risk in the infected state

    TransitionCurves curves;
    curves.n = cohort.size();
    std::array<double, state_count> occ{1.0, 0.0, 0.0, 0.0, 0.0, 0.0};

    std::size_t pos = 0;
    while (pos < events.size()) {
        const double t = events[pos].time;
        double w01 = 0.0, w02 = 0.0, w03 = 0.0, wp4 = 0.0, wp5 = 0.0;
        double w14 = 0.0, w15 = 0.0, wc0 = 0.0, wc1 = 0.0;
        for (; pos < events.size() && events[pos].time == t; ++pos) {
            const double w = weight_of(events[pos].patient);
            switch (events[pos].kind) {
            case detail::EventKind::infection: w01 += w; break;
            case detail::EventKind::exit_discharge_0: w02 += w; break;
            case detail::EventKind::exit_death_0: w03 += w; break;
            case detail::EventKind::exit_discharge_1: w14 += w; break;
            case detail::EventKind::exit_death_1: w15 += w; break;
            case detail::EventKind::pass_discharge: wp4 += w; break;
            case detail::EventKind::pass_death: wp5 += w; break;
            case detail::EventKind::censor_0: wc0 += w; break;
            case detail::EventKind::censor_1: wc1 += w; break;
            }
        }

        const double from0 = w01 + w02 + w03 + wp4 + wp5;
        const double from1 = w14 + w15;
        if (from0 > 0.0 || from1 > 0.0) {
            const double p0 = occ[idx(State::initial)];
            const double p1 = occ[idx(State::infected)];
            double m01 = 0.0, m02 = 0.0, m03 = 0.0, m04 = 0.0, m05 = 0.0;
            if (from0 > 0.0 && risk0 > 0.0) {
                m01 = p0 * (w01 / risk0);
                m02 = p0 * (w02 / risk0);
                m03 = p0 * (w03 / risk0);
                m04 = p0 * (wp4 / risk0);
                m05 = p0 * (wp5 / risk0);
            }
            double m14 = 0.0, m15 = 0.0;
            if (from1 > 0.0 && risk1 > 0.0) {
                m14 = p1 * (w14 / risk1);
                m15 = p1 * (w15 / risk1);
            }
            occ[idx(State::initial)] = p0 - (m01 + m02 + m03 + m04 + m05);
            occ[idx(State::infected)] = p1 + m01 - (m14 + m15);
            occ[idx(State::discharged_uninfected)] += m02;
            occ[idx(State::dead_uninfected)] += m03;
            occ[idx(State::discharged_infected)] += m04 + m14;
            occ[idx(State::dead_infected)] += m05 + m15;

            curves.times.push_back(t);
            for (int s = 0; s < state_count; ++s) curves.occupancy[s].push_back(occ[s]);
        }

        risk0 -= ((((w01 + w02) + w03) + (wp4 + wp5)) + wc0);
        risk1 += w01;
        risk1 -= ((w14 + w15) + wc1);
    }
    return curves;
}

/// Cumulative incidence of uninfected death treating infection as censoring:
/// the competing-risks estimator on the reduced model with exits discharge
/// and death from the initial state only.  Optional `time_weights` reweight
/// each patient's person-time (inverse-probability weights); the plain call
/// uses unit weights and shares this code path bit for bit.
inline CensoredCif cif_censor_at_exposure(const Cohort& cohort,
                                          std::span<const double> multiplicity = {},
                                          const PatientTimeWeights* time_weights = nullptr) {
    if (cohort.patients.empty())
        throw ArgumentError("cif_censor_at_exposure requires a nonempty cohort");
    detail::check_multiplicity(cohort, multiplicity);
    PatientTimeWeights trivial;
    if (time_weights == nullptr) {
        trivial = PatientTimeWeights::ones(cohort.size());
        time_weights = &trivial;
    } else if (time_weights->values.size() != cohort.size()) {
        throw ArgumentError("time weights must cover every patient of the cohort");
    }
    const auto weight_of = [&](std::size_t i, std::size_t interval) {
        const double m = multiplicity.empty() ? 1.0 : multiplicity[i];
        return m * time_weights->values[i][interval];
    };

    // Event table of the reduced model: infection censors at infection time.
    struct Ev {
        double time;
        int kind; // 0 discharge, 1 death, 2 censor
        std::size_t patient;
    };
    std::vector<Ev> events;
    events.reserve(cohort.size());
    for (std::size_t i = 0; i < cohort.size(); ++i) {
        const auto& p = cohort.patients[i];
        if (p.infection_time)
            events.push_back({*p.infection_time, 2, i});
        else if (p.censored)
            events.push_back({p.exit_time, 2, i});
        else
            events.push_back({p.exit_time, *p.exit_state == ExitState::death ? 1 : 0, i});
    }
    std::stable_sort(events.begin(), events.end(),
                     [](const Ev& a, const Ev& b) { return a.time < b.time; });

    std::vector<char> at_risk(cohort.size(), 1);
    std::size_t interval = 0;
    double risk = 0.0;
    for (std::size_t i = 0; i < cohort.size(); ++i) risk += weight_of(i, interval);

    CensoredCif cif;
    cif.n = cohort.size();
    double survival = 1.0;
    double incidence = 0.0;

    std::size_t pos = 0;
    while (pos < events.size()) {
        const double t = events[pos].time;
        // Weights are step functions of time: on entering a new grid
        // interval, rebuild the weight at risk from the still-at-risk set.
        const std::size_t t_interval = time_weights->interval_of(t);
        if (t_interval != interval) {
            interval = t_interval;
            risk = 0.0;
            for (std::size_t i = 0; i < cohort.size(); ++i)
                if (at_risk[i]) risk += weight_of(i, interval);
        }

        double w_discharge = 0.0, w_death = 0.0, w_censor = 0.0;
        const std::size_t first = pos;
        for (; pos < events.size() && events[pos].time == t; ++pos) {
            const double w = weight_of(events[pos].patient, interval);
            if (events[pos].kind == 0)
                w_discharge += w;
            else if (events[pos].kind == 1)
                w_death += w;
            else
                w_censor += w;
        }
        for (std::size_t e = first; e < pos; ++e) at_risk[events[e].patient] = 0;

        if ((w_discharge > 0.0 || w_death > 0.0) && risk > 0.0) {
            const double m_discharge = survival * (w_discharge / risk);
            const double m_death = survival * (w_death / risk);
            incidence += m_death;
            survival -= (m_discharge + m_death);
            if (w_death > 0.0) {
                cif.times.push_back(t);
                cif.values.push_back(incidence);
            }
        }
        risk -= ((w_discharge + w_death) + w_censor);
    }
    return cif;
}

/// Exact occupancy probabilities and censor-at-exposure incidence for
/// constant hazards {a01, a02, a03, a14, a15} at time t, from the closed-form
/// solution of the time-homogeneous forward equations.
struct OracleProbabilities {
    std::array<double, state_count> occupancy{};
    double censored_cif = 0.0;

    double prob_death() const {
        return occupancy[idx(State::dead_uninfected)] + occupancy[idx(State::dead_infected)];
    }
};

inline OracleProbabilities constant_hazard_oracle(const std::array<double, 5>& rates, double t) {
    for (const double r : rates)
        if (!(r >= 0.0) || !std::isfinite(r))
            throw ArgumentError("constant_hazard_oracle requires finite rates >= 0");
    if (!(t >= 0.0)) throw ArgumentError("constant_hazard_oracle requires t >= 0");

    const double a01 = rates[0], a02 = rates[1], a03 = rates[2], a14 = rates[3], a15 = rates[4];
    const double c1 = a01 + a02 + a03;
    const double c2 = a14 + a15;

    // (1 - exp(-d t)) / d with the removable limit t at d == 0.
    const auto decay_ratio = [t](double d) { return d == 0.0 ? t : -std::expm1(-d * t) / d; };

    OracleProbabilities out;
    auto& p = out.occupancy;
    if (c1 == 0.0) {
        p[idx(State::initial)] = 1.0;
        return out;
    }
    const double e1 = std::exp(-c1 * t);
    p[idx(State::initial)] = e1;
    p[idx(State::discharged_uninfected)] = (a02 / c1) * -std::expm1(-c1 * t);
    p[idx(State::dead_uninfected)] = (a03 / c1) * -std::expm1(-c1 * t);
    // Through the infected state: entry density a01 e^{-c1 s}.
    p[idx(State::infected)] = a01 * std::exp(-c2 * t) * decay_ratio(c1 - c2);
    if (a01 > 0.0 && c2 > 0.0) {
        double integral; // of entry density times P(exited infected state by t)
        if (c1 == c2) {
            integral = (decay_ratio(c1) - t * e1) / c1;
        } else {
            integral = (decay_ratio(c2) - decay_ratio(c1)) / (c1 - c2);
        }
        p[idx(State::discharged_infected)] = a01 * a14 * integral;
        p[idx(State::dead_infected)] = a01 * a15 * integral;
    }
    const double exit_uninfected = a02 + a03;
    out.censored_cif =
        exit_uninfected == 0.0 ? 0.0 : (a03 / exit_uninfected) * -std::expm1(-exit_uninfected * t);
    return out;
}

/// The five constant rates of a HazardSet, in sweep order; rejects sets with
/// genuinely time-varying members.
inline std::array<double, 5> constant_rates(const HazardSet& hazards) {
    const std::array<const HazardSpec*, 5> specs = {
        &hazards.infection, &hazards.discharge_uninfected, &hazards.death_uninfected,
        &hazards.discharge_infected, &hazards.death_infected};
    std::array<double, 5> rates{};
    for (std::size_t i = 0; i < specs.size(); ++i) {
        if (!detail::effectively_constant(*specs[i]))
            throw ArgumentError("hazard set is not constant; no closed-form oracle");
        rates[i] = detail::constant_rate_of(*specs[i]);
    }
    return rates;
}

} // namespace attrisk
