#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "attrisk/cohort.hpp"
#include "attrisk/errors.hpp"
#include "attrisk/hazards.hpp"
#include "attrisk/rng.hpp"
#include "attrisk/scenarios.hpp"

namespace attrisk {

/// Draw one history from the extended illness-death model on study time
/// (Markov clock: post-infection hazards keep time-since-admission).
///
/// Sampling factorises the competing-risks likelihood: the first transition
/// time solves Lambda_total(0, T1) = Exp(1); the cause at T1 is drawn with
/// probability proportional to the cause-specific hazards evaluated at T1.
/// If the cause is infection the same scheme runs again from T1 with the
/// post-infection hazards.  No censoring is generated.  Each patient consumes
/// exactly two draws per sojourn (one exponential, one cause pick) from its
/// own stream.
inline PatientHistory simulate_patient(const HazardSet& hazards, RngStream& rng) {
    auto positive_exponential = [&rng]() {
        double e = rng.exponential();
        while (e == 0.0) e = rng.exponential();
        return e;
    };

    PatientHistory p;
    const auto initial = hazards.from_initial();
    const double t1 = invert_total_cumulative(initial, 0.0, positive_exponential());
    if (!std::isfinite(t1))
        throw ArgumentError("hazard set has zero total exit rate from the initial state");
    const double u_cause = rng.uniform();
    const double r_infect = hazard_at(hazards.infection, t1);
    const double r_discharge = hazard_at(hazards.discharge_uninfected, t1);
    const double r_death = hazard_at(hazards.death_uninfected, t1);
    const double total = r_infect + r_discharge + r_death;

    if (u_cause * total < r_infect) {
        p.infection_time = t1;
        const auto infected = hazards.from_infected();
        const double t2 = invert_total_cumulative(infected, t1, positive_exponential());
        if (!std::isfinite(t2))
            throw ArgumentError("hazard set has zero total exit rate from the infected state");
        const double u_exit = rng.uniform();
        const double r_discharge_i = hazard_at(hazards.discharge_infected, t2);
        const double r_death_i = hazard_at(hazards.death_infected, t2);
        p.exit_time = t2;
        p.exit_state = (u_exit * (r_discharge_i + r_death_i) < r_death_i) ? ExitState::death
                                                                          : ExitState::discharge;
    } else {
        p.exit_time = t1;
        p.exit_state =
            (u_cause * total < r_infect + r_death) ? ExitState::death : ExitState::discharge;
    }
    p.censored = false;
    return p;
}

/// n independent patients; patient i always consumes stream i of `seed`, so
/// a given (scenario, seed) prefix never changes when n grows.
inline Cohort simulate_cohort(const Scenario& scenario, std::size_t n, std::uint64_t seed) {
    if (n == 0) throw ArgumentError("simulate_cohort requires n >= 1");
    int width = 1;
    for (std::size_t v = n; v >= 10; v /= 10) ++width;
    std::vector<PatientHistory> patients;
    patients.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        RngStream stream(seed, i);
        PatientHistory p = simulate_patient(scenario.hazards, stream);
        std::string number = std::to_string(i + 1);
        p.id = "p" + std::string(width - static_cast<int>(number.size()), '0') + number;
        patients.push_back(std::move(p));
    }
    return make_cohort(std::move(patients));
}

} // namespace attrisk
