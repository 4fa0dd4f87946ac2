#include <catch_amalgamated.hpp>

#include <array>
#include <cmath>
#include <vector>

#include "attrisk/aalen_johansen.hpp"
#include "attrisk/cohort.hpp"
#include "attrisk/errors.hpp"
#include "attrisk/scenarios.hpp"
#include "attrisk/simulate.hpp"
#include "support/oracles.hpp"

using namespace attrisk;

namespace {

PatientHistory patient(std::string id, std::optional<double> infection, double exit_time,
                       std::optional<ExitState> exit_state, bool censored = false) {
    PatientHistory p;
    p.id = std::move(id);
    p.infection_time = infection;
    p.exit_time = exit_time;
    p.exit_state = exit_state;
    p.censored = censored;
    return p;
}

/// A 12-patient cohort exercising ties, censoring in both states, and
/// infection tied with the terminal event.
Cohort mixed_cohort() {
    std::vector<PatientHistory> ps;
    ps.push_back(patient("a", std::nullopt, 3.0, ExitState::death));
    ps.push_back(patient("b", std::nullopt, 3.0, std::nullopt, true));
    ps.push_back(patient("c", std::nullopt, 3.0, ExitState::discharge));
    ps.push_back(patient("d", 2.0, 6.0, ExitState::death));
    ps.push_back(patient("e", 2.0, 5.0, std::nullopt, true));
    ps.push_back(patient("f", 3.0, 3.0, ExitState::death));      // pass-through
    ps.push_back(patient("g", 4.0, 4.0, ExitState::discharge));  // pass-through
    ps.push_back(patient("h", std::nullopt, 6.0, ExitState::discharge));
    ps.push_back(patient("i", 1.0, 8.0, ExitState::discharge));
    ps.push_back(patient("j", std::nullopt, 8.0, ExitState::death));
    ps.push_back(patient("k", std::nullopt, 9.0, std::nullopt, true));
    ps.push_back(patient("l", 5.0, 9.0, ExitState::death));
    return make_cohort(std::move(ps));
}

} // namespace

TEST_CASE("occupancy of a two-patient cohort matches the hand calculation") {
    std::vector<PatientHistory> ps;
    ps.push_back(patient("a", 2.0, 5.0, ExitState::death));
    ps.push_back(patient("b", std::nullopt, 4.0, ExitState::discharge));
    const auto curves = aalen_johansen(make_cohort(std::move(ps)));

    REQUIRE(curves.times == std::vector<double>{2.0, 4.0, 5.0});
    CHECK(curves.value(State::initial, 1.9) == 1.0);
    CHECK(curves.value(State::infected, 1.9) == 0.0);
    CHECK(curves.value(State::infected, 2.0) == 0.5);
    CHECK(curves.value(State::initial, 2.0) == 0.5);
    CHECK(curves.value(State::infected, 4.9) == 0.5);
    CHECK(curves.value(State::discharged_uninfected, 4.0) == 0.5);
    CHECK(curves.value(State::initial, 4.0) == 0.0);
    CHECK(curves.value(State::infected, 5.0) == 0.0);
    CHECK(curves.value(State::dead_infected, 5.0) == 0.5);
    CHECK(curves.prob_death(5.0) == 0.5);
}

TEST_CASE("an event tied with a censoring uses the pre-censoring risk set") {
    std::vector<PatientHistory> ps;
    ps.push_back(patient("a", std::nullopt, 3.0, ExitState::death));
    ps.push_back(patient("b", std::nullopt, 3.0, std::nullopt, true));
    ps.push_back(patient("c", std::nullopt, 7.0, ExitState::discharge));
    const auto curves = aalen_johansen(make_cohort(std::move(ps)));

    // Death at t=3 divides by 3 (the censored patient still counts), leaving
    // the lone survivor to carry the remaining 2/3 into discharge.
    CHECK(curves.value(State::dead_uninfected, 3.0) == Catch::Approx(1.0 / 3.0).margin(1e-15));
    CHECK(curves.value(State::discharged_uninfected, 7.0) ==
          Catch::Approx(2.0 / 3.0).margin(1e-15));
    CHECK(curves.value(State::initial, 7.0) == 0.0);
}

TEST_CASE("infection tied with the terminal event moves mass straight to the exposed exit") {
    std::vector<PatientHistory> ps;
    ps.push_back(patient("a", 3.0, 3.0, ExitState::death));
    ps.push_back(patient("b", std::nullopt, 5.0, ExitState::discharge));
    const auto curves = aalen_johansen(make_cohort(std::move(ps)));

    CHECK(curves.value(State::dead_infected, 3.0) == 0.5);
    CHECK(curves.value(State::discharged_uninfected, 5.0) == 0.5);
    for (std::size_t k = 0; k < curves.times.size(); ++k)
        CHECK(curves.occupancy[idx(State::infected)][k] == 0.0);
}

TEST_CASE("occupancy rows sum to one and respect monotonicity") {
    auto base = simulate_cohort(scenario_registry(7), 400, 21).patients;
    // Censor every seventh patient halfway through its stay to exercise both
    // censoring kinds.
    for (std::size_t i = 0; i < base.size(); i += 7) {
        auto& p = base[i];
        const double cut = p.exit_time / 2.0;
        if (p.infection_time && *p.infection_time >= cut) p.infection_time.reset();
        p.exit_time = cut;
        p.exit_state.reset();
        p.censored = true;
    }
    const auto curves = aalen_johansen(make_cohort(std::move(base)));
    REQUIRE(curves.jump_count() > 100);

    std::array<double, state_count> previous{1.0, 0.0, 0.0, 0.0, 0.0, 0.0};
    for (std::size_t k = 0; k < curves.times.size(); ++k) {
        double sum = 0.0;
        for (int s = 0; s < state_count; ++s) sum += curves.occupancy[s][k];
        REQUIRE(sum == Catch::Approx(1.0).margin(1e-10));
        REQUIRE(curves.occupancy[idx(State::initial)][k] <=
                previous[idx(State::initial)] + 1e-12);
        for (State s : {State::discharged_uninfected, State::dead_uninfected,
                        State::discharged_infected, State::dead_infected})
            REQUIRE(curves.occupancy[idx(s)][k] >= previous[idx(s)] - 1e-12);
        for (int s = 0; s < state_count; ++s) {
            REQUIRE(curves.occupancy[s][k] >= -1e-12);
            previous[s] = curves.occupancy[s][k];
        }
    }
}

TEST_CASE("the product-integral agrees with a brute-force matrix product") {
    const auto check_cohort = [](const Cohort& cohort) {
        const auto curves = aalen_johansen(cohort);
        std::vector<double> probes = curves.times;
        probes.push_back(0.5);
        probes.push_back(cohort.tau + 1.0);
        for (const double t : probes) {
            const auto expected = oracle::brute::occupancy(cohort, t);
            for (int s = 0; s < state_count; ++s)
                REQUIRE(curves.value(static_cast<State>(s), t) ==
                        Catch::Approx(expected[static_cast<std::size_t>(s)]).margin(1e-12));
        }
        const auto cif = cif_censor_at_exposure(cohort);
        for (const double t : probes)
            REQUIRE(cif.value(t) ==
                    Catch::Approx(oracle::brute::censored_cif(cohort, t)).margin(1e-12));
    };
    check_cohort(mixed_cohort());
    check_cohort(simulate_cohort(scenario_registry(4), 70, 13));
    check_cohort(simulate_cohort(scenario_registry(9), 70, 14));
}

TEST_CASE("without infections the censoring-reduced incidence is the death curve itself") {
    Scenario no_infection;
    no_infection.hazards = HazardSet{HazardSpec::constant(0.0), HazardSpec::constant(0.03),
                                     HazardSpec::constant(0.012), HazardSpec::constant(0.02),
                                     HazardSpec::constant(0.01)};
    const auto cohort = simulate_cohort(no_infection, 500, 3);
    const auto curves = aalen_johansen(cohort);
    const auto cif = cif_censor_at_exposure(cohort);

    // Same estimator on the same data: equality must be bitwise, not approximate.
    REQUIRE(!cif.times.empty());
    std::size_t hits = 0;
    for (std::size_t k = 0; k < curves.times.size(); ++k) {
        const double p03 = curves.occupancy[idx(State::dead_uninfected)][k];
        REQUIRE(cif.value(curves.times[k]) == p03);
        if (hits < cif.times.size() && cif.times[hits] == curves.times[k]) ++hits;
    }
    CHECK(hits == cif.times.size());
}

TEST_CASE("unit time weights reproduce the plain incidence estimate bitwise") {
    const auto cohort = simulate_cohort(scenario_registry(4), 200, 8);
    const auto plain = cif_censor_at_exposure(cohort);
    const auto ones = PatientTimeWeights::ones(cohort.size());
    const auto weighted = cif_censor_at_exposure(cohort, {}, &ones);
    REQUIRE(weighted.times == plain.times);
    REQUIRE(weighted.values == plain.values);

    PatientTimeWeights segmented;
    segmented.grid = {0.0, 5.0, 10.0};
    segmented.values.assign(cohort.size(), {1.0, 1.0, 1.0});
    const auto still_unit = cif_censor_at_exposure(cohort, {}, &segmented);
    REQUIRE(still_unit.values == plain.values);
}

TEST_CASE("integer multiplicities equal literally duplicating patients") {
    const auto base = mixed_cohort();
    const std::vector<double> multiplicity{2, 0, 1, 3, 1, 2, 0, 1, 1, 2, 1, 1};
    REQUIRE(multiplicity.size() == base.size());

    std::vector<PatientHistory> duplicated;
    for (std::size_t i = 0; i < base.size(); ++i)
        for (double c = 0; c < multiplicity[i]; ++c) {
            PatientHistory copy = base.patients[i];
            copy.id += "_copy" + std::to_string(static_cast<int>(c));
            duplicated.push_back(std::move(copy));
        }
    const auto expanded = make_cohort(std::move(duplicated));

    const auto weighted = aalen_johansen(base, multiplicity);
    const auto literal = aalen_johansen(expanded);
    REQUIRE(weighted.times == literal.times);
    for (int s = 0; s < state_count; ++s) REQUIRE(weighted.occupancy[s] == literal.occupancy[s]);

    const auto weighted_cif = cif_censor_at_exposure(base, multiplicity);
    const auto literal_cif = cif_censor_at_exposure(expanded);
    REQUIRE(weighted_cif.times == literal_cif.times);
    REQUIRE(weighted_cif.values == literal_cif.values);
}

TEST_CASE("rescaling the cohort clock rescales jump times and nothing else") {
    const auto base = simulate_cohort(scenario_registry(4), 60, 17);
    std::vector<PatientHistory> scaled = base.patients;
    for (auto& p : scaled) {
        p.exit_time *= 2.5;
        if (p.infection_time) *p.infection_time *= 2.5;
    }
    const auto a = aalen_johansen(base);
    const auto b = aalen_johansen(make_cohort(std::move(scaled)));
    REQUIRE(a.times.size() == b.times.size());
    for (std::size_t k = 0; k < a.times.size(); ++k)
        REQUIRE(b.times[k] == a.times[k] * 2.5);
    for (int s = 0; s < state_count; ++s) REQUIRE(a.occupancy[s] == b.occupancy[s]);
}

TEST_CASE("multiplicity vectors are validated") {
    const auto cohort = simulate_cohort(scenario_registry(1), 5, 1);
    CHECK_THROWS_AS(aalen_johansen(cohort, std::vector<double>{1, 2}), ArgumentError);
    CHECK_THROWS_AS(aalen_johansen(cohort, std::vector<double>{1, 1, 1, 1, -1.0}),
                    ArgumentError);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(cif_censor_at_exposure(cohort, std::vector<double>{1, 1, 1, 1, nan}),
                    ArgumentError);
    CHECK_THROWS_AS(aalen_johansen(Cohort{}), ArgumentError);

    PatientTimeWeights short_weights;
    short_weights.grid = {0.0};
    short_weights.values.assign(3, {1.0});
    CHECK_THROWS_AS(cif_censor_at_exposure(cohort, {}, &short_weights), ArgumentError);
}

TEST_CASE("closed-form, quadrature, and ODE forward solutions coincide") {
    for (int id : {1, 3, 4, 6}) {
        const auto scenario = scenario_registry(id);
        const auto rates = constant_rates(scenario.hazards);
        oracle::ConstantRates ode_rates{rates[0], rates[1], rates[2], rates[3], rates[4]};
        oracle::HazardTruth truth{scenario.hazards};
        for (double t : {1.0, 10.0, 25.0, 80.0}) {
            const auto closed = constant_hazard_oracle(rates, t);
            const auto ode = oracle::ode_occupancy(ode_rates, t);
            const auto quad = truth.occupancy(t);
            for (int s = 0; s < state_count; ++s) {
                REQUIRE(closed.occupancy[static_cast<std::size_t>(s)] ==
                        Catch::Approx(ode.occupancy[static_cast<std::size_t>(s)]).margin(1e-7));
                REQUIRE(closed.occupancy[static_cast<std::size_t>(s)] ==
                        Catch::Approx(quad[static_cast<std::size_t>(s)]).margin(1e-9));
            }
            REQUIRE(closed.censored_cif == Catch::Approx(ode.censored_cif).margin(1e-7));
            REQUIRE(closed.censored_cif == Catch::Approx(truth.censored_cif(t)).margin(1e-9));
        }
    }
}

TEST_CASE("large-sample occupancies approach the model probabilities", "[slow]") {
    const auto scenario = scenario_registry(7);
    const auto cohort = simulate_cohort(scenario, 50000, 1);
    const auto curves = aalen_johansen(cohort);
    const auto cif = cif_censor_at_exposure(cohort);
    oracle::HazardTruth truth{scenario.hazards};
    for (double t : {5.0, 10.0, 20.0, 40.0}) {
        const auto expected = truth.occupancy(t);
        for (int s = 0; s < state_count; ++s)
            REQUIRE(curves.value(static_cast<State>(s), t) ==
                    Catch::Approx(expected[static_cast<std::size_t>(s)]).margin(0.01));
        REQUIRE(cif.value(t) == Catch::Approx(truth.censored_cif(t)).margin(0.01));
    }
}
