#include <catch_amalgamated.hpp>

#include <sstream>
#include <string>

#include "attrisk/cohort_io.hpp"
#include "attrisk/errors.hpp"
#include "attrisk/params_io.hpp"
#include "attrisk/scenarios.hpp"
#include "attrisk/simulate.hpp"

using namespace attrisk;

TEST_CASE("cohort files round-trip exactly") {
    const auto original = simulate_cohort(scenario_registry(4), 200, 99);
    std::ostringstream out;
    export_cohort(original, out);
    std::istringstream in(out.str());
    const auto back = ingest_cohort(in, "roundtrip");
    REQUIRE(back.size() == original.size());
    CHECK(back.tau == original.tau);
    for (std::size_t i = 0; i < original.size(); ++i) {
        CHECK(back.patients[i].id == original.patients[i].id);
        CHECK(back.patients[i].infection_time == original.patients[i].infection_time);
        CHECK(back.patients[i].exit_time == original.patients[i].exit_time);
        CHECK(back.patients[i].exit_state == original.patients[i].exit_state);
        CHECK(back.patients[i].censored == original.patients[i].censored);
    }
    // and a second export is byte-identical
    std::ostringstream again;
    export_cohort(back, again);
    CHECK(again.str() == out.str());
}

TEST_CASE("cohort ingestion accepts the documented format") {
    std::istringstream in(
        "id,infection_time,exit_time,exit_state,censored,age\n"
        "a,,4.5,discharge,0,63\n"
        "b,2.25,9,death,0,41\n"
        "c,,12,,1,77\n");
    const auto cohort = ingest_cohort(in, "inline");
    REQUIRE(cohort.size() == 3);
    REQUIRE(cohort.covariate_names == std::vector<std::string>{"age"});
    CHECK_FALSE(cohort.patients[0].infection_time.has_value());
    CHECK(cohort.patients[1].infection_time == 2.25);
    CHECK(cohort.patients[2].censored);
    CHECK_FALSE(cohort.patients[2].exit_state.has_value());
    CHECK(cohort.patients[0].covariates.at("age") == 63.0);
    CHECK(cohort.tau == 12.0);
}

TEST_CASE("cohort ingestion errors carry the file location") {
    const auto ingest = [](const std::string& text) {
        std::istringstream in(text);
        return ingest_cohort(in, "bad.csv");
    };
    const std::string header = "id,infection_time,exit_time,exit_state,censored\n";

    CHECK_THROWS_WITH(ingest("id,exit_time\n"),
                      Catch::Matchers::ContainsSubstring("bad.csv"));
    CHECK_THROWS_WITH(ingest(header + "a,,4.5,discharge\n"),
                      Catch::Matchers::ContainsSubstring("bad.csv:2"));
    CHECK_THROWS_WITH(ingest(header + "a,,oops,discharge,0\n"),
                      Catch::Matchers::ContainsSubstring("bad.csv:2"));
    CHECK_THROWS_WITH(ingest(header + "a,,4.5,walked,0\n"),
                      Catch::Matchers::ContainsSubstring("walked"));
    // exit_state must be present exactly when uncensored
    CHECK_THROWS_AS(ingest(header + "a,,4.5,,0\n"), DataError);
    CHECK_THROWS_AS(ingest(header + "a,,4.5,death,1\n"), DataError);
    // record-level violations surface too
    CHECK_THROWS_AS(ingest(header + "a,9,4.5,death,0\n"), DataError);
    // duplicate ids caught at cohort assembly
    CHECK_THROWS_AS(ingest(header + "a,,4.5,death,0\na,,5,death,0\n"), DataError);
    CHECK_THROWS_AS(ingest_cohort("/no/such/file.csv"), DataError);
}

TEST_CASE("custom hazard parameter files parse") {
    std::istringstream in(
        "# scenario with one weibull transition\n"
        "infection            = constant 0.05\n"
        "discharge_uninfected = weibull 1.4 0.08\n"
        "death_uninfected     = constant 0.01\n"
        "\n"
        "discharge_infected   = constant 0.02\n"
        "death_infected       = constant 0.02   # trailing comment\n");
    const auto set = ingest_hazard_params(in, "params");
    CHECK(set.infection.rate == 0.05);
    CHECK(set.discharge_uninfected.family == HazardFamily::weibull);
    CHECK(set.discharge_uninfected.shape == 1.4);
    CHECK(set.discharge_uninfected.scale == 0.08);
    CHECK(set.death_infected.rate == 0.02);
}

TEST_CASE("custom hazard parameter files reject malformed input") {
    const auto ingest = [](const std::string& text) {
        std::istringstream in(text);
        return ingest_hazard_params(in, "p");
    };
    const std::string four =
        "infection = constant 0.05\n"
        "discharge_uninfected = constant 0.02\n"
        "death_uninfected = constant 0.01\n"
        "discharge_infected = constant 0.02\n";

    CHECK_THROWS_WITH(ingest(four), Catch::Matchers::ContainsSubstring("death_infected"));
    CHECK_THROWS_WITH(ingest(four + "death_infected = gamma 1 2\n"),
                      Catch::Matchers::ContainsSubstring("gamma"));
    CHECK_THROWS_AS(ingest(four + "death_infected = constant\n"), DataError);
    CHECK_THROWS_AS(ingest(four + "death_infected = constant x\n"), DataError);
    CHECK_THROWS_AS(ingest(four + "death_infected = weibull 1.4\n"), DataError);
    CHECK_THROWS_AS(ingest(four + "death_infected = constant -1\n"), DataError);
    CHECK_THROWS_AS(ingest(four + "death_infected = constant 0.02\ninfection = constant 0.1\n"),
                    DataError);
    CHECK_THROWS_AS(ingest(four + "resurrection = constant 0.1\n"), DataError);
    CHECK_THROWS_AS(ingest_hazard_params("/no/such/params.txt"), DataError);
}
