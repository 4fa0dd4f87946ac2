#include <catch_amalgamated.hpp>

#include <cmath>
#include <optional>
#include <vector>

#include "attrisk/bootstrap.hpp"
#include "attrisk/errors.hpp"
#include "attrisk/scenarios.hpp"
#include "attrisk/simulate.hpp"

using namespace attrisk;

TEST_CASE("type-7 quantiles interpolate order statistics") {
    const std::vector<double> five{1.0, 2.0, 3.0, 4.0, 5.0};
    CHECK(detail::quantile_type7(five, 0.0) == 1.0);
    CHECK(detail::quantile_type7(five, 0.25) == 2.0);
    CHECK(detail::quantile_type7(five, 0.5) == 3.0);
    CHECK(detail::quantile_type7(five, 1.0) == 5.0);
    const std::vector<double> four{1.0, 2.0, 3.0, 4.0};
    CHECK(detail::quantile_type7(four, 0.5) == 2.5);
    CHECK(detail::quantile_type7(four, 0.25) == 1.75);
    const std::vector<double> one{7.0};
    CHECK(detail::quantile_type7(one, 0.1) == 7.0);
    CHECK(detail::quantile_type7(one, 0.9) == 7.0);
}

TEST_CASE("resampling is driven by one stream per replicate") {
    // The engine must hand each replicate a multiplicity vector summing to n,
    // identical across runs with the same seed and different across seeds.
    std::vector<std::vector<double>> seen;
    const auto collect = [&seen](std::span<const double> multiplicity)
        -> std::vector<std::optional<double>> {
        seen.emplace_back(multiplicity.begin(), multiplicity.end());
        double sum = 0.0;
        for (const double m : multiplicity) sum += m;
        return {sum};
    };
    BootstrapOptions options;
    options.replicates = 20;
    options.seed = 5;
    const auto band = bootstrap_percentile(30, 1, options, collect);
    REQUIRE(seen.size() == 20);
    for (const auto& m : seen) {
        double sum = 0.0;
        for (const double v : m) sum += v;
        CHECK(sum == 30.0);
    }
    CHECK(band.lower[0] == 30.0);
    CHECK(band.upper[0] == 30.0);
    CHECK(band.support[0] == 20);

    auto first = seen;
    seen.clear();
    bootstrap_percentile(30, 1, options, collect);
    CHECK(seen == first);

    seen.clear();
    options.seed = 6;
    bootstrap_percentile(30, 1, options, collect);
    CHECK(seen != first);
    // replicates must differ from each other within one run
    CHECK(seen[0] != seen[1]);
}

TEST_CASE("failing replicates are dropped, and too many of them abort") {
    BootstrapOptions options;
    options.replicates = 50;

    SECTION("every replicate fails") {
        const auto always_throws =
            [](std::span<const double>) -> std::vector<std::optional<double>> {
            throw DataError("nothing to see");
        };
        CHECK_THROWS_WITH(bootstrap_percentile(10, 1, options, always_throws),
                          Catch::Matchers::ContainsSubstring("bootstrap unreliable") &&
                              Catch::Matchers::ContainsSubstring("50 of 50"));
    }
    SECTION("a small minority of failures is tolerated") {
        std::size_t calls = 0;
        const auto sometimes_throws =
            [&calls](std::span<const double>) -> std::vector<std::optional<double>> {
            if (++calls % 13 == 0) throw NumericalError("this replicate went bad");
            return {1.0};
        };
        const auto band = bootstrap_percentile(10, 1, options, sometimes_throws);
        CHECK(band.replicates_dropped == 3); // calls 13, 26, 39
        CHECK(band.replicates_used == 47);
        CHECK(band.support[0] == 47);
        CHECK(band.band_defined[0] == 1);
    }
    SECTION("just over ten percent fails the whole bootstrap") {
        std::size_t calls = 0;
        const auto six_of_fifty =
            [&calls](std::span<const double>) -> std::vector<std::optional<double>> {
            if (++calls <= 6) throw DataError("early replicates fail");
            return {1.0};
        };
        CHECK_THROWS_AS(bootstrap_percentile(10, 1, options, six_of_fifty), NumericalError);
    }
    SECTION("caller mistakes propagate instead of being dropped") {
        const auto wrong_arity =
            [](std::span<const double>) -> std::vector<std::optional<double>> {
            return {1.0, 2.0};
        };
        CHECK_THROWS_AS(bootstrap_percentile(10, 1, options, wrong_arity), ArgumentError);
        const auto misuse = [](std::span<const double>) -> std::vector<std::optional<double>> {
            throw ArgumentError("caller misuse");
        };
        CHECK_THROWS_AS(bootstrap_percentile(10, 1, options, misuse), ArgumentError);
    }
    SECTION("undefined points reduce support without dropping the replicate") {
        std::size_t calls = 0;
        const auto partial =
            [&calls](std::span<const double>) -> std::vector<std::optional<double>> {
            ++calls;
            std::vector<std::optional<double>> values{1.0, std::nullopt};
            if (calls % 2 == 0) values[1] = 2.0;
            return values;
        };
        const auto band = bootstrap_percentile(10, 2, options, partial);
        CHECK(band.replicates_dropped == 0);
        CHECK(band.support[0] == 50);
        CHECK(band.support[1] == 25);
        CHECK(band.band_defined[1] == 1);
    }
}

TEST_CASE("bootstrap options are validated") {
    const auto noop = [](std::span<const double>) -> std::vector<std::optional<double>> {
        return {0.0};
    };
    BootstrapOptions options;
    CHECK_THROWS_AS(bootstrap_percentile(0, 1, options, noop), ArgumentError);
    CHECK_THROWS_AS(bootstrap_percentile(10, 0, options, noop), ArgumentError);
    options.replicates = 0;
    CHECK_THROWS_AS(bootstrap_percentile(10, 1, options, noop), ArgumentError);
    options.replicates = 10;
    options.level = 1.0;
    CHECK_THROWS_AS(bootstrap_percentile(10, 1, options, noop), ArgumentError);
    options.level = 0.0;
    CHECK_THROWS_AS(bootstrap_percentile(10, 1, options, noop), ArgumentError);
}

TEST_CASE("the crude-fraction interval brackets its point estimate") {
    const auto cohort = simulate_cohort(scenario_registry(4), 400, 44);
    BootstrapOptions options;
    options.replicates = 200;
    options.seed = 9;
    const auto est = bootstrap_paf_crude(cohort, options);
    REQUIRE(est.lower.has_value());
    REQUIRE(est.upper.has_value());
    CHECK(*est.lower <= est.value);
    CHECK(est.value <= *est.upper);
    CHECK(*est.lower < *est.upper);
    CHECK(est.replicates_used == 200);
    CHECK_FALSE(est.variance.has_value());

    const auto rerun = bootstrap_paf_crude(cohort, options);
    CHECK(*rerun.lower == *est.lower);
    CHECK(*rerun.upper == *est.upper);
}

TEST_CASE("curve bands are pointwise and ordered") {
    const auto cohort = simulate_cohort(scenario_registry(4), 300, 45);
    const std::vector<double> times{5.0, 10.0, 20.0, 40.0, 80.0};
    BootstrapOptions options;
    options.replicates = 120;
    const auto o = bootstrap_paf_o(cohort, times, options);
    const auto c = bootstrap_paf_c(cohort, times, options);
    for (const auto* curve : {&o, &c}) {
        REQUIRE(curve->lower.size() == times.size());
        for (std::size_t k = 0; k < times.size(); ++k) {
            if (!curve->band_defined[k]) continue;
            CHECK(curve->lower[k] <= curve->upper[k]);
            if (curve->defined[k]) {
                CHECK(curve->lower[k] <= curve->values[k] + 1e-12);
                CHECK(curve->values[k] <= curve->upper[k] + 1e-12);
            }
        }
    }
}

TEST_CASE("landmark intervals attach to the kept landmarks only") {
    const auto cohort = simulate_cohort(scenario_registry(4), 800, 46);
    const auto grid = make_landmark_grid(10.0, 40.0, 10.0, 30.0);
    BootstrapOptions options;
    options.replicates = 60;
    const auto analysis = bootstrap_paf_lm_separate(cohort, grid, options);
    REQUIRE(!analysis.estimates.empty());
    for (const auto& est : analysis.estimates) {
        if (!est.lower) continue;
        CHECK(*est.lower <= est.value);
        CHECK(est.value <= *est.upper);
    }

    const auto super = bootstrap_paf_lm_supermodel(cohort, grid, options);
    REQUIRE(super.lower.size() == super.landmarks.size());
    for (std::size_t k = 0; k < super.landmarks.size(); ++k) {
        if (!super.lower[k]) continue;
        CHECK(*super.lower[k] <= *super.upper[k]);
    }
}

TEST_CASE("point estimates from a bootstrap call match the direct estimators") {
    const auto cohort = simulate_cohort(scenario_registry(4), 250, 47);
    BootstrapOptions options;
    options.replicates = 30;
    const std::vector<double> times{10.0, 30.0, 60.0};

    const auto direct_o = paf_o_curve(aalen_johansen(cohort), times);
    const auto boot_o = bootstrap_paf_o(cohort, times, options);
    REQUIRE(boot_o.defined == direct_o.defined);
    const auto direct_c =
        paf_c_curve(aalen_johansen(cohort), cif_censor_at_exposure(cohort), times);
    const auto boot_c = bootstrap_paf_c(cohort, times, options);
    REQUIRE(boot_c.defined == direct_c.defined);
    for (std::size_t k = 0; k < times.size(); ++k) {
        if (direct_o.defined[k]) CHECK(boot_o.values[k] == direct_o.values[k]);
        if (direct_c.defined[k]) CHECK(boot_c.values[k] == direct_c.values[k]);
    }

    const auto direct_crude = paf_crude(fourfold_table(cohort));
    CHECK(bootstrap_paf_crude(cohort, options).value == direct_crude);
}
