#pragma once

#include <string>

#include "attrisk/errors.hpp"
#include "attrisk/hazards.hpp"

namespace attrisk {

/// A named data-generating setting: the five hazards plus the default
/// landmark window (an approximate mean length of stay).  Built-in settings
/// have ids 1..10; parameter files loaded at runtime get id 0.
struct Scenario {
    int id = 0;
    std::string label;
    HazardSet hazards;
    double default_window = 30.0;
};

/// The ten built-in simulation settings.  1-6 use constant hazards
/// (window 30), 7-10 time-varying Weibull hazards (window 8).
inline Scenario scenario_registry(int id) {
    auto constant_set = [](double a01, double a02, double a03, double a14, double a15) {
        HazardSet s;
        s.infection = HazardSpec::constant(a01);
        s.discharge_uninfected = HazardSpec::constant(a02);
        s.death_uninfected = HazardSpec::constant(a03);
        s.discharge_infected = HazardSpec::constant(a14);
        s.death_infected = HazardSpec::constant(a15);
        return s;
    };
    auto weibull_set = [](double k2, double l2, double k3, double l3, double k4, double l4,
                          double k5, double l5) {
        HazardSet s;
        s.infection = HazardSpec::weibull(1.0, 0.06);
        s.discharge_uninfected = HazardSpec::weibull(k2, l2);
        s.death_uninfected = HazardSpec::weibull(k3, l3);
        s.discharge_infected = HazardSpec::weibull(k4, l4);
        s.death_infected = HazardSpec::weibull(k5, l5);
        return s;
    };

    Scenario sc;
    sc.id = id;
    switch (id) {
    case 1:
        sc.label = "constant hazards, no effect on mortality, low infection hazard";
        sc.hazards = constant_set(0.005, 0.02, 0.01, 0.02, 0.01);
        sc.default_window = 30.0;
        break;
    case 2:
        sc.label = "constant hazards, no effect on mortality, high infection hazard";
        sc.hazards = constant_set(0.05, 0.02, 0.01, 0.02, 0.01);
        sc.default_window = 30.0;
        break;
    case 3:
        sc.label = "constant hazards, direct effect on mortality, low infection hazard";
        sc.hazards = constant_set(0.005, 0.02, 0.01, 0.02, 0.02);
        sc.default_window = 30.0;
        break;
    case 4:
        sc.label = "constant hazards, direct effect on mortality, high infection hazard";
        sc.hazards = constant_set(0.05, 0.02, 0.01, 0.02, 0.02);
        sc.default_window = 30.0;
        break;
    case 5:
        sc.label = "constant hazards, indirect effect on mortality, low infection hazard";
        sc.hazards = constant_set(0.005, 0.03, 0.01, 0.02, 0.01);
        sc.default_window = 30.0;
        break;
    case 6:
        sc.label = "constant hazards, indirect effect on mortality, high infection hazard";
        sc.hazards = constant_set(0.05, 0.03, 0.01, 0.02, 0.01);
        sc.default_window = 30.0;
        break;
    case 7:
        sc.label = "weibull hazards, indirect effect on mortality, reduced discharge when infected";
        sc.hazards = weibull_set(1.4, 0.08, 0.9, 0.05, 1.4, 0.05, 0.9, 0.05);
        sc.default_window = 8.0;
        break;
    case 8:
        sc.label = "weibull hazards, indirect effect on mortality, increasing death hazards";
        sc.hazards = weibull_set(0.9, 0.08, 1.4, 0.05, 0.9, 0.05, 1.4, 0.05);
        sc.default_window = 8.0;
        break;
    case 9:
        sc.label = "weibull hazards, direct effect on mortality, decreasing death hazards";
        sc.hazards = weibull_set(1.4, 0.05, 0.9, 0.05, 1.4, 0.05, 0.9, 0.08);
        sc.default_window = 8.0;
        break;
    case 10:
        sc.label = "weibull hazards, direct effect on mortality, increasing death hazards";
        sc.hazards = weibull_set(0.9, 0.05, 1.4, 0.05, 0.9, 0.05, 1.4, 0.08);
        sc.default_window = 8.0;
        break;
    default:
        throw ArgumentError("unknown scenario id " + std::to_string(id) + " (known: 1..10)");
    }
    return sc;
}

} // namespace attrisk
