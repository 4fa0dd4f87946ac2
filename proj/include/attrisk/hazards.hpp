#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <string>

#include "attrisk/errors.hpp"

namespace attrisk {

enum class HazardFamily { constant, weibull };

/// One cause-specific hazard rate function.
///
/// constant: alpha(t) = rate                      (rate >= 0)
/// weibull : alpha(t) = shape*scale*(scale*t)^(shape-1)   (shape, scale > 0)
///
/// A Weibull with shape == 1 is evaluated through the constant-rate branch so
/// that Constant(r) and Weibull(1, r) are bit-identical everywhere.
struct HazardSpec {
    HazardFamily family = HazardFamily::constant;
    double rate = 0.0;  // constant family
    double shape = 1.0; // weibull family
    double scale = 0.0; // weibull family

    static HazardSpec constant(double rate) {
        if (!(rate >= 0.0) || !std::isfinite(rate))
            throw ArgumentError("constant hazard requires rate >= 0, got " + std::to_string(rate));
        HazardSpec h;
        h.family = HazardFamily::constant;
        h.rate = rate;
        return h;
    }

    static HazardSpec weibull(double shape, double scale) {
        if (!(shape > 0.0) || !std::isfinite(shape))
            throw ArgumentError("weibull hazard requires shape > 0, got " + std::to_string(shape));
        if (!(scale > 0.0) || !std::isfinite(scale))
            throw ArgumentError("weibull hazard requires scale > 0, got " + std::to_string(scale));
        HazardSpec h;
        h.family = HazardFamily::weibull;
        h.shape = shape;
        h.scale = scale;
        return h;
    }
};

namespace detail {
inline bool effectively_constant(const HazardSpec& h) {
    return h.family == HazardFamily::constant ||
           (h.family == HazardFamily::weibull && h.shape == 1.0);
}
inline double constant_rate_of(const HazardSpec& h) {
    return h.family == HazardFamily::constant ? h.rate : h.scale;
}
} // namespace detail

/// Instantaneous hazard alpha(t).  Constant accepts any t >= 0; weibull
/// requires t > 0 (shape < 1 diverges at the origin).
inline double hazard_at(const HazardSpec& h, double t) {
    if (h.family == HazardFamily::weibull) {
        if (!(t > 0.0))
            throw ArgumentError("hazard_at requires t > 0 for a weibull hazard, got " +
                                std::to_string(t));
    } else if (!(t >= 0.0)) {
        throw ArgumentError("hazard_at requires t >= 0, got " + std::to_string(t));
    }
    if (detail::effectively_constant(h)) return detail::constant_rate_of(h);
    return h.shape * h.scale * std::pow(h.scale * t, h.shape - 1.0);
}

/// Cumulative hazard over [s, t]: constant r*(t-s); weibull (scale*t)^shape -
/// (scale*s)^shape.  Requires 0 <= s <= t.
inline double cumulative_hazard(const HazardSpec& h, double s, double t) {
    if (!(s >= 0.0 && t >= s))
        throw ArgumentError("cumulative_hazard requires 0 <= s <= t, got s=" +
                            std::to_string(s) + " t=" + std::to_string(t));
    if (detail::effectively_constant(h)) return detail::constant_rate_of(h) * (t - s);
    return std::pow(h.scale * t, h.shape) - std::pow(h.scale * s, h.shape);
}

/// Sum of cumulative hazards of several competing causes over [s, t].
inline double total_cumulative_hazard(std::span<const HazardSpec> causes, double s, double t) {
    double sum = 0.0;
    for (const auto& h : causes) sum += cumulative_hazard(h, s, t);
    return sum;
}

/// Solve sum_j Lambda_j(s, T) == target for T >= s by bisection with an
/// expanding upper bracket (absolute tolerance 1e-10).  Returns +inf when the
/// total hazard is identically zero (no event can ever occur), the sentinel
/// callers treat as "stays in state forever".  Requires target > 0.
inline double invert_total_cumulative(std::span<const HazardSpec> causes, double s, double target) {
    if (causes.empty())
        throw ArgumentError("invert_total_cumulative requires at least one hazard");
    if (!(s >= 0.0))
        throw ArgumentError("invert_total_cumulative requires s >= 0");
    if (!(target > 0.0))
        throw ArgumentError("invert_total_cumulative requires target > 0");

    double zero_total = 0.0;
    for (const auto& h : causes)
        zero_total += detail::effectively_constant(h) ? detail::constant_rate_of(h) : 1.0;
    if (zero_total == 0.0) return std::numeric_limits<double>::infinity();

    double width = 1.0;
    double hi = s + width;
    int guard = 0;
    while (total_cumulative_hazard(causes, s, hi) < target) {
        width *= 2.0;
        hi = s + width;
        if (++guard > 200) return std::numeric_limits<double>::infinity();
    }
    double lo = s;
    while (hi - lo > 1e-10) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break; // spacing limit reached
        if (total_cumulative_hazard(causes, s, mid) < target)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

/// The five cause-specific hazards of the extended illness-death model.
/// From the initial state: infection, discharge, death; after infection:
/// discharge and death with their own rates.
struct HazardSet {
    HazardSpec infection;
    HazardSpec discharge_uninfected;
    HazardSpec death_uninfected;
    HazardSpec discharge_infected;
    HazardSpec death_infected;

    std::array<HazardSpec, 3> from_initial() const {
        return {infection, discharge_uninfected, death_uninfected};
    }
    std::array<HazardSpec, 2> from_infected() const {
        return {discharge_infected, death_infected};
    }
};

} // namespace attrisk
