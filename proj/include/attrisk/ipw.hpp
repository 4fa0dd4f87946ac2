#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "attrisk/aalen_johansen.hpp"
#include "attrisk/cohort.hpp"
#include "attrisk/detail/text.hpp"
#include "attrisk/errors.hpp"
#include "attrisk/logistic.hpp"

namespace attrisk {

struct IpwOptions {
    bool stabilize = true;
    double cap = 50.0;
};

/// Inverse-probability-of-remaining-uninfected weights on a discrete time
/// grid, ready to reweight the censor-at-exposure estimator.
struct IpwWeights {
    PatientTimeWeights weights;
    std::size_t truncated = 0; // patient-interval cells clamped at the cap
    bool converged = true;     // conditional pooled fit (trivially true without covariates)
    int iterations = 0;
};

/// Integer-day breakpoints 0,1,...,ceil(tau) — the default pooled-logistic
/// discretization.
inline std::vector<double> integer_time_grid(double tau) {
    if (!(tau > 0.0) || !std::isfinite(tau)) throw ArgumentError("grid requires tau > 0");
    const auto last = static_cast<std::size_t>(std::ceil(tau));
    std::vector<double> grid(last + 1);
    for (std::size_t k = 0; k <= last; ++k) grid[k] = static_cast<double>(k);
    return grid;
}

namespace detail {

/// Pooled logistic regression of infection onset on interval indicators plus
/// covariate main effects, solved on the block-sparse normal equations (the
/// indicator block is diagonal, so each Newton step costs O(rows x c^2)
/// instead of materialising a rows x (K + c) design).  Identical MLE to
/// fit_logistic on the expanded design.
struct PooledOnsetFit {
    Eigen::VectorXd interval_logit; // one intercept per grid interval
    Eigen::VectorXd theta;          // covariate effects
    bool converged = false;
    int iterations = 0;
};

struct OnsetRow {
    std::size_t patient;
    std::size_t interval; // 0-based interval index
    double event;
};

inline PooledOnsetFit fit_pooled_onset(const std::vector<OnsetRow>& rows,
                                       const Eigen::MatrixXd& covariate_values, // patient x c
                                       std::span<const double> multiplicity,
                                       std::size_t interval_count, double gradient_tol = 1e-8,
                                       int max_iterations = 100) {
    const auto weight_of = [&multiplicity](std::size_t i) {
        return multiplicity.empty() ? 1.0 : multiplicity[i];
    };
    const Eigen::Index c = covariate_values.cols();
    const Eigen::Index k = static_cast<Eigen::Index>(interval_count);

    PooledOnsetFit fit;
    fit.interval_logit = Eigen::VectorXd::Zero(k);
    fit.theta = Eigen::VectorXd::Zero(c);

    auto loglik = [&](const Eigen::VectorXd& alpha, const Eigen::VectorXd& theta) {
        double ll = 0.0;
        for (const auto& row : rows) {
            const double w = weight_of(row.patient);
            if (w == 0.0) continue;
            const double eta =
                alpha[static_cast<Eigen::Index>(row.interval)] +
                (c > 0 ? covariate_values.row(static_cast<Eigen::Index>(row.patient)).dot(theta)
                       : 0.0);
            double mu = sigmoid(eta);
            mu = std::min(1.0 - mu_clamp, std::max(mu_clamp, mu));
            ll += w * (row.event * std::log(mu) + (1.0 - row.event) * std::log1p(-mu));
        }
        return ll;
    };

    double ll = loglik(fit.interval_logit, fit.theta);
    for (int iter = 0; iter < max_iterations; ++iter) {
        Eigen::VectorXd grad_alpha = Eigen::VectorXd::Zero(k);
        Eigen::VectorXd grad_theta = Eigen::VectorXd::Zero(c);
        Eigen::VectorXd diag = Eigen::VectorXd::Zero(k);
        Eigen::MatrixXd cross = Eigen::MatrixXd::Zero(k, c);
        Eigen::MatrixXd cc = Eigen::MatrixXd::Zero(c, c);
        for (const auto& row : rows) {
            const double w = weight_of(row.patient);
            if (w == 0.0) continue;
            const Eigen::Index j = static_cast<Eigen::Index>(row.interval);
            const auto z = covariate_values.row(static_cast<Eigen::Index>(row.patient));
            const double eta = fit.interval_logit[j] + (c > 0 ? z.dot(fit.theta) : 0.0);
            double mu = sigmoid(eta);
            mu = std::min(1.0 - mu_clamp, std::max(mu_clamp, mu));
            const double resid = w * (row.event - mu);
            const double info = w * mu * (1.0 - mu);
            grad_alpha[j] += resid;
            diag[j] += info;
            if (c > 0) {
                grad_theta += resid * z.transpose();
                cross.row(j) += info * z;
                cc += info * z.transpose() * z;
            }
        }
        const double gnorm = std::max(grad_alpha.lpNorm<Eigen::Infinity>(),
                                      c > 0 ? grad_theta.lpNorm<Eigen::Infinity>() : 0.0);
        if (gnorm <= gradient_tol) {
            fit.converged = true;
            break;
        }

        // Newton step via the Schur complement of the diagonal block.
        Eigen::VectorXd delta_theta = Eigen::VectorXd::Zero(c);
        if (c > 0) {
            Eigen::MatrixXd schur = cc;
            Eigen::VectorXd rhs = grad_theta;
            for (Eigen::Index j = 0; j < k; ++j) {
                if (diag[j] <= 0.0) continue;
                schur.noalias() -= cross.row(j).transpose() * cross.row(j) / diag[j];
                rhs.noalias() -= cross.row(j).transpose() * (grad_alpha[j] / diag[j]);
            }
            delta_theta = schur.ldlt().solve(rhs);
        }
        Eigen::VectorXd delta_alpha(k);
        for (Eigen::Index j = 0; j < k; ++j) {
            if (diag[j] <= 0.0) {
                delta_alpha[j] = 0.0;
                continue;
            }
            const double adj = c > 0 ? cross.row(j).dot(delta_theta) : 0.0;
            delta_alpha[j] = (grad_alpha[j] - adj) / diag[j];
        }

        double step = 1.0;
        bool accepted = false;
        Eigen::VectorXd alpha_next, theta_next;
        double ll_next = ll;
        for (int halving = 0; halving < 50; ++halving) {
            alpha_next = fit.interval_logit + step * delta_alpha;
            theta_next = fit.theta + step * delta_theta;
            ll_next = loglik(alpha_next, theta_next);
            if (ll_next >= ll - 1e-10) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;
        fit.interval_logit = alpha_next;
        fit.theta = theta_next;
        ll = ll_next;
        fit.iterations = iter + 1;
    }
    return fit;
}

} // namespace detail

/// Weights that correct the censor-at-exposure estimator for measured
/// confounding of infection onset.
///
/// The grid 0 = g_0 < g_1 < ... < g_K (g_K >= tau) defines pooled-logistic
/// person-time intervals (g_{j-1}, g_j].  For each at-risk uninfected
/// interval the onset probability is fitted with interval indicators plus
/// covariate main effects (the saturated indicator model has the closed-form
/// per-interval event fraction as its MLE, used directly for the marginal
/// model).  The weight of patient i on [g_k, g_{k+1}) multiplies
/// 1/(1 - p_cond) over completed intervals j <= k, stabilized by default
/// with the marginal factors (1 - p_marg); values are clamped at
/// options.cap, counting truncations.  Without covariates the stabilized
/// weights are identically one.
inline IpwWeights ipw_uninfected_weights(const Cohort& cohort,
                                         const std::vector<std::string>& covariates,
                                         const std::vector<double>& grid,
                                         const IpwOptions& options = {},
                                         std::span<const double> multiplicity = {}) {
    if (cohort.patients.empty()) throw ArgumentError("ipw requires a nonempty cohort");
    detail::check_multiplicity(cohort, multiplicity);
    if (grid.size() < 2) throw ArgumentError("ipw grid needs at least two breakpoints");
    if (grid.front() != 0.0) throw ArgumentError("ipw grid must start at 0");
    for (std::size_t k = 1; k < grid.size(); ++k)
        if (!(grid[k] > grid[k - 1]) || !std::isfinite(grid[k]))
            throw ArgumentError("ipw grid must be strictly increasing and finite");
    if (grid.back() < cohort.tau)
        throw ArgumentError("ipw grid must cover (0, tau]: last breakpoint " +
                            detail::format_double(grid.back()) + " < tau " +
                            detail::format_double(cohort.tau));
    if (!(options.cap > 0.0)) throw ArgumentError("ipw cap must be > 0");
    for (const auto& name : covariates)
        if (std::find(cohort.covariate_names.begin(), cohort.covariate_names.end(), name) ==
            cohort.covariate_names.end())
            throw ArgumentError("unknown covariate '" + name + "'");

    const std::size_t n = cohort.size();
    const std::size_t intervals = grid.size() - 1;
    const auto weight_of = [&multiplicity](std::size_t i) {
        return multiplicity.empty() ? 1.0 : multiplicity[i];
    };

    // Person-time rows; the binding end of a patient's uninfected at-risk
    // time is the infection time when present, the exit time otherwise.
    std::vector<detail::OnsetRow> rows;
    std::vector<double> at_risk(intervals, 0.0), onsets(intervals, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& p = cohort.patients[i];
        const double stop = p.infection_time ? *p.infection_time : p.exit_time;
        for (std::size_t j = 0; j < intervals && grid[j] < stop; ++j) {
            const bool event = p.infection_time && *p.infection_time <= grid[j + 1];
            rows.push_back({i, j, event ? 1.0 : 0.0});
            at_risk[j] += weight_of(i);
            if (event) onsets[j] += weight_of(i);
        }
    }
    // Marginal per-interval onset fractions (exact saturated-model MLE).
    // Intervals past the last uninfected at-risk time are inert: nobody
    // completes them, so their (undefined) fraction is never multiplied in.
    std::vector<double> marginal(intervals, 0.0);
    for (std::size_t j = 0; j < intervals; ++j)
        if (at_risk[j] > 0.0) marginal[j] = onsets[j] / at_risk[j];

    IpwWeights out;
    Eigen::MatrixXd z(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(covariates.size()));
    detail::PooledOnsetFit conditional;
    if (!covariates.empty()) {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t c = 0; c < covariates.size(); ++c)
                z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) =
                    cohort.patients[i].covariates.at(covariates[c]);
        conditional = detail::fit_pooled_onset(rows, z, multiplicity, intervals);
        if (!conditional.converged)
            throw NumericalError("ipw pooled logistic regression did not converge");
        out.converged = conditional.converged;
        out.iterations = conditional.iterations;
    }

    // Clamped away from 1 so the inverse factor stays finite (the cap still
    // bounds the product); an exact marginal of 1 keeps the stabilized
    // numerator at 0.
    const auto conditional_p = [&](std::size_t i, std::size_t j) {
        if (covariates.empty()) return std::min(marginal[j], 1.0 - detail::mu_clamp);
        const double eta = conditional.interval_logit[static_cast<Eigen::Index>(j)] +
                           z.row(static_cast<Eigen::Index>(i)).dot(conditional.theta);
        const double mu = detail::sigmoid(eta);
        return std::min(1.0 - detail::mu_clamp, std::max(detail::mu_clamp, mu));
    };

    out.weights.grid = grid;
    out.weights.values.assign(n, std::vector<double>(grid.size(), 1.0));
    for (std::size_t i = 0; i < n; ++i) {
        const auto& p = cohort.patients[i];
        const double stop = p.infection_time ? *p.infection_time : p.exit_time;
        double product = 1.0;
        for (std::size_t k = 1; k < grid.size(); ++k) {
            if (grid[k - 1] < stop) { // completed interval k while at risk
                const double pc = conditional_p(i, k - 1);
                const double factor =
                    options.stabilize ? (1.0 - marginal[k - 1]) / (1.0 - pc) : 1.0 / (1.0 - pc);
                product *= factor;
                if (!(product <= options.cap)) {
                    product = options.cap;
                    ++out.truncated;
                }
            }
            out.weights.values[i][k] = product;
        }
    }
    return out;
}

} // namespace attrisk
