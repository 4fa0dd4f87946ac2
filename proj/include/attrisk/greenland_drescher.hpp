#pragma once

#include <algorithm>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "attrisk/cohort.hpp"
#include "attrisk/errors.hpp"
#include "attrisk/landmark.hpp"
#include "attrisk/logistic.hpp"

namespace attrisk {

/// Model-based attributable fraction with its delta-method variance and the
/// underlying logistic fit of outcome on exposure plus covariates.
struct GreenlandDrescherPaf {
    double value = 0.0;
    double variance = 0.0;
    double case_weight = 0.0;
    LogisticFit fit;
};

namespace detail {

/// Core of the maximum-likelihood attributable-fraction estimator:
/// PAF = 1 - (1/m) sum over cases of p(D|E=0,Z) / p(D|E,Z), where m is the
/// number of cases and p comes from a logistic fit of D on (1, E, Z).
inline GreenlandDrescherPaf greenland_drescher_core(const Eigen::VectorXd& exposed,
                                                    const Eigen::VectorXd& died,
                                                    const Eigen::MatrixXd& covariates,
                                                    const Eigen::VectorXd& weights,
                                                    const std::vector<std::string>& covariate_names) {
    const Eigen::Index n = exposed.size();
    DesignMatrix design;
    design.x.resize(n, 2 + covariates.cols());
    design.x.col(0).setOnes();
    design.x.col(1) = exposed;
    if (covariates.cols() > 0) design.x.rightCols(covariates.cols()) = covariates;
    design.response = died;
    design.weights = weights;
    design.column_names = {"intercept", "exposure"};
    design.column_names.insert(design.column_names.end(), covariate_names.begin(),
                               covariate_names.end());

    GreenlandDrescherPaf result;
    result.fit = fit_logistic(design);
    if (!result.fit.converged)
        throw NumericalError("logistic model for the adjusted attributable fraction did not converge");

    const Eigen::Index ncol = design.x.cols();
    double case_weight = 0.0;
    double ratio_sum = 0.0;
    Eigen::VectorXd ratio_grad = Eigen::VectorXd::Zero(ncol);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double w = weights.size() ? weights[i] : 1.0;
        if (died[i] != 1.0 || w == 0.0) continue;
        case_weight += w;
        Eigen::VectorXd row = design.x.row(i);
        Eigen::VectorXd row0 = row;
        row0[1] = 0.0;
        const double p = result.fit.predict(row);
        const double p0 = result.fit.predict(row0);
        const double ratio = p0 / p;
        ratio_sum += w * ratio;
        ratio_grad += w * ratio * ((1.0 - p0) * row0 - (1.0 - p) * row);
    }
    if (case_weight == 0.0)
        throw DataError("attributable fraction undefined: no death cases");

    result.case_weight = case_weight;
    result.value = 1.0 - ratio_sum / case_weight;
    const Eigen::VectorXd grad = -ratio_grad / case_weight;
    result.variance = grad.dot(result.fit.covariance * grad);
    return result;
}

} // namespace detail

/// Cohort version: outcome is death at end of stay; requires a fully
/// observed cohort (same precondition as the fourfold table).  `covariates`
/// selects cohort covariate columns; empty gives the crude model, which
/// collapses exactly to the fourfold arithmetic.
inline GreenlandDrescherPaf paf_greenland_drescher(const Cohort& cohort,
                                                   const std::vector<std::string>& covariates = {},
                                                   std::span<const double> multiplicity = {}) {
    if (cohort.patients.empty()) throw DataError("attributable fraction undefined on an empty cohort");
    if (!multiplicity.empty() && multiplicity.size() != cohort.size())
        throw ArgumentError("patient multiplicity vector must match cohort size");
    for (const auto& name : covariates)
        if (std::find(cohort.covariate_names.begin(), cohort.covariate_names.end(), name) ==
            cohort.covariate_names.end())
            throw ArgumentError("unknown covariate '" + name + "'");

    const Eigen::Index n = static_cast<Eigen::Index>(cohort.size());
    Eigen::VectorXd exposed(n), died(n), weights(n);
    Eigen::MatrixXd z(n, static_cast<Eigen::Index>(covariates.size()));
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& p = cohort.patients[static_cast<std::size_t>(i)];
        if (p.censored)
            throw DataError("attributable fraction undefined: patient '" + p.id +
                            "' is censored; estimate paf_o and read its value at end of follow-up");
        exposed[i] = p.infection_time.has_value() ? 1.0 : 0.0;
        died[i] = p.died() ? 1.0 : 0.0;
        weights[i] = multiplicity.empty() ? 1.0 : multiplicity[static_cast<std::size_t>(i)];
        for (std::size_t c = 0; c < covariates.size(); ++c)
            z(i, static_cast<Eigen::Index>(c)) = p.covariates.at(covariates[c]);
    }
    return detail::greenland_drescher_core(exposed, died, z, weights, covariates);
}

/// Landmark-dataset version: rows carry covariate values in
/// `row_value_names` order; `covariates` selects the adjustment set.
inline GreenlandDrescherPaf paf_greenland_drescher(std::span<const LandmarkRow> rows,
                                                   const std::vector<std::string>& row_value_names,
                                                   const std::vector<std::string>& covariates = {},
                                                   std::span<const double> row_weights = {}) {
    if (rows.empty()) throw DataError("attributable fraction undefined: empty landmark dataset");
    if (!row_weights.empty() && row_weights.size() != rows.size())
        throw ArgumentError("row weight vector must match landmark dataset size");
    std::vector<std::size_t> selected;
    for (const auto& name : covariates) {
        const auto it = std::find(row_value_names.begin(), row_value_names.end(), name);
        if (it == row_value_names.end()) throw ArgumentError("unknown covariate '" + name + "'");
        selected.push_back(static_cast<std::size_t>(it - row_value_names.begin()));
    }

    const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
    Eigen::VectorXd exposed(n), died(n), weights(n);
    Eigen::MatrixXd z(n, static_cast<Eigen::Index>(selected.size()));
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& row = rows[static_cast<std::size_t>(i)];
        exposed[i] = row.exposed ? 1.0 : 0.0;
        died[i] = row.died ? 1.0 : 0.0;
        weights[i] = row_weights.empty() ? 1.0 : row_weights[static_cast<std::size_t>(i)];
        for (std::size_t c = 0; c < selected.size(); ++c)
            z(i, static_cast<Eigen::Index>(c)) = row.covariate_values.at(selected[c]);
    }
    return detail::greenland_drescher_core(exposed, died, z, weights, covariates);
}

} // namespace attrisk
