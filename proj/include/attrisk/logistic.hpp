#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "attrisk/errors.hpp"

namespace attrisk {

/// Observations for a logistic model: one row per observation, named columns
/// (including any intercept column), 0/1 response, optional frequency or
/// case weights.
struct DesignMatrix {
    Eigen::MatrixXd x;
    Eigen::VectorXd response;
    Eigen::VectorXd weights; // size 0 = all ones
    std::vector<std::string> column_names;

    Eigen::Index rows() const { return x.rows(); }
    Eigen::Index cols() const { return x.cols(); }
};

struct LogisticFit {
    Eigen::VectorXd coefficients;
    Eigen::MatrixXd covariance; // inverse Fisher information at the optimum
    bool converged = false;
    int iterations = 0;
    double log_likelihood = -std::numeric_limits<double>::infinity();
    std::vector<std::string> column_names;

    double predict(const Eigen::VectorXd& row) const {
        const double eta = row.dot(coefficients);
        if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
        const double e = std::exp(eta);
        return e / (1.0 + e);
    }
};

namespace detail {

inline double sigmoid(double eta) {
    if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
    const double e = std::exp(eta);
    return e / (1.0 + e);
}

inline constexpr double mu_clamp = 1e-12;

// |eta| beyond this pins the fitted probability within ~1e-11 of 0 or 1, so a
// vanishing gradient there signals a monotone likelihood (separation), not an
// interior optimum.
inline constexpr double eta_saturation = 25.0;

inline double bernoulli_loglik(const Eigen::VectorXd& eta, const Eigen::VectorXd& y,
                               const Eigen::VectorXd& w) {
    double ll = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
        double mu = sigmoid(eta[i]);
        mu = std::min(1.0 - mu_clamp, std::max(mu_clamp, mu));
        ll += w[i] * (y[i] * std::log(mu) + (1.0 - y[i]) * std::log1p(-mu));
    }
    return ll;
}

} // namespace detail

/// Maximum-likelihood logistic regression by iteratively reweighted least
/// squares (Fisher scoring with step-halving).  Stops when the score vector
/// has sup-norm <= gradient_tol or after max_iterations updates; separation
/// and other non-convergence are reported through `converged`, not thrown.
/// A rank-deficient design is rejected up front, naming the collinear
/// columns.
inline LogisticFit fit_logistic(const DesignMatrix& design, double gradient_tol = 1e-8,
                                int max_iterations = 100) {
    const Eigen::Index nrow = design.rows(), ncol = design.cols();
    if (nrow == 0 || ncol == 0) throw ArgumentError("empty design matrix");
    if (design.response.size() != nrow)
        throw ArgumentError("response length does not match design rows");
    if (static_cast<Eigen::Index>(design.column_names.size()) != ncol)
        throw ArgumentError("column_names must name every design column");
    for (Eigen::Index i = 0; i < nrow; ++i)
        if (design.response[i] != 0.0 && design.response[i] != 1.0)
            throw ArgumentError("response must be 0/1");
    Eigen::VectorXd w = design.weights;
    if (w.size() == 0)
        w = Eigen::VectorXd::Ones(nrow);
    else if (w.size() != nrow)
        throw ArgumentError("weights length does not match design rows");
    for (Eigen::Index i = 0; i < nrow; ++i)
        if (!(w[i] >= 0.0) || !std::isfinite(w[i]))
            throw ArgumentError("weights must be finite and >= 0");

    {
        Eigen::MatrixXd scaled = w.array().sqrt().matrix().asDiagonal() * design.x;
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(scaled);
        if (qr.rank() < ncol) {
            const auto perm = qr.colsPermutation().indices();
            std::string names;
            for (Eigen::Index k = qr.rank(); k < ncol; ++k) {
                if (!names.empty()) names += ", ";
                names += design.column_names[static_cast<std::size_t>(perm[k])];
            }
            throw ArgumentError("design matrix is rank deficient; collinear columns: " + names);
        }
    }

    LogisticFit fit;
    fit.column_names = design.column_names;
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(ncol);
    Eigen::VectorXd eta = Eigen::VectorXd::Zero(nrow);
    double ll = detail::bernoulli_loglik(eta, design.response, w);
    Eigen::MatrixXd info(ncol, ncol);

    for (int iter = 0; iter < max_iterations; ++iter) {
        Eigen::VectorXd mu(nrow), irls_w(nrow);
        for (Eigen::Index i = 0; i < nrow; ++i) {
            double m = detail::sigmoid(eta[i]);
            m = std::min(1.0 - detail::mu_clamp, std::max(detail::mu_clamp, m));
            mu[i] = m;
            irls_w[i] = w[i] * m * (1.0 - m);
        }
        const Eigen::VectorXd score =
            design.x.transpose() * (w.array() * (design.response - mu).array()).matrix();
        info = design.x.transpose() * irls_w.asDiagonal() * design.x;
        if (score.lpNorm<Eigen::Infinity>() <= gradient_tol) {
            fit.converged = eta.lpNorm<Eigen::Infinity>() < detail::eta_saturation;
            break;
        }

        const Eigen::VectorXd delta = info.ldlt().solve(score);
        double step = 1.0;
        Eigen::VectorXd eta_next;
        double ll_next = -std::numeric_limits<double>::infinity();
        bool accepted = false;
        for (int halving = 0; halving < 50; ++halving) {
            eta_next = eta + step * (design.x * delta);
            ll_next = detail::bernoulli_loglik(eta_next, design.response, w);
            if (ll_next >= ll - 1e-10) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break; // stalled; converged stays false unless score already small
        beta += step * delta;
        eta = eta_next;
        ll = ll_next;
        fit.iterations = iter + 1;
    }

    if (!fit.converged) { // refresh the information matrix at the final iterate
        Eigen::VectorXd irls_w(nrow);
        for (Eigen::Index i = 0; i < nrow; ++i) {
            double m = detail::sigmoid(eta[i]);
            m = std::min(1.0 - detail::mu_clamp, std::max(detail::mu_clamp, m));
            irls_w[i] = w[i] * m * (1.0 - m);
        }
        info = design.x.transpose() * irls_w.asDiagonal() * design.x;
    }
    fit.coefficients = beta;
    fit.log_likelihood = ll;
    fit.covariance = info.ldlt().solve(Eigen::MatrixXd::Identity(ncol, ncol));
    return fit;
}

} // namespace attrisk
