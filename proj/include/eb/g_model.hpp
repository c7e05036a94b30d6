#pragma once

// Exponential-family prior modeling on the theta grid: g(alpha), the
// multinomial log-likelihood through f = P g(alpha), Fisher information,
// the induced covariance of g-hat, posterior-expectation accuracy, and a
// multi-start Fisher-scoring MLE.

#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "eb/errors.hpp"
#include "eb/f_model.hpp"
#include "eb/grid.hpp"
#include "eb/rng.hpp"

namespace eb {

struct GModelSpec {
    Mat Q;      // m x q basis over the theta grid
    Mat P;      // n x m sampling matrix
    Vec theta;  // grid (for spike lookups and reports)
};

inline Vec prior_from_alpha(const Mat& Q, const Vec& alpha) {
    Vec eta = Q * alpha;
    double emax = eta.maxCoeff();
    Vec g = (eta.array() - emax).exp();
    return g / g.sum();
}

// Q_alpha = D(g) Q with D(g) = diag(g) - g g'.
inline Mat q_alpha_matrix(const Mat& Q, const Vec& g) {
    return g.asDiagonal() * Q - g * (g.transpose() * Q);
}

inline Vec floored(const Vec& f, double floor_value = 1e-12) {
    return f.cwiseMax(floor_value);
}

// value = sum y_i log f_i(alpha); gradient = Q_alpha' P' (y / f).
inline std::pair<double, Vec> log_likelihood_and_score(const GModelSpec& spec, const Vec& alpha, const Vec& y) {
    Vec g = prior_from_alpha(spec.Q, alpha);
    Vec f = floored(spec.P * g);
    double value = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i)
        if (y[i] != 0.0) value += y[i] * std::log(f[i]);
    Vec ratio = y.cwiseQuotient(f);
    Mat qa = q_alpha_matrix(spec.Q, g);
    Vec score = qa.transpose() * (spec.P.transpose() * ratio);
    return {value, score};
}

// I(alpha) = N Q_alpha' P' diag(1/f) P Q_alpha.
inline Mat fisher_information(const GModelSpec& spec, const Vec& alpha, double N) {
    Vec g = prior_from_alpha(spec.Q, alpha);
    Vec f = floored(spec.P * g);
    Mat M = spec.P * q_alpha_matrix(spec.Q, g);  // n x q
    return N * (M.transpose() * f.cwiseInverse().asDiagonal() * M);
}

// cov(g-hat) = Q_alpha I^-1 Q_alpha' (I already carries N). Singular I is
// handled by an SVD pseudo-inverse; this happens when Q contains a constant
// direction, which D(g) annihilates.
inline Mat g_covariance(const GModelSpec& spec, const Vec& alpha, double N, bool* singular_info = nullptr) {
    Vec g = prior_from_alpha(spec.Q, alpha);
    Mat qa = q_alpha_matrix(spec.Q, g);
    Mat info = fisher_information(spec, alpha, N);
    Eigen::JacobiSVD<Mat> svd(info, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vec& d = svd.singularValues();
    double tol = 1e-12 * d[0];
    bool singular = false;
    Vec dinv(d.size());
    for (Eigen::Index k = 0; k < d.size(); ++k) {
        if (d[k] > tol)
            dinv[k] = 1.0 / d[k];
        else {
            dinv[k] = 0.0;
            singular = true;
        }
    }
    if (singular_info) *singular_info = singular;
    Mat inv = svd.matrixV() * dinv.asDiagonal() * svd.matrixU().transpose();
    return qa * inv * qa.transpose();
}

struct GModelFit {
    Vec alpha;
    Vec g;
    Vec f;
    Mat info;        // Fisher information at alpha, N = data total
    Mat gcov;        // covariance of g-hat
    double loglik = 0.0;
    double score_norm = 0.0;
    int iterations = 0;
    int restarts_used = 0;
    bool converged = false;
    bool warning = false;  // no start converged; best iterate returned
};

namespace detail {

struct FitTrace {
    Vec alpha;
    double loglik;
    double score_norm;
    int iterations;
    bool converged;
};

// Fisher scoring with an infinity-norm step cap and Armijo backtracking.
// The cap keeps the spike direction from running to the simplex boundary,
// where D(g) degenerates and the score vanishes spuriously.
inline FitTrace fisher_scoring(const GModelSpec& spec, const Vec& y, Vec alpha, int max_iter, double tol) {
    const double N = y.sum();
    auto [ll, score] = log_likelihood_and_score(spec, alpha, y);
    FitTrace tr{alpha, ll, score.lpNorm<Eigen::Infinity>(), 0, false};
    for (int iter = 1; iter <= max_iter; ++iter) {
        if (tr.score_norm < tol) {
            tr.converged = true;
            return tr;
        }
        Mat info = fisher_information(spec, tr.alpha, N);
        double ridge = 1e-12 * info.trace();
        Mat H = info + ridge * Mat::Identity(info.rows(), info.cols());
        Vec step = H.ldlt().solve(score);
        if (!step.allFinite()) return tr;
        double m = step.lpNorm<Eigen::Infinity>();
        if (m > 2.0) step *= 2.0 / m;
        double slope = score.dot(step);
        if (slope <= 0) return tr;

        double lambda = 1.0;
        bool accepted = false;
        for (int half = 0; half < 60; ++half) {
            Vec alpha_try = tr.alpha + lambda * step;
            auto [ll_try, score_try] = log_likelihood_and_score(spec, alpha_try, y);
            if (std::isfinite(ll_try) && ll_try >= tr.loglik + 1e-4 * lambda * slope - 1e-13 * std::abs(tr.loglik)) {
                tr.alpha = alpha_try;
                tr.loglik = ll_try;
                score = score_try;
                tr.score_norm = score.lpNorm<Eigen::Infinity>();
                tr.iterations = iter;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if (!accepted) return tr;  // line search exhausted; local flat spot
    }
    tr.converged = tr.score_norm < tol;
    return tr;
}

}  // namespace detail

// Multi-start MLE: alpha = 0 first, then restarts-1 Gaussian(0, 0.5) starts
// from a seeded stream. Returns the best converged optimum; if nothing
// converged, the best iterate with the warning flag set.
inline GModelFit fit_mle(const GModelSpec& spec, const Vec& y, int restarts, std::uint64_t seed,
                         int max_iter = 200, double tol = 1e-6) {
    if (restarts < 1) throw ConfigError("fit_mle: restarts must be >= 1");
    const Eigen::Index q = spec.Q.cols();
    Rng rng(seed, "restarts");

    bool have_converged = false;
    detail::FitTrace best{Vec::Zero(q), -std::numeric_limits<double>::infinity(), 0.0, 0, false};
    for (int r = 0; r < restarts; ++r) {
        Vec start = Vec::Zero(q);
        if (r > 0)
            for (Eigen::Index k = 0; k < q; ++k) start[k] = 0.5 * rng.normal();
        detail::FitTrace tr = detail::fisher_scoring(spec, y, start, max_iter, tol);
        bool take = (tr.converged && !have_converged) ||
                    (tr.converged == have_converged && tr.loglik > best.loglik);
        if (take) {
            best = tr;
            have_converged = have_converged || tr.converged;
        }
    }

    GModelFit fit;
    fit.alpha = best.alpha;
    fit.g = prior_from_alpha(spec.Q, best.alpha);
    fit.f = spec.P * fit.g;
    fit.info = fisher_information(spec, best.alpha, y.sum());
    fit.gcov = g_covariance(spec, best.alpha, y.sum());
    fit.loglik = best.loglik;
    fit.score_norm = best.score_norm;
    fit.iterations = best.iterations;
    fit.restarts_used = restarts;
    fit.converged = best.converged;
    fit.warning = !best.converged;
    return fit;
}

// sd of the posterior expectation u'g/v'g at g = g(alpha-hat), propagating
// cov(g-hat) through the ratio: w = u/u'g - v/v'g, sd = |E| sqrt(w'cov w).
inline EstimateWithAccuracy theorem4_accuracy(const GModelSpec& spec, const Vec& g, const Mat& gcov, const Vec& t,
                                              int i) {
    auto [u, v] = make_uv(spec.P, t, i);
    double ug = u.dot(g), vg = v.dot(g);
    if (ug == 0.0 || vg == 0.0) throw NumericalError("theorem4_accuracy: vanishing u'g or v'g");
    Vec w = u / ug - v / vg;
    EstimateWithAccuracy out;
    out.estimate = ug / vg;
    double var = w.dot(gcov * w);
    out.cv = std::sqrt(std::max(var, 0.0));
    out.sd = std::abs(out.estimate) * out.cv;
    return out;
}

}  // namespace eb
