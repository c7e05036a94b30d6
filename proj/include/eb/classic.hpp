#pragma once

// Classic empirical Bayes estimators driven by the marginal alone:
// Robbins' Poisson rule, Tweedie's formula, James-Stein shrinkage, and
// local/upper false discovery rate curves with delta-method accuracy.

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "eb/errors.hpp"
#include "eb/f_model.hpp"
#include "eb/g_model.hpp"
#include "eb/grid.hpp"

namespace eb {

// (x+1) f(x+1) / f(x) on integer-indexed frequencies (Poisson support).
inline double robbins_estimate(const std::vector<double>& freq, int x) {
    if (x < 0 || static_cast<std::size_t>(x) >= freq.size()) throw ConfigError("robbins_estimate: index out of range");
    double fx = freq[static_cast<std::size_t>(x)];
    if (fx <= 0) throw NumericalError("robbins_estimate: f(x) = 0");
    double fx1 = static_cast<std::size_t>(x + 1) < freq.size() ? freq[static_cast<std::size_t>(x + 1)] : 0.0;
    return (x + 1) * fx1 / fx;
}

struct TweedieCurve {
    Vec x;
    Vec estimate;  // x + d/dx log f
    Vec log_f;
    Vec dlog_f;
};

// Numerical log-derivative on the equally spaced grid: central differences
// inside, second-order one-sided at the ends (exact for quadratic log f).
inline TweedieCurve tweedie_curve(const Vec& x, const Vec& fhat, double sigma2 = 1.0) {
    const Eigen::Index n = x.size();
    if (fhat.size() != n || n < 3) throw ConfigError("tweedie_curve: need at least 3 grid points");
    const double h = x[1] - x[0];
    TweedieCurve out;
    out.x = x;
    out.log_f = floored(fhat, 1e-300).array().log();
    out.dlog_f = Vec(n);
    const Vec& l = out.log_f;
    out.dlog_f[0] = (-3.0 * l[0] + 4.0 * l[1] - l[2]) / (2.0 * h);
    for (Eigen::Index i = 1; i + 1 < n; ++i) out.dlog_f[i] = (l[i + 1] - l[i - 1]) / (2.0 * h);
    out.dlog_f[n - 1] = (3.0 * l[n - 1] - 4.0 * l[n - 2] + l[n - 3]) / (2.0 * h);
    out.estimate = x + sigma2 * out.dlog_f;
    return out;
}

// Componentwise shrinkage toward the grand mean with factor 1 - (N-3)/S.
inline Vec james_stein(const Vec& X) {
    const Eigen::Index N = X.size();
    if (N < 4) throw ConfigError("james_stein: need at least 4 observations");
    double mean = X.mean();
    double S = (X.array() - mean).square().sum();
    if (S <= 0) throw NumericalError("james_stein: zero spread");
    double factor = 1.0 - (static_cast<double>(N) - 3.0) / S;
    return (mean + factor * (X.array() - mean)).matrix();
}

struct FdrCurve {
    Vec x;
    Vec value;  // ufdr or fdr per grid point
    Vec sd;     // empty when not requested
    double pi0 = 1.0;
};

// ufdr(x_i) = phi(x_i) dx / f_i: the all-null density against the fitted
// discrete marginal. sd per point comes from the smoothed-accuracy formula
// with U constant and V the bin indicator, giving W = 1 - e_i/f_i.
inline FdrCurve ufdr_curve(const Vec& x, const Vec& fhat, const Mat& X, double N, bool with_sd) {
    const Eigen::Index n = x.size();
    if (fhat.size() != n) throw ConfigError("ufdr_curve: dimension mismatch");
    const double dx = x[1] - x[0];
    Vec f = floored(fhat);
    FdrCurve out;
    out.x = x;
    out.value = Vec(n);
    for (Eigen::Index i = 0; i < n; ++i) out.value[i] = normal_pdf(x[i]) * dx / f[i];
    if (with_sd) {
        out.sd = Vec(n);
        Mat M = X.transpose() * f.asDiagonal() * X;
        Eigen::LDLT<Mat> solver(M);
        if (solver.info() != Eigen::Success) throw NumericalError("ufdr_curve: singular (X'X)_f");
        Vec Xtf = X.transpose() * f;
        for (Eigen::Index i = 0; i < n; ++i) {
            Vec a = Xtf - X.row(i).transpose();
            double quad = a.dot(solver.solve(a));
            out.sd[i] = out.value[i] * std::sqrt(std::max(quad, 0.0) / N);
        }
    }
    return out;
}

inline double pi0_from_max(const Vec& ufdr) {
    double m = ufdr.maxCoeff();
    if (m <= 0) throw NumericalError("pi0_from_max: nonpositive curve");
    return 1.0 / m;
}

// fdr(x_i) = Pr{theta = spike | x_i} under the fitted prior, with accuracy
// propagated from cov(g-hat); values lie in [0,1] by construction.
inline FdrCurve fdr_curve_gmodel(const GModelSpec& spec, const Vec& x, const Vec& g, const Mat& gcov,
                                 double spike_at, bool with_sd) {
    int j0 = nearest_index(spec.theta, spike_at);
    if (std::abs(spec.theta[j0] - spike_at) > 1e-9) throw ConfigError("fdr_curve_gmodel: spike not on grid");
    const Eigen::Index n = spec.P.rows();
    if (x.size() != n) throw ConfigError("fdr_curve_gmodel: x grid mismatch");
    Vec t = Vec::Zero(spec.theta.size());
    t[j0] = 1.0;
    FdrCurve out;
    out.x = x;
    out.value = Vec(n);
    if (with_sd) out.sd = Vec(n);
    out.pi0 = g[j0];
    for (Eigen::Index i = 0; i < n; ++i) {
        EstimateWithAccuracy acc = theorem4_accuracy(spec, g, gcov, t, static_cast<int>(i));
        out.value[i] = acc.estimate;
        if (with_sd) out.sd[i] = acc.sd;
    }
    return out;
}

}  // namespace eb
