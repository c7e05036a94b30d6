#pragma once

// Poisson regression smoothing of binned counts with log link, plus the
// induced multinomial covariance factor Delta(f) used by the x-space
// accuracy formulas.

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "eb/errors.hpp"
#include "eb/grid.hpp"

namespace eb {

struct CountVector {
    Vec y;     // per-bin counts
    double N;  // total
};

// Nearest-center binning on an equally spaced grid; values beyond half a
// step outside the range are clamped to the end bins and counted.
inline CountVector bin_observations(const std::vector<double>& raw, const Vec& xgrid, int* out_of_range = nullptr) {
    if (raw.empty()) throw DataError("bin_observations: empty input");
    if (xgrid.size() < 2) throw ConfigError("bin_observations: grid too small");
    const double x0 = xgrid[0];
    const double dx = xgrid[1] - xgrid[0];
    const int n = static_cast<int>(xgrid.size());
    Vec y = Vec::Zero(n);
    int outside = 0;
    for (double z : raw) {
        double pos = (z - x0) / dx;
        int idx = static_cast<int>(std::lround(pos));
        if (idx < 0 || idx >= n) {
            ++outside;
            idx = idx < 0 ? 0 : n - 1;
        }
        y[idx] += 1.0;
    }
    if (out_of_range) *out_of_range = outside;
    CountVector cv;
    cv.y = std::move(y);
    cv.N = static_cast<double>(raw.size());
    return cv;
}

struct PoissonFit {
    Vec alpha;
    Vec mu;
    Vec fhat;  // mu / mu_total
    double deviance = 0.0;
    double grad_norm = 0.0;
    int iterations = 0;
    bool converged = false;
};

inline double poisson_deviance(const Vec& y, const Vec& mu) {
    double dev = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        double d = mu[i] - y[i];
        if (y[i] > 0) d += y[i] * std::log(y[i] / mu[i]);
        dev += 2.0 * d;
    }
    return dev;
}

// Damped Newton (IRLS) for y_i ~ Poisson(exp(x_i'alpha)). Converges when the
// gradient infinity-norm drops below 1e-8 or the relative deviance change
// below 1e-10; throws after max_iter iterations.
inline PoissonFit fit_poisson_glm(const Vec& y, const Mat& X, int max_iter = 100) {
    const Eigen::Index n = X.rows(), p = X.cols();
    if (y.size() != n) throw ConfigError("fit_poisson_glm: dimension mismatch");
    if (n < p) throw ConfigError("fit_poisson_glm: more columns than rows");

    // warm start: least squares of log(y + 0.5)
    Vec target(n);
    for (Eigen::Index i = 0; i < n; ++i) target[i] = std::log(y[i] + 0.5);
    Vec alpha = X.colPivHouseholderQr().solve(target);
    if (!alpha.allFinite()) throw NumericalError("fit_poisson_glm: rank-deficient design");

    Vec eta = X * alpha;
    Vec mu = eta.array().exp();
    double dev = poisson_deviance(y, mu);

    PoissonFit fit;
    for (int iter = 1; iter <= max_iter; ++iter) {
        Vec grad = X.transpose() * (y - mu);
        fit.grad_norm = grad.lpNorm<Eigen::Infinity>();
        fit.iterations = iter - 1;
        if (fit.grad_norm < 1e-8) {
            fit.converged = true;
            break;
        }
        Mat H = X.transpose() * mu.asDiagonal() * X;
        Vec step = H.ldlt().solve(grad);
        if (!step.allFinite()) throw NumericalError("fit_poisson_glm: singular information matrix");

        double lambda = 1.0;
        bool accepted = false;
        for (int half = 0; half < 40; ++half) {
            Vec alpha_try = alpha + lambda * step;
            Vec eta_try = X * alpha_try;
            if (eta_try.maxCoeff() > 700.0) {
                lambda *= 0.5;
                continue;
            }
            Vec mu_try = eta_try.array().exp();
            double dev_try = poisson_deviance(y, mu_try);
            if (std::isfinite(dev_try) && dev_try <= dev + 1e-12 * (std::abs(dev) + 1.0)) {
                double rel_change = std::abs(dev - dev_try) / (std::abs(dev) + 1.0);
                alpha = alpha_try;
                eta = eta_try;
                mu = mu_try;
                dev = dev_try;
                accepted = true;
                if (rel_change < 1e-10) fit.converged = true;
                break;
            }
            lambda *= 0.5;
        }
        if (!accepted) throw NumericalError("fit_poisson_glm: line search failed at iteration " + std::to_string(iter));
        if (fit.converged) {
            fit.iterations = iter;
            fit.grad_norm = (X.transpose() * (y - mu)).lpNorm<Eigen::Infinity>();
            break;
        }
    }
    if (!fit.converged)
        throw NumericalError("fit_poisson_glm: no convergence after " + std::to_string(max_iter) +
                             " iterations (grad norm " + std::to_string(fit.grad_norm) + ")");

    fit.alpha = alpha;
    fit.mu = mu;
    double mu_total = mu.sum();
    if (mu_total <= 0) throw NumericalError("fit_poisson_glm: degenerate fitted mean");
    fit.fhat = mu / mu_total;
    fit.deviance = dev;
    return fit;
}

// Delta(f) = diag(f) X (X' diag(f) X)^-1 X' diag(f): the delta-method
// covariance factor of the smoothed multinomial estimate.
inline Mat delta_covariance(const Vec& fhat, const Mat& X) {
    Mat G = X.transpose() * fhat.asDiagonal() * X;
    Eigen::LDLT<Mat> solver(G);
    if (solver.info() != Eigen::Success) throw NumericalError("delta_covariance: singular G_f");
    Mat XtF = X.transpose() * fhat.asDiagonal();  // p x n
    return XtF.transpose() * solver.solve(XtF);
}

}  // namespace eb
