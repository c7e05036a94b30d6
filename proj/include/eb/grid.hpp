#pragma once

// Discrete Bayes substrate: grids, the normal sampling matrix, prior to
// marginal map f = Pg, and exact posterior computations on the grid.

#include <cmath>
#include <utility>

#include <Eigen/Dense>

#include "eb/errors.hpp"

namespace eb {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr double kInvSqrt2Pi = 0.3989422804014326779399461;

inline double normal_pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }

inline Vec linspace(double from, double to, int count) {
    if (count < 1) throw ConfigError("linspace: count < 1");
    Vec v(count);
    if (count == 1) {
        v[0] = from;
        return v;
    }
    for (int i = 0; i < count; ++i) v[i] = from + (to - from) * static_cast<double>(i) / (count - 1);
    v[count - 1] = to;  // endpoint exact, not from + (to-from)*1.0
    return v;
}

inline Vec grid_by_step(double from, double to, double step) {
    if (step <= 0 || to < from) throw ConfigError("grid_by_step: bad range");
    int count = static_cast<int>(std::lround((to - from) / step)) + 1;
    return linspace(from, to, count);
}

inline int nearest_index(const Vec& grid, double value) {
    int best = 0;
    double bestd = std::abs(grid[0] - value);
    for (int i = 1; i < grid.size(); ++i) {
        double d = std::abs(grid[i] - value);
        if (d < bestd) {
            bestd = d;
            best = i;
        }
    }
    return best;
}

// p_ij proportional to exp(-(x_i-theta_j)^2 / (2 sigma^2)), each column
// normalized to sum 1 so the discrete model is self-consistent on the
// truncated x-range.
inline Mat build_normal_sampling_matrix(const Vec& theta, const Vec& x, double sigma) {
    if (sigma <= 0) throw ConfigError("sampling matrix: sigma must be positive");
    Mat P(x.size(), theta.size());
    for (Eigen::Index j = 0; j < theta.size(); ++j) {
        for (Eigen::Index i = 0; i < x.size(); ++i) P(i, j) = normal_pdf((x[i] - theta[j]) / sigma);
        double s = P.col(j).sum();
        if (s <= 0) throw NumericalError("sampling matrix: empty column");
        P.col(j) /= s;
    }
    return P;
}

inline Vec normalize_probability(Vec v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (v[i] < -1e-15) throw NumericalError("probability vector with negative entry");
        if (v[i] < 0) v[i] = 0;
    }
    double s = v.sum();
    if (s <= 0) throw NumericalError("probability vector sums to zero");
    return v / s;
}

inline Vec marginal(const Mat& P, const Vec& g) {
    if (P.cols() != g.size()) throw ConfigError("marginal: dimension mismatch");
    return P * g;
}

inline Vec posterior_distribution(const Mat& P, const Vec& g, int i) {
    Vec num = P.row(i).transpose().cwiseProduct(g);
    double fi = num.sum();
    if (fi <= 0) throw NumericalError("posterior: f_i = 0 (unsupported observation)");
    return num / fi;
}

// u_j = t_j p_ij, v = row i of P; posterior expectation is u'g / v'g.
inline std::pair<Vec, Vec> make_uv(const Mat& P, const Vec& t, int i) {
    Vec v = P.row(i).transpose();
    Vec u = t.cwiseProduct(v);
    return {u, v};
}

inline double posterior_expectation(const Mat& P, const Vec& g, const Vec& t, int i) {
    auto [u, v] = make_uv(P, t, i);
    double den = v.dot(g);
    if (den <= 0) throw NumericalError("posterior expectation: f_i = 0");
    return u.dot(g) / den;
}

}  // namespace eb
