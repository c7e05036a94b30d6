#pragma once

// Natural cubic spline design matrices. Truncated-power natural basis with
// boundary knots at the data extremes and interior knots at equally spaced
// quantiles. Downstream results depend only on the column space, so the
// parameterization (vs B-splines) is free; basis functions are cubic inside
// the boundary knots and exactly linear outside.

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "eb/errors.hpp"
#include "eb/grid.hpp"

namespace eb {

struct BasisMatrix {
    Mat X;
    Vec knots;       // boundary + interior, ascending
    bool intercept;  // first column all ones
};

// Linear-interpolation quantile (the common statistical default) on sorted data.
inline double quantile_type7(const std::vector<double>& sorted, double p) {
    const std::size_t n = sorted.size();
    if (n == 1) return sorted[0];
    double h = static_cast<double>(n - 1) * p;
    std::size_t lo = static_cast<std::size_t>(std::floor(h));
    if (lo >= n - 1) return sorted[n - 1];
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

inline BasisMatrix natural_spline_basis(const Vec& points, int df, bool intercept) {
    const Eigen::Index n = points.size();
    if (df < 1) throw ConfigError("natural_spline_basis: df must be >= 1");
    if (n < df + 1) throw ConfigError("natural_spline_basis: too few points for df");
    for (Eigen::Index i = 1; i < n; ++i)
        if (!(points[i] > points[i - 1])) throw ConfigError("natural_spline_basis: points must be strictly increasing");

    std::vector<double> sorted(points.data(), points.data() + n);
    std::sort(sorted.begin(), sorted.end());

    // df-1 interior knots at equally spaced quantiles, boundary knots at extremes.
    std::vector<double> knots;
    knots.push_back(sorted.front());
    for (int k = 1; k < df; ++k) knots.push_back(quantile_type7(sorted, static_cast<double>(k) / df));
    knots.push_back(sorted.back());
    const int T = static_cast<int>(knots.size());
    for (int k = 1; k < T; ++k)
        if (!(knots[k] > knots[k - 1])) throw ConfigError("natural_spline_basis: coincident knots (df too large)");

    // d_k(x) = [(x-k_k)_+^3 - (x-k_last)_+^3] / (k_last - k_k); columns
    // x and d_k - d_{T-2} (k = 0..T-3) span the natural cubic splines on
    // these knots, excluding the constant.
    auto plus3 = [](double z) { return z > 0 ? z * z * z : 0.0; };
    auto dk = [&](double x, int k) {
        return (plus3(x - knots[static_cast<std::size_t>(k)]) - plus3(x - knots[static_cast<std::size_t>(T - 1)])) /
               (knots[static_cast<std::size_t>(T - 1)] - knots[static_cast<std::size_t>(k)]);
    };

    const int p = (intercept ? 1 : 0) + 1 + (T - 2);
    Mat X(n, p);
    for (Eigen::Index i = 0; i < n; ++i) {
        int c = 0;
        if (intercept) X(i, c++) = 1.0;
        X(i, c++) = points[i];
        for (int k = 0; k + 2 < T; ++k) X(i, c++) = dk(points[i], k) - dk(points[i], T - 2);
    }

    // full-column-rank check
    Eigen::JacobiSVD<Mat> svd(X);
    if (svd.singularValues()[svd.singularValues().size() - 1] <= 1e-8 * svd.singularValues()[0])
        throw NumericalError("natural_spline_basis: rank-deficient basis");

    BasisMatrix b;
    b.X = std::move(X);
    b.knots = Eigen::Map<Vec>(knots.data(), static_cast<Eigen::Index>(knots.size()));
    b.intercept = intercept;
    return b;
}

// Appends an indicator column for the grid point at spike_at (which must lie
// on the grid to within 1e-9).
inline Mat augment_with_spike(const Mat& Q, const Vec& theta, double spike_at) {
    if (Q.rows() != theta.size()) throw ConfigError("augment_with_spike: dimension mismatch");
    int j0 = nearest_index(theta, spike_at);
    if (std::abs(theta[j0] - spike_at) > 1e-9) throw ConfigError("augment_with_spike: spike location not on grid");
    Mat out(Q.rows(), Q.cols() + 1);
    out.leftCols(Q.cols()) = Q;
    out.col(Q.cols()).setZero();
    out(j0, Q.cols()) = 1.0;
    return out;
}

}  // namespace eb
