#pragma once

// Bayes rule in terms of the marginal f: truncated-SVD pseudo-inverses of
// the sampling matrix, the U/V/W vectors, plug-in estimates, and the
// delta-method accuracy formulas (nonparametric, direct, and smoothed).

#include <cmath>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "eb/errors.hpp"
#include "eb/grid.hpp"

namespace eb {

struct PseudoInverse {
    Mat A;     // m x n
    Mat Rr;    // m x r, leading right singular vectors
    Vec d;     // all singular values, descending
    int rank;  // r used
};

inline int energy_rank(const Vec& d, double eps) {
    double total = d.squaredNorm();
    if (total <= 0) throw NumericalError("energy_rank: zero matrix");
    for (int r = 1; r <= d.size(); ++r) {
        double tail = 0.0;
        for (Eigen::Index j = r; j < d.size(); ++j) tail += d[j] * d[j];
        if (tail / total < eps) return r;
    }
    return static_cast<int>(d.size());
}

inline PseudoInverse pseudo_inverse(const Mat& P, int rank) {
    Eigen::JacobiSVD<Mat> svd(P, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vec& d = svd.singularValues();
    if (rank < 1 || rank > d.size()) throw ConfigError("pseudo_inverse: rank out of range");
    if (d[rank - 1] < 1e-12 * d[0]) throw NumericalError("pseudo_inverse: requested rank exceeds numerical rank");
    Mat Lr = svd.matrixU().leftCols(rank);
    Mat Rr = svd.matrixV().leftCols(rank);
    Vec dinv = d.head(rank).cwiseInverse();
    PseudoInverse out;
    out.A = Rr * dinv.asDiagonal() * Lr.transpose();
    out.Rr = std::move(Rr);
    out.d = d;
    out.rank = rank;
    return out;
}

inline PseudoInverse pseudo_inverse_energy(const Mat& P, double eps) {
    Eigen::JacobiSVD<Mat> svd(P);
    return pseudo_inverse(P, energy_rank(svd.singularValues(), eps));
}

// (P'BP)^-1 P'B for symmetric positive definite B; B = I recovers the
// ordinary least-squares pseudo-inverse.
inline Mat generalized_pseudo_inverse(const Mat& P, const Mat& B) {
    Mat PtB = P.transpose() * B;
    Mat M = PtB * P;
    Eigen::LDLT<Mat> solver(M);
    if (solver.info() != Eigen::Success) throw NumericalError("generalized_pseudo_inverse: singular P'BP");
    return solver.solve(PtB);
}

struct UVW {
    Vec U, V, W;     // length n
    double Uf, Vf;   // f-weighted sums of U and V
};

// U = A'u, V = A'v, W = U/Uf - V/Vf; the f-weighted mean of W is 0.
inline UVW uvw_vectors(const PseudoInverse& pinv, const Vec& u, const Vec& v, const Vec& f) {
    UVW out;
    out.U = pinv.A.transpose() * u;
    out.V = pinv.A.transpose() * v;
    out.Uf = f.dot(out.U);
    out.Vf = f.dot(out.V);
    if (out.Vf == 0.0) throw NumericalError("uvw_vectors: V'f = 0");
    if (out.Uf == 0.0) throw NumericalError("uvw_vectors: U'f = 0 (parameter orthogonal to marginal)");
    out.W = out.U / out.Uf - out.V / out.Vf;
    return out;
}

inline double estimate_E_hat(const UVW& uvw, const Vec& fhat) {
    double den = uvw.V.dot(fhat);
    if (den == 0.0) throw NumericalError("estimate_E_hat: V'fhat = 0");
    return uvw.U.dot(fhat) / den;
}

struct EstimateWithAccuracy {
    double estimate = 0.0;
    double sd = 0.0;
    double cv = 0.0;
    double N = 1.0;
};

// Nonparametric x-space accuracy: cv = sigma_f(W)/sqrt(N), sd = |E| cv.
inline EstimateWithAccuracy theorem1_accuracy(const UVW& uvw, const Vec& f, double N) {
    EstimateWithAccuracy out;
    out.N = N;
    out.estimate = estimate_E_hat(uvw, f);
    double var = f.dot(uvw.W.cwiseProduct(uvw.W));
    out.cv = std::sqrt(var / N);
    out.sd = std::abs(out.estimate) * out.cv;
    return out;
}

// Direct theta-space benchmark: w = u/u'g - v/v'g, cv = sigma_g(w)/sqrt(N).
inline EstimateWithAccuracy theorem2_accuracy(const Vec& u, const Vec& v, const Vec& g, double N) {
    double ug = u.dot(g), vg = v.dot(g);
    if (ug == 0.0 || vg == 0.0) throw NumericalError("theorem2_accuracy: vanishing u'g or v'g");
    Vec w = u / ug - v / vg;
    EstimateWithAccuracy out;
    out.N = N;
    out.estimate = ug / vg;
    out.cv = std::sqrt(g.dot(w.cwiseProduct(w)) / N);
    out.sd = std::abs(out.estimate) * out.cv;
    return out;
}

// Smoothed (basis-X) accuracy: cv^2 = (W'X)_f (X'X)_f^-1 (X'W)_f / N where
// (A'B)_f = A' diag(f) B. X = identity reproduces theorem1_accuracy.
inline EstimateWithAccuracy theorem3_accuracy(double estimate, const Vec& W, const Mat& X, const Vec& f, double N) {
    Vec a = X.transpose() * f.cwiseProduct(W);
    Mat M = X.transpose() * f.asDiagonal() * X;
    Eigen::LDLT<Mat> solver(M);
    if (solver.info() != Eigen::Success) throw NumericalError("theorem3_accuracy: singular (X'X)_f");
    double quad = a.dot(solver.solve(a));
    EstimateWithAccuracy out;
    out.N = N;
    out.estimate = estimate;
    out.cv = std::sqrt(std::max(quad, 0.0) / N);
    out.sd = std::abs(estimate) * out.cv;
    return out;
}

// g_r = Rr Rr' g and the L1 truncation bias sum |g_r - g|.
inline std::pair<Vec, double> projection_prior(const PseudoInverse& pinv, const Vec& g) {
    Vec gr = pinv.Rr * (pinv.Rr.transpose() * g);
    return {gr, (gr - g).cwiseAbs().sum()};
}

// Sample size needed to bring a per-observation cv down to target c0.
inline long long sample_size_for_cv(double cv1, double c0) {
    if (c0 <= 0) throw ConfigError("sample_size_for_cv: target cv must be positive");
    double ratio = cv1 / c0;
    return static_cast<long long>(std::ceil(ratio * ratio - 1e-9));
}

}  // namespace eb
