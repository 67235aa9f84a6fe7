#pragma once

// Small dense linear algebra for the estimation pipeline: a cyclic Jacobi
// eigensolver for symmetric matrices (principal components) and the
// Levinson-Durbin recursion (Yule-Walker systems). Problem sizes here are
// tens of dimensions, so simplicity and determinism win over blocking.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace loglap {

/** Eigen decomposition of a symmetric matrix, eigenvalues descending. */
struct SymmetricEigen {
    std::vector<double> eigenvalues;
    std::vector<std::vector<double>> eigenvectors;  // eigenvectors[m] is unit column m
};

/**
 * Cyclic Jacobi rotations on a symmetric matrix (vector of rows). Sweeps
 * until the off-diagonal mass is below 1e-30 times the squared Frobenius
 * norm. Eigenvector signs are fixed so the entry of largest magnitude is
 * positive, keeping the basis deterministic.
 */
inline SymmetricEigen jacobi_eigen_symmetric(std::vector<std::vector<double>> a) {
    const std::size_t n = a.size();
    for (const auto& row : a)
        if (row.size() != n)
            throw std::invalid_argument("jacobi_eigen_symmetric: matrix must be square");

    std::vector<std::vector<double>> v(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) v[i][i] = 1.0;

    double norm_sq = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) norm_sq += a[i][j] * a[i][j];
    const double tol = 1e-30 * (norm_sq > 0.0 ? norm_sq : 1.0);

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) off += 2.0 * a[i][j] * a[i][j];
        if (off <= tol) break;
        if (sweep == 99)
            throw std::runtime_error("jacobi_eigen_symmetric: no convergence in 100 sweeps");

        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double apq = a[p][q];
                if (apq == 0.0) continue;
                double theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                double t = std::copysign(1.0, theta) /
                           (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    double akp = a[k][p], akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    double apk = a[p][k], aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    double vkp = v[k][p], vkq = v[k][q];
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return a[i][i] > a[j][j]; });

    SymmetricEigen out;
    out.eigenvalues.resize(n);
    out.eigenvectors.assign(n, std::vector<double>(n));
    for (std::size_t m = 0; m < n; ++m) {
        out.eigenvalues[m] = a[order[m]][order[m]];
        std::vector<double>& col = out.eigenvectors[m];
        std::size_t peak = 0;
        for (std::size_t k = 0; k < n; ++k) {
            col[k] = v[k][order[m]];
            if (std::fabs(col[k]) > std::fabs(col[peak])) peak = k;
        }
        if (col[peak] < 0.0)
            for (double& x : col) x = -x;
    }
    return out;
}

/**
 * Levinson-Durbin solve of the Yule-Walker system for autocovariances
 * r[0..p]: returns the p autoregressive coefficients, lag 1 first. The
 * prediction-error variance must stay positive at every order, which holds
 * for autocovariances of a non-degenerate series with the biased estimator.
 */
inline std::vector<double> levinson_durbin(const std::vector<double>& r) {
    if (r.empty() || !(r[0] > 0.0))
        throw std::domain_error("levinson_durbin: zero-lag autocovariance must be positive");
    const std::size_t p = r.size() - 1;
    std::vector<double> phi(p, 0.0), prev(p, 0.0);
    double error = r[0];
    for (std::size_t k = 1; k <= p; ++k) {
        double acc = r[k];
        for (std::size_t j = 1; j < k; ++j) acc -= prev[j - 1] * r[k - j];
        double reflect = acc / error;
        if (!std::isfinite(reflect) || std::fabs(reflect) >= 1.0)
            throw std::domain_error("levinson_durbin: prediction error degenerated");
        phi[k - 1] = reflect;
        for (std::size_t j = 1; j < k; ++j)
            phi[j - 1] = prev[j - 1] - reflect * prev[k - 1 - j];
        error *= 1.0 - reflect * reflect;
        prev = phi;
    }
    return phi;
}

}  // namespace loglap
