#pragma once

#include "pim/common.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <cmath>
#include <vector>

namespace pim {

struct IterativeResult {
    Vector x;
    int iterations = 0;
    double relative_residual = 0.0;
    bool converged = false;
};

/// Jacobi-preconditioned conjugate gradients for a symmetric positive
/// (semi)definite operator. `apply(x, y)` computes y = A x.
template <class Apply>
IterativeResult pcg(Apply&& apply, const Vector& b, const Vector& diag, double tol, int max_iter,
                    const Vector* x0 = nullptr) {
    const Index n = static_cast<Index>(b.size());
    IterativeResult res;
    res.x = x0 ? *x0 : Vector::Zero(n);
    const double bnorm = b.norm();
    if (bnorm == 0.0) {
        res.x.setZero();
        res.converged = true;
        return res;
    }
    Vector inv_d(n);
    for (Index i = 0; i < n; ++i) inv_d[i] = diag[i] > 0.0 ? 1.0 / diag[i] : 1.0;

    Vector r(n), Ap(n);
    apply(res.x, Ap);
    r = b - Ap;
    Vector z = inv_d.cwiseProduct(r);
    Vector p = z;
    double rz = r.dot(z);
    res.relative_residual = r.norm() / bnorm;
    while (res.relative_residual > tol && res.iterations < max_iter) {
        apply(p, Ap);
        const double pAp = p.dot(Ap);
        if (!(pAp > 0.0)) break;
        const double alpha = rz / pAp;
        res.x += alpha * p;
        r -= alpha * Ap;
        ++res.iterations;
        res.relative_residual = r.norm() / bnorm;
        z = inv_d.cwiseProduct(r);
        const double rz_next = r.dot(z);
        p = z + (rz_next / rz) * p;
        rz = rz_next;
    }
    // Guard against drift of the recursive residual.
    apply(res.x, Ap);
    res.relative_residual = (b - Ap).norm() / bnorm;
    res.converged = res.relative_residual <= tol;
    return res;
}

/// Restarted GMRES with right Jacobi preconditioning, so the monitored
/// residual is the true residual of the unpreconditioned system.
template <class Apply>
IterativeResult gmres(Apply&& apply, const Vector& b, const Vector& diag, double tol, int max_iter,
                      int restart = 50, const Vector* x0 = nullptr) {
    const Index n = static_cast<Index>(b.size());
    IterativeResult res;
    res.x = x0 ? *x0 : Vector::Zero(n);
    const double bnorm = b.norm();
    if (bnorm == 0.0) {
        res.x.setZero();
        res.converged = true;
        return res;
    }
    Vector inv_d(n);
    for (Index i = 0; i < n; ++i) inv_d[i] = diag[i] != 0.0 ? 1.0 / diag[i] : 1.0;

    const int m = std::max(1, std::min<int>(restart, static_cast<int>(n)));
    Eigen::MatrixXd Q(n, m + 1);
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(m + 1, m);
    Vector cs(m), sn(m), s(m + 1), w(n), Ax(n);

    apply(res.x, Ax);
    Vector r = b - Ax;
    double beta = r.norm();
    res.relative_residual = beta / bnorm;
    while (res.relative_residual > tol && res.iterations < max_iter) {
        Q.col(0) = r / beta;
        s.setZero();
        s[0] = beta;
        H.setZero();
        int j = 0;
        for (; j < m && res.iterations < max_iter; ++j) {
            apply(inv_d.cwiseProduct(Q.col(j)), w);
            for (int i = 0; i <= j; ++i) {
                H(i, j) = w.dot(Q.col(i));
                w -= H(i, j) * Q.col(i);
            }
            H(j + 1, j) = w.norm();
            if (H(j + 1, j) > 0.0) Q.col(j + 1) = w / H(j + 1, j);
            for (int i = 0; i < j; ++i) {
                const double tmp = cs[i] * H(i, j) + sn[i] * H(i + 1, j);
                H(i + 1, j) = -sn[i] * H(i, j) + cs[i] * H(i + 1, j);
                H(i, j) = tmp;
            }
            const double rho = std::hypot(H(j, j), H(j + 1, j));
            cs[j] = H(j, j) / rho;
            sn[j] = H(j + 1, j) / rho;
            H(j, j) = rho;
            H(j + 1, j) = 0.0;
            s[j + 1] = -sn[j] * s[j];
            s[j] = cs[j] * s[j];
            ++res.iterations;
            if (std::abs(s[j + 1]) / bnorm <= tol) {
                ++j;
                break;
            }
        }
        const Vector y = H.topLeftCorner(j, j).triangularView<Eigen::Upper>().solve(s.head(j));
        res.x += inv_d.cwiseProduct(Q.leftCols(j) * y);
        apply(res.x, Ax);
        r = b - Ax;
        beta = r.norm();
        const double prev = res.relative_residual;
        res.relative_residual = beta / bnorm;
        if (beta == 0.0 || (j == 0 && res.relative_residual >= prev)) break;
    }
    res.converged = res.relative_residual <= tol;
    return res;
}

} // namespace pim
