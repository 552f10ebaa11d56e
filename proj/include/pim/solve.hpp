#pragma once

#include "pim/assembly.hpp"
#include "pim/linear_solvers.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <string>
#include <vector>

namespace pim {

enum class SolverMethod { cg, gmres, dense_lu };

inline std::string to_string(SolverMethod m) {
    switch (m) {
    case SolverMethod::cg: return "cg";
    case SolverMethod::gmres: return "gmres";
    case SolverMethod::dense_lu: return "dense_lu";
    }
    return "unknown";
}

enum class LinearSolverChoice { automatic, iterative, dense };

struct SolverOptions {
    double tol = 1e-9;
    int max_iter = 0; // 0 means 10n
    int restart = 50;
    LinearSolverChoice choice = LinearSolverChoice::automatic;
    Index dense_threshold = 3000;
};

struct SolveReport {
    Vector u;
    int iterations = 0;
    double relative_residual = 0.0;
    SolverMethod method = SolverMethod::cg;
    bool mean_constraint_active = false;
    double compatibility = 0.0; // Neumann multiplier μ
};

struct EigenResult {
    Vector eigenvalues;         // ascending (real parts)
    Eigen::MatrixXd eigenvectors; // columns, Σ v_i² V_i = 1
    double max_imag_part = 0.0;
};

struct AlmState {
    Vector w;
    double beta = 1.0;
    std::vector<double> boundary_residual_history;
};

struct AlmResult {
    SolveReport report;
    AlmState state;
};

namespace detail {

inline void check_length(const Vector& v, Index n, const char* what) {
    if (v.size() != n)
        throw ConfigError(std::string(what) + " has length " + std::to_string(v.size()) + ", expected " +
                          std::to_string(n));
}

inline void reject_isolated(const PimSystem& sys) {
    if (!sys.isolated.empty())
        throw NumericalError(std::to_string(sys.isolated.size()) + " isolated points (first: " +
                             std::to_string(sys.isolated.front()) +
                             ") have no kernel neighbors; increase t or the sampling density");
}

inline int iteration_cap(const SolverOptions& o, Index n) {
    return o.max_iter > 0 ? o.max_iter : static_cast<int>(std::min<long>(10L * n, 1L << 30));
}

/// D_V M with its rounding asymmetry removed.
inline SparseMatrix weighted_symmetric(const SparseMatrix& M, const Vector& V) {
    SparseMatrix A = V.asDiagonal() * M;
    SparseMatrix At = A.transpose();
    return 0.5 * (A + At);
}

inline Eigen::MatrixXd weighted_symmetric_dense(const SparseMatrix& M, const Vector& V) {
    Eigen::MatrixXd A = V.asDiagonal() * Eigen::MatrixXd(M);
    return 0.5 * (A + A.transpose());
}

/// Σ v² V = 1 and the first entry of largest magnitude positive.
inline void normalize_columns(Eigen::MatrixXd& X, const Vector& V) {
    for (Index c = 0; c < X.cols(); ++c) {
        const double nrm = std::sqrt((X.col(c).array().square() * V.array()).sum());
        if (nrm > 0.0) X.col(c) /= nrm;
        Index at = 0;
        X.col(c).cwiseAbs().maxCoeff(&at);
        if (X(at, c) < 0.0) X.col(c) *= -1.0;
    }
}

/// Eigenpairs of the symmetric-definite pencil A x = λ B x by Cholesky
/// reduction; returns false when B is not positive definite.
inline bool symmetric_pencil(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, Vector& values,
                             Eigen::MatrixXd& vectors) {
    const Eigen::LLT<Eigen::MatrixXd> llt(B);
    if (llt.info() != Eigen::Success) return false;
    Eigen::MatrixXd C = llt.matrixL().solve(A);
    C = llt.matrixL().solve(C.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (C + C.transpose()));
    if (es.info() != Eigen::Success) return false;
    values = es.eigenvalues();
    vectors = llt.matrixU().solve(es.eigenvectors());
    return true;
}

inline void require_dense_size(Index n, Index threshold) {
    if (n > threshold)
        throw ConfigError("dense eigen solve limited to n <= " + std::to_string(threshold) + " points (got " +
                          std::to_string(n) + "); subsample the cloud or raise the threshold");
}

} // namespace detail

// ---- Neumann --------------------------------------------------------------

/// Solves L u = 2Bg + If as the bordered system [D_V L, V; Vᵀ, 0][u; μ] =
/// [D_V b; 0]. Eliminating μ = Σ V_i b_i / Σ V_i leaves a consistent
/// positive semidefinite system for CG; the result is shifted to V-mean zero.
inline SolveReport poisson_neumann(const PimSystem& sys, const Vector& f, const Vector& g,
                                   const SolverOptions& opt = {}) {
    const Index n = sys.n();
    detail::check_length(f, n, "f");
    detail::check_length(g, sys.m(), "g");
    detail::reject_isolated(sys);

    const Vector b = sys.I_mat * f + 2.0 * (sys.B * g);
    const double vsum = sys.V.sum();
    SolveReport rep;
    rep.mean_constraint_active = true;
    rep.compatibility = sys.V.dot(b) / vsum;

    const bool dense = opt.choice == LinearSolverChoice::dense;
    if (dense) {
        if (n > opt.dense_threshold) throw ConfigError("dense Neumann solve limited to the dense threshold");
        Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n + 1, n + 1);
        K.topLeftCorner(n, n) = detail::weighted_symmetric_dense(sys.L, sys.V);
        K.block(0, n, n, 1) = sys.V;
        K.block(n, 0, 1, n) = sys.V.transpose();
        Vector rhs(n + 1);
        rhs.head(n) = sys.V.cwiseProduct(b);
        rhs[n] = 0.0;
        const Vector sol = K.partialPivLu().solve(rhs);
        rep.u = sol.head(n);
        rep.compatibility = sol[n];
        rep.method = SolverMethod::dense_lu;
        rep.relative_residual = rhs.norm() > 0.0 ? (K * sol - rhs).norm() / rhs.norm() : 0.0;
    } else {
        const SparseMatrix A = detail::weighted_symmetric(sys.L, sys.V);
        const Vector rhs = (sys.V.array() * (b.array() - rep.compatibility)).matrix();
        const Vector diag = A.diagonal();
        auto apply = [&](const Vector& x, Vector& y) { y.noalias() = A * x; };
        auto res = pcg(apply, rhs, diag, opt.tol, detail::iteration_cap(opt, n));
        if (!res.converged)
            throw NumericalError("CG did not converge for the Neumann system after " + std::to_string(res.iterations) +
                                 " iterations (relative residual " + std::to_string(res.relative_residual) + ")");
        rep.u = std::move(res.x);
        rep.iterations = res.iterations;
        rep.relative_residual = res.relative_residual;
        rep.method = SolverMethod::cg;
    }
    rep.u.array() -= sys.V.dot(rep.u) / vsum;
    return rep;
}

// ---- Dirichlet (Robin penalty) ---------------------------------------------

/// K = L with (2/β)B added into the columns indexed by S.
inline SparseMatrix robin_matrix(const PimSystem& sys, double beta) {
    require(beta > 0.0 && std::isfinite(beta), "beta must be positive");
    require(sys.m() > 0, "Dirichlet problems need boundary points");
    const Index n = sys.n();
    std::vector<Eigen::Triplet<double, Index>> trip;
    trip.reserve(static_cast<std::size_t>(sys.L.nonZeros() + sys.B.nonZeros()));
    for (Index i = 0; i < n; ++i)
        for (SparseMatrix::InnerIterator it(sys.L, i); it; ++it) trip.emplace_back(i, it.col(), it.value());
    const double scale = 2.0 / beta;
    for (Index i = 0; i < n; ++i)
        for (SparseMatrix::InnerIterator it(sys.B, i); it; ++it)
            trip.emplace_back(i, sys.boundary_idx[static_cast<std::size_t>(it.col())], scale * it.value());
    SparseMatrix K(n, n);
    K.setFromTriplets(trip.begin(), trip.end());
    return K;
}

/// If + 2B(g/β + w); with w = 0 this is the Robin right-hand side If + (2/β)Bg.
inline Vector robin_rhs(const PimSystem& sys, const Vector& f, const Vector& g, double beta, const Vector& w) {
    const Vector load = g / beta + w;
    return sys.I_mat * f + 2.0 * (sys.B * load);
}

namespace detail {

/// Solves K u = b by GMRES, falling back to dense LU for small systems.
class RobinSolver {
public:
    RobinSolver(SparseMatrix K, const SolverOptions& opt) : K_(std::move(K)), opt_(opt) {
        diag_ = K_.diagonal();
        const Index n = static_cast<Index>(K_.rows());
        if (opt_.choice == LinearSolverChoice::dense) {
            if (n > opt_.dense_threshold) throw ConfigError("dense solve limited to the dense threshold");
            factor();
        }
    }

    SolveReport solve(const Vector& b, const Vector* x0 = nullptr) {
        SolveReport rep;
        const Index n = static_cast<Index>(K_.rows());
        if (!lu_) {
            auto apply = [&](const Vector& x, Vector& y) { y.noalias() = K_ * x; };
            auto res = gmres(apply, b, diag_, opt_.tol, detail::iteration_cap(opt_, n), opt_.restart, x0);
            if (res.converged) {
                rep.u = std::move(res.x);
                rep.iterations = res.iterations;
                rep.relative_residual = res.relative_residual;
                rep.method = SolverMethod::gmres;
                return rep;
            }
            if (opt_.choice == LinearSolverChoice::iterative || n > opt_.dense_threshold)
                throw NumericalError("GMRES did not converge after " + std::to_string(res.iterations) +
                                     " iterations (relative residual " + std::to_string(res.relative_residual) + ")");
            factor();
        }
        rep.u = scale_.cwiseProduct(lu_->solve(b));
        rep.u += scale_.cwiseProduct(lu_->solve(b - K_ * rep.u)); // one refinement step
        rep.method = SolverMethod::dense_lu;
        const double bn = b.norm();
        rep.relative_residual = bn > 0.0 ? (K_ * rep.u - b).norm() / bn : 0.0;
        return rep;
    }

    const SparseMatrix& matrix() const { return K_; }

private:
    // Columns scaled by 1/diag(K): the penalty columns are ~1/β larger than the rest.
    void factor() {
        scale_ = diag_.cwiseInverse();
        lu_.emplace(Eigen::MatrixXd(K_) * scale_.asDiagonal());
    }

    SparseMatrix K_;
    SolverOptions opt_;
    Vector diag_;
    Vector scale_;
    std::optional<Eigen::PartialPivLU<Eigen::MatrixXd>> lu_;
};

} // namespace detail

/// Robin approximation of the Dirichlet problem: K u = If + (2/β)Bg.
inline SolveReport poisson_dirichlet(const PimSystem& sys, const Vector& f, const Vector& g, double beta = 1e-4,
                                     const SolverOptions& opt = {}) {
    require(beta > 0.0 && std::isfinite(beta), "beta must be positive");
    require(sys.m() > 0, "Dirichlet problems need boundary points");
    detail::check_length(f, sys.n(), "f");
    detail::check_length(g, sys.m(), "g");
    detail::reject_isolated(sys);
    detail::RobinSolver solver(robin_matrix(sys, beta), opt);
    return solver.solve(robin_rhs(sys, f, g, beta, Vector::Zero(sys.m())));
}

/// ‖x‖_A = sqrt(Σ A_j x_j²).
inline double boundary_norm(const PimSystem& sys, const Vector& x) {
    return std::sqrt((x.array().square() * sys.A.array()).sum());
}

/// Augmented Lagrangian iteration on a sequence of Robin problems with a
/// fixed β. Stops on ‖g − u|_S‖_A ≤ tol·‖g‖_A or after max_iter solves.
inline AlmResult alm_dirichlet(const PimSystem& sys, const Vector& f, const Vector& g, double beta = 1.0,
                               int max_iter = 100, double tol = 1e-8, const SolverOptions& opt = {},
                               const Vector* w0 = nullptr) {
    require(beta > 0.0 && std::isfinite(beta), "beta must be positive");
    require(max_iter >= 1, "max_iter must be >= 1");
    require(tol >= 0.0, "tol must be nonnegative");
    require(sys.m() > 0, "Dirichlet problems need boundary points");
    detail::check_length(f, sys.n(), "f");
    detail::check_length(g, sys.m(), "g");
    detail::reject_isolated(sys);

    AlmResult out;
    out.state.beta = beta;
    out.state.w = w0 ? *w0 : Vector::Zero(sys.m());
    detail::check_length(out.state.w, sys.m(), "w");
    const double gnorm = boundary_norm(sys, g);
    const double scale = gnorm > 0.0 ? gnorm : 1.0;

    detail::RobinSolver solver(robin_matrix(sys, beta), opt);
    double best = std::numeric_limits<double>::infinity();
    int total_iters = 0;
    Vector u_prev;
    for (int k = 0; k < max_iter; ++k) {
        const Vector b = robin_rhs(sys, f, g, beta, out.state.w);
        SolveReport rep = solver.solve(b, k > 0 ? &u_prev : nullptr);
        total_iters += rep.iterations;
        Vector us(sys.m());
        for (Index j = 0; j < sys.m(); ++j) us[j] = rep.u[sys.boundary_idx[static_cast<std::size_t>(j)]];
        const Vector gap = g - us;
        const double resid = boundary_norm(sys, gap) / scale;
        out.state.boundary_residual_history.push_back(resid);
        out.state.w += gap / beta;
        best = std::min(best, resid);
        u_prev = rep.u;
        out.report = std::move(rep);
        if (resid > 10.0 * best && best > 0.0)
            throw NumericalError("ALM diverged at iteration " + std::to_string(k + 1) + " with beta = " +
                                 std::to_string(beta) + " (boundary residual " + std::to_string(resid) +
                                 " vs minimum " + std::to_string(best) + "); increase beta");
        if (resid <= tol) break;
    }
    out.report.iterations = total_iters;
    return out;
}

// ---- Eigenproblems --------------------------------------------------------

struct EigenOptions {
    Index dense_threshold = 4000;
};

/// Smallest `count` eigenpairs of L v = γ I v through the symmetric-definite
/// pencil (D_V L, D_V I).
inline EigenResult eigen_neumann(const PimSystem& sys, int count, const EigenOptions& opt = {}) {
    const Index n = sys.n();
    require(count >= 1 && count <= n, "eigen count must be in [1, n]");
    detail::require_dense_size(n, opt.dense_threshold);
    detail::reject_isolated(sys);

    Eigen::MatrixXd A = detail::weighted_symmetric_dense(sys.L, sys.V);
    Eigen::MatrixXd Bm = detail::weighted_symmetric_dense(sys.I_mat, sys.V);
    Vector values;
    Eigen::MatrixXd vectors;
    if (!detail::symmetric_pencil(A, Bm, values, vectors))
        throw NumericalError("the weighted I matrix is not positive definite; use the gaussian kernel or a finer cloud");

    EigenResult out;
    out.eigenvalues = values.head(count);
    out.eigenvectors = vectors.leftCols(count);
    detail::normalize_columns(out.eigenvectors, sys.V);
    return out;
}

/// Smallest-magnitude `count` eigenpairs of K v = γ I v, ordered by real part.
/// I is only semidefinite in floating point for wide kernels, so the pencil is
/// reduced through K instead: K⁻¹ I v = μ v with γ = 1/μ.
inline EigenResult eigen_dirichlet(const PimSystem& sys, double beta, int count, const EigenOptions& opt = {}) {
    const Index n = sys.n();
    require(count >= 1 && count <= n, "eigen count must be in [1, n]");
    detail::require_dense_size(n, opt.dense_threshold);
    detail::reject_isolated(sys);

    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(Eigen::MatrixXd(robin_matrix(sys, beta)));
    const Eigen::MatrixXd C = lu.solve(Eigen::MatrixXd(sys.I_mat));
    Eigen::EigenSolver<Eigen::MatrixXd> es(C, true);
    if (es.info() != Eigen::Success) throw NumericalError("nonsymmetric eigensolver failed to converge");
    const Eigen::VectorXcd mu = es.eigenvalues();
    std::vector<Index> order(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return std::abs(mu[a]) > std::abs(mu[b]); });
    order.resize(static_cast<std::size_t>(count));
    if (std::abs(mu[order.back()]) == 0.0) throw NumericalError("Dirichlet pencil is singular");
    std::stable_sort(order.begin(), order.end(),
                     [&](Index a, Index b) { return (1.0 / mu[a]).real() < (1.0 / mu[b]).real(); });

    EigenResult out;
    out.eigenvalues.resize(count);
    out.eigenvectors.resize(n, count);
    const Eigen::MatrixXcd vecs = es.eigenvectors();
    for (int c = 0; c < count; ++c) {
        const Index k = order[static_cast<std::size_t>(c)];
        const std::complex<double> gamma = 1.0 / mu[k];
        out.eigenvalues[c] = gamma.real();
        out.max_imag_part = std::max(out.max_imag_part, std::abs(gamma.imag()));
        out.eigenvectors.col(c) = vecs.col(k).real();
    }
    const double scale = out.eigenvalues.cwiseAbs().maxCoeff();
    if (out.max_imag_part > 1e-8 * scale)
        throw NumericalError("Dirichlet pencil has eigenvalues with imaginary part " +
                             std::to_string(out.max_imag_part) + " (> 1e-8 of the spectral scale " +
                             std::to_string(scale) + ")");
    detail::normalize_columns(out.eigenvectors, sys.V);
    return out;
}

// ---- Diagnostics ----------------------------------------------------------

/// ‖L u − 2Bg − If‖ in the V-weighted L2 norm.
inline double neumann_residual(const PimSystem& sys, const Vector& u, const Vector& f, const Vector& g) {
    detail::check_length(u, sys.n(), "u");
    detail::check_length(f, sys.n(), "f");
    detail::check_length(g, sys.m(), "g");
    const Vector r = sys.L * u - 2.0 * (sys.B * g) - sys.I_mat * f;
    return std::sqrt((r.array().square() * sys.V.array()).sum());
}

} // namespace pim
