#pragma once

#include "pim/geometry.hpp"
#include "pim/solve.hpp"
#include "pim/weights.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace pim {

// ---- Analytic radial solution ----------------------------------------------

/// u = cos 2πr on the unit disk (k=2) or ball (k=3), with f = −Δu.
struct RadialTruth {
    int k = 2;

    static constexpr double two_pi = 2.0 * std::numbers::pi;

    static double radius(const Point& p) { return p.norm(); }

    double u(const Point& p) const { return std::cos(two_pi * radius(p)); }

    /// sin(2πr)/r, by its Taylor series near the origin.
    static double sinc_term(double r) {
        const double x = two_pi * r;
        if (r < 1e-2) {
            const double x2 = x * x;
            return two_pi * (1.0 - x2 / 6.0 * (1.0 - x2 / 20.0 * (1.0 - x2 / 42.0 * (1.0 - x2 / 72.0))));
        }
        return std::sin(x) / r;
    }

    double f(const Point& p) const {
        const double r = radius(p);
        return two_pi * two_pi * std::cos(two_pi * r) + two_pi * (k - 1) * sinc_term(r);
    }

    Point grad(const Point& p) const {
        const double r = radius(p);
        if (r == 0.0) return Point::Zero();
        return (-two_pi * std::sin(two_pi * r) / r) * p;
    }

    /// ∂u/∂n on the unit sphere/circle: −2π sin 2π = 0.
    static double neumann_g() { return 0.0; }
    /// u on the unit sphere/circle: cos 2π = 1.
    static double dirichlet_g() { return 1.0; }

    Vector sample_u(const std::vector<Point>& pts) const {
        Vector out(static_cast<Index>(pts.size()));
        for (std::size_t i = 0; i < pts.size(); ++i) out[static_cast<Index>(i)] = u(pts[i]);
        return out;
    }
    Vector sample_f(const std::vector<Point>& pts) const {
        Vector out(static_cast<Index>(pts.size()));
        for (std::size_t i = 0; i < pts.size(); ++i) out[static_cast<Index>(i)] = f(pts[i]);
        return out;
    }
};

// ---- Bessel zeros and disk spectra -----------------------------------------

enum class BesselKind { J, Jprime };

inline double bessel_j(int n, double x) { return std::cyl_bessel_j(static_cast<double>(n), x); }

inline double bessel_j_prime(int n, double x) {
    if (n == 0) return -bessel_j(1, x);
    return 0.5 * (bessel_j(n - 1, x) - bessel_j(n + 1, x));
}

/// m-th positive zero of J_n or J_n' by sign-change bracketing and bisection.
inline double bessel_zero(int n, int m, BesselKind kind) {
    require(n >= 0 && n <= 20, "bessel order must be in [0, 20]");
    require(m >= 1 && m <= 20, "zero index must be in [1, 20]");
    auto F = [&](double x) { return kind == BesselKind::J ? bessel_j(n, x) : bessel_j_prime(n, x); };
    const double step = 0.05;
    double a = 1e-3;
    double fa = F(a);
    int found = 0;
    for (;;) {
        const double b = a + step;
        const double fb = F(b);
        if (fa == 0.0 || (fa < 0.0) != (fb < 0.0)) {
            if (++found == m) {
                double lo = a, hi = b, flo = fa;
                if (flo == 0.0) return lo;
                for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    const double fm = F(mid);
                    if (fm == 0.0) return mid;
                    if ((fm < 0.0) == (flo < 0.0)) {
                        lo = mid;
                        flo = fm;
                    } else {
                        hi = mid;
                    }
                }
                return 0.5 * (lo + hi);
            }
        }
        a = b;
        fa = fb;
    }
}

/// Ascending Laplacian eigenvalues of the unit disk; n ≥ 1 modes appear twice.
inline std::vector<double> disk_spectrum(BoundaryKind kind, int count) {
    std::vector<double> vals;
    if (kind == BoundaryKind::neumann) vals.push_back(0.0);
    const BesselKind bk = kind == BoundaryKind::dirichlet ? BesselKind::J : BesselKind::Jprime;
    for (int n = 0; n <= 20; ++n)
        for (int m = 1; m <= 20; ++m) {
            const double z = bessel_zero(n, m, bk);
            vals.push_back(z * z);
            if (n >= 1) vals.push_back(z * z);
        }
    std::sort(vals.begin(), vals.end());
    require(count >= 0 && static_cast<std::size_t>(count) <= 60, "disk spectrum available for the first 60 values");
    vals.resize(static_cast<std::size_t>(count));
    return vals;
}

// ---- P1 finite elements -----------------------------------------------------

struct FemSolution {
    Vector u;
    double compatibility = 0.0; // Neumann multiplier
};

struct FemMatrices {
    Eigen::SparseMatrix<double> K; // stiffness
    Eigen::SparseMatrix<double> M; // consistent mass
    Eigen::SparseMatrix<double> E; // boundary edge mass
};

/// Stiffness and consistent mass of linear triangles (planar or embedded in
/// 3-D), plus the 1-D mass on boundary edges.
inline FemMatrices fem_matrices(const SimplicialMesh& mesh) {
    require(mesh.intrinsic_dim == 2, "FEM oracle supports triangle meshes only");
    const Index n = mesh.num_vertices();
    std::vector<Eigen::Triplet<double>> kt, mt, et;
    for (std::size_t c = 0; c < mesh.cells.size(); ++c) {
        const auto& t = mesh.cells[c];
        Eigen::Matrix<double, 3, 2> J;
        J.col(0) = mesh.vertices[t[1]] - mesh.vertices[t[0]];
        J.col(1) = mesh.vertices[t[2]] - mesh.vertices[t[0]];
        const Eigen::Matrix2d JtJ = J.transpose() * J;
        const double det = JtJ.determinant();
        if (!(det > 0.0)) throw NumericalError("degenerate triangle " + std::to_string(c));
        const double area = 0.5 * std::sqrt(det);
        const Eigen::Matrix<double, 3, 2> G = J * JtJ.inverse();
        Eigen::Matrix3d grads;
        grads.col(1) = G.col(0);
        grads.col(2) = G.col(1);
        grads.col(0) = -G.col(0) - G.col(1);
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) {
                kt.emplace_back(t[a], t[b], area * grads.col(a).dot(grads.col(b)));
                mt.emplace_back(t[a], t[b], area / 12.0 * (a == b ? 2.0 : 1.0));
            }
    }
    for (const auto& e : mesh.boundary_cells) {
        const double len = (mesh.vertices[e[1]] - mesh.vertices[e[0]]).norm();
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) et.emplace_back(e[a], e[b], len / 6.0 * (a == b ? 2.0 : 1.0));
    }
    FemMatrices out;
    out.K.resize(n, n);
    out.M.resize(n, n);
    out.E.resize(n, n);
    out.K.setFromTriplets(kt.begin(), kt.end());
    out.M.setFromTriplets(mt.begin(), mt.end());
    out.E.setFromTriplets(et.begin(), et.end());
    return out;
}

namespace detail {

inline Eigen::SparseMatrix<double> select(const Eigen::SparseMatrix<double>& A, const std::vector<Index>& rows,
                                          const std::vector<Index>& cols) {
    std::vector<Index> cmap(static_cast<std::size_t>(A.cols()), -1);
    for (std::size_t j = 0; j < cols.size(); ++j) cmap[static_cast<std::size_t>(cols[j])] = static_cast<Index>(j);
    std::vector<Index> rmap(static_cast<std::size_t>(A.rows()), -1);
    for (std::size_t i = 0; i < rows.size(); ++i) rmap[static_cast<std::size_t>(rows[i])] = static_cast<Index>(i);
    std::vector<Eigen::Triplet<double>> t;
    for (int k = 0; k < A.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(A, k); it; ++it) {
            const Index r = rmap[static_cast<std::size_t>(it.row())];
            const Index c = cmap[static_cast<std::size_t>(it.col())];
            if (r >= 0 && c >= 0) t.emplace_back(r, c, it.value());
        }
    Eigen::SparseMatrix<double> out(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
    out.setFromTriplets(t.begin(), t.end());
    return out;
}

inline std::vector<Index> complement(Index n, const std::vector<Index>& sorted_ids) {
    std::vector<Index> out;
    for (Index i = 0; i < n; ++i)
        if (!std::binary_search(sorted_ids.begin(), sorted_ids.end(), i)) out.push_back(i);
    return out;
}

} // namespace detail

/// P1 Galerkin solution with nodal data f (per vertex) and g (per boundary
/// vertex, ordered like boundary_vertices(mesh)). Dirichlet data is imposed by
/// elimination; Neumann uses the boundary edge load with the constraint
/// Σ (M1)_i u_i = 0 and reports the compatibility multiplier.
inline FemSolution fem_solve(const SimplicialMesh& mesh, BoundaryKind kind, const Vector& f, const Vector& g) {
    const Index n = mesh.num_vertices();
    const auto bnd = boundary_vertices(mesh);
    detail::check_length(f, n, "f");
    detail::check_length(g, static_cast<Index>(bnd.size()), "g");
    const auto fm = fem_matrices(mesh);
    Vector F = fm.M * f;
    FemSolution out;
    out.u = Vector::Zero(n);

    if (kind == BoundaryKind::dirichlet) {
        require(!bnd.empty(), "Dirichlet FEM needs a boundary");
        const auto inner = detail::complement(n, bnd);
        Vector gfull = Vector::Zero(n);
        for (std::size_t j = 0; j < bnd.size(); ++j) gfull[bnd[j]] = g[static_cast<Index>(j)];
        const Vector rhs_full = F - fm.K * gfull;
        Vector rhs(static_cast<Index>(inner.size()));
        for (std::size_t i = 0; i < inner.size(); ++i) rhs[static_cast<Index>(i)] = rhs_full[inner[i]];
        Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(detail::select(fm.K, inner, inner));
        if (ldlt.info() != Eigen::Success) throw NumericalError("FEM stiffness factorization failed");
        const Vector ui = ldlt.solve(rhs);
        out.u = gfull;
        for (std::size_t i = 0; i < inner.size(); ++i) out.u[inner[i]] = ui[static_cast<Index>(i)];
        return out;
    }

    Vector gfull = Vector::Zero(n);
    for (std::size_t j = 0; j < bnd.size(); ++j) gfull[bnd[j]] = g[static_cast<Index>(j)];
    const Vector rhs = F + fm.E * gfull;
    const Vector mvec = fm.M * Vector::Ones(n);
    out.compatibility = rhs.sum() / mvec.sum();
    const Vector consistent = rhs - out.compatibility * mvec;
    // Pin vertex 0; the dropped equation holds because the system is consistent.
    std::vector<Index> rest;
    for (Index i = 1; i < n; ++i) rest.push_back(i);
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(detail::select(fm.K, rest, rest));
    if (ldlt.info() != Eigen::Success) throw NumericalError("FEM stiffness factorization failed");
    const Vector ur = ldlt.solve(consistent.tail(n - 1));
    out.u.tail(n - 1) = ur;
    out.u.array() -= mvec.dot(out.u) / mvec.sum();
    return out;
}

/// Smallest `count` eigenpairs of the (stiffness, consistent mass) pencil;
/// Dirichlet restricts to interior vertices and pads eigenvectors with zeros.
inline EigenResult fem_eigen(const SimplicialMesh& mesh, BoundaryKind kind, int count) {
    const Index n = mesh.num_vertices();
    const auto fm = fem_matrices(mesh);
    std::vector<Index> free;
    if (kind == BoundaryKind::dirichlet) free = detail::complement(n, boundary_vertices(mesh));
    else
        for (Index i = 0; i < n; ++i) free.push_back(i);
    const Index nf = static_cast<Index>(free.size());
    require(count >= 1 && count <= nf, "eigen count must be in [1, free vertices]");
    require(nf <= 4000, "dense FEM eigen solve limited to 4000 free vertices");
    const Eigen::MatrixXd K = Eigen::MatrixXd(detail::select(fm.K, free, free));
    const Eigen::MatrixXd M = Eigen::MatrixXd(detail::select(fm.M, free, free));
    Vector values;
    Eigen::MatrixXd vectors;
    if (!detail::symmetric_pencil(K, M, values, vectors)) throw NumericalError("FEM generalized eigensolver failed");
    EigenResult out;
    out.eigenvalues = values.head(count);
    out.eigenvectors = Eigen::MatrixXd::Zero(n, count);
    for (Index i = 0; i < nf; ++i)
        out.eigenvectors.row(free[static_cast<std::size_t>(i)]) = vectors.row(i).head(count);
    detail::normalize_columns(out.eigenvectors, mesh_weights(mesh).V);
    return out;
}

// ---- Error metrics ----------------------------------------------------------

/// sqrt(Σ V d²) / sqrt(Σ V u_ref²), with d = u − u_ref optionally shifted by
/// its V-weighted mean.
inline double weighted_l2_error(const Vector& u, const Vector& u_ref, const Vector& V, bool adjust_constant) {
    detail::check_length(u_ref, static_cast<Index>(u.size()), "u_ref");
    detail::check_length(V, static_cast<Index>(u.size()), "V");
    Vector d = u - u_ref;
    if (adjust_constant) d.array() -= V.dot(d) / V.sum();
    const double ref = std::sqrt((u_ref.array().square() * V.array()).sum());
    if (!(ref > 0.0)) throw ConfigError("reference has zero norm");
    return std::sqrt((d.array().square() * V.array()).sum()) / ref;
}

enum class InnerProduct { euclidean, weighted };

namespace detail {
inline Eigen::MatrixXd orthonormal_basis(const Eigen::MatrixXd& X) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(X, Eigen::ComputeThinU);
    const auto& s = svd.singularValues();
    if (s.size() == 0 || !(s[s.size() - 1] > 1e-12 * s[0])) throw ConfigError("rank-deficient eigenspace basis");
    return svd.matrixU();
}
} // namespace detail

/// Largest principal angle between span(U) and span(W).
inline double eigenspace_angle(const Eigen::MatrixXd& U, const Eigen::MatrixXd& W,
                               InnerProduct inner = InnerProduct::euclidean, const Vector* V = nullptr) {
    require(U.rows() == W.rows(), "bases must have equal vector length");
    require(U.cols() >= 1 && W.cols() >= 1, "bases must be nonempty");
    Eigen::MatrixXd X = U, Y = W;
    if (inner == InnerProduct::weighted) {
        require(V != nullptr && V->size() == U.rows(), "weighted angle needs V");
        const Vector s = V->cwiseSqrt();
        X = s.asDiagonal() * X;
        Y = s.asDiagonal() * Y;
    }
    const Eigen::MatrixXd Qx = detail::orthonormal_basis(X);
    const Eigen::MatrixXd Qy = detail::orthonormal_basis(Y);
    if (Qx.cols() > Qy.cols()) return std::numbers::pi / 2.0;
    const Eigen::MatrixXd C = Qy.transpose() * Qx;
    const double cos_min = Eigen::JacobiSVD<Eigen::MatrixXd>(C).singularValues().minCoeff();
    const Eigen::MatrixXd R = Qx - Qy * C;
    const double sin_max = Eigen::JacobiSVD<Eigen::MatrixXd>(R).singularValues().maxCoeff();
    return std::atan2(sin_max, cos_min);
}

/// Greedy clusters of consecutive eigenvalues with |γ_{i+1} − γ_i| ≤ rel_tol·max(γ_i, 1).
inline std::vector<std::vector<Index>> merge_near_degenerate(const Vector& eigenvalues, double rel_tol = 0.02) {
    std::vector<std::vector<Index>> clusters;
    for (Index i = 0; i < eigenvalues.size(); ++i) {
        if (i > 0 && std::abs(eigenvalues[i] - eigenvalues[i - 1]) <= rel_tol * std::max(eigenvalues[i - 1], 1.0))
            clusters.back().push_back(i);
        else
            clusters.push_back({i});
    }
    return clusters;
}

} // namespace pim
