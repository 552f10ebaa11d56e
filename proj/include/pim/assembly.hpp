#pragma once

#include "pim/geometry.hpp"
#include "pim/kernel.hpp"
#include "pim/spatial_index.hpp"

#include <Eigen/SparseCore>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

namespace pim {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, Index>;

/// Discrete operators of one weighted cloud under one kernel. Keeps copies of
/// the weights and boundary indices the solvers need.
struct PimSystem {
    SparseMatrix L;     // n x n
    SparseMatrix I_mat; // n x n
    SparseMatrix B;     // n x m
    KernelSpec spec;
    double support_radius = 0.0;
    Vector V;
    Vector A;
    std::vector<Index> boundary_idx;
    std::vector<Index> isolated; // rows with no neighbor inside the support
    std::vector<std::string> warnings;

    Index n() const { return static_cast<Index>(V.size()); }
    Index m() const { return static_cast<Index>(boundary_idx.size()); }
};

namespace detail {

using Row = std::vector<std::pair<Index, double>>;

inline SparseMatrix rows_to_csr(Index rows, Index cols, const std::vector<Row>& data) {
    SparseMatrix M(rows, cols);
    std::size_t nnz = 0;
    for (const auto& r : data) nnz += r.size();
    M.resizeNonZeros(static_cast<Index>(nnz));
    Index at = 0;
    M.outerIndexPtr()[0] = 0;
    for (Index i = 0; i < rows; ++i) {
        for (const auto& [j, v] : data[static_cast<std::size_t>(i)]) {
            M.innerIndexPtr()[at] = j;
            M.valuePtr()[at] = v;
            ++at;
        }
        M.outerIndexPtr()[i + 1] = at;
    }
    return M;
}

} // namespace detail

/// Builds L, I and B with a uniform-grid neighbor search. Every row is
/// produced in ascending column order, so sums are order-deterministic.
inline PimSystem assemble(const PointCloudDomain& cloud, const KernelSpec& spec) {
    spec.validate();
    validate(cloud);
    if (!cloud.has_weights()) throw ConfigError("weights required: estimate or load V (and A) before assembly");

    PimSystem sys;
    sys.spec = spec;
    sys.support_radius = spec.support_radius();
    sys.V = *cloud.volume_weights;
    sys.A = cloud.boundary_weights ? *cloud.boundary_weights : Vector(0);
    sys.boundary_idx = cloud.boundary_idx;

    const Index n = cloud.size();
    const Index m = cloud.boundary_size();
    const auto& P = cloud.points;
    std::vector<Point> S;
    for (Index s : cloud.boundary_idx) S.push_back(P[static_cast<std::size_t>(s)]);

    const double radius = sys.support_radius;
    GridIndex grid(P, radius);
    std::optional<GridIndex> bgrid;
    if (m > 0) bgrid.emplace(S, radius);

    std::vector<detail::Row> Lr(static_cast<std::size_t>(n)), Ir(static_cast<std::size_t>(n)),
        Br(static_cast<std::size_t>(n));
    const double inv_t = 1.0 / spec.t;
    const Vector& V = sys.V;

#pragma omp parallel for schedule(dynamic, 64)
    for (Index i = 0; i < n; ++i) {
        const Point& p = P[static_cast<std::size_t>(i)];
        auto& lrow = Lr[static_cast<std::size_t>(i)];
        auto& irow = Ir[static_cast<std::size_t>(i)];
        const auto nbr = grid.radius_query(p, radius);
        lrow.reserve(nbr.size());
        irow.reserve(nbr.size());
        double diag = 0.0;
        std::size_t diag_at = 0;
        for (Index j : nbr) {
            const double r = scaled_argument(spec, p, P[static_cast<std::size_t>(j)]);
            const double rb = spec.c_t * kernel_Rbar(spec, r);
            if (rb > 0.0) irow.emplace_back(j, rb * V[j]);
            if (j == i) {
                diag_at = lrow.size();
                lrow.emplace_back(i, 0.0);
                continue;
            }
            const double rv = spec.c_t * kernel_R(spec, r);
            if (rv > 0.0) {
                const double lij = -inv_t * rv * V[j];
                lrow.emplace_back(j, lij);
                diag -= lij;
            }
        }
        lrow[diag_at].second = diag;
        if (m > 0) {
            auto& brow = Br[static_cast<std::size_t>(i)];
            for (Index j : bgrid->radius_query(p, radius)) {
                const double r = scaled_argument(spec, p, S[static_cast<std::size_t>(j)]);
                const double rb = spec.c_t * kernel_Rbar(spec, r);
                if (rb > 0.0) brow.emplace_back(j, rb * sys.A[j]);
            }
        }
    }

    for (Index i = 0; i < n; ++i)
        if (Lr[static_cast<std::size_t>(i)].size() == 1) sys.isolated.push_back(i);
    if (n > 1 && static_cast<Index>(sys.isolated.size()) == n)
        sys.warnings.push_back("kernel support under-resolved: support radius is below the minimum point spacing");
    else if (!sys.isolated.empty())
        sys.warnings.push_back(std::to_string(sys.isolated.size()) + " isolated points have no kernel neighbors");

    sys.L = detail::rows_to_csr(n, n, Lr);
    sys.I_mat = detail::rows_to_csr(n, n, Ir);
    sys.B = detail::rows_to_csr(n, m, Br);
    return sys;
}

namespace detail {
inline Vector checked_apply(const SparseMatrix& M, const Vector& u, const char* name) {
    if (u.size() != M.cols())
        throw ConfigError(std::string("dimension mismatch applying ") + name + ": expected " +
                          std::to_string(M.cols()) + ", got " + std::to_string(u.size()));
    return M * u;
}
} // namespace detail

inline Vector apply_L(const PimSystem& s, const Vector& u) { return detail::checked_apply(s.L, u, "L"); }
inline Vector apply_I(const PimSystem& s, const Vector& u) { return detail::checked_apply(s.I_mat, u, "I"); }
inline Vector apply_B(const PimSystem& s, const Vector& g) { return detail::checked_apply(s.B, g, "B"); }

/// MatrixMarket coordinate (real general) with 1-based indices.
inline void write_matrix_market(const SparseMatrix& M, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    out << "%%MatrixMarket matrix coordinate real general\n";
    out << M.rows() << ' ' << M.cols() << ' ' << M.nonZeros() << '\n';
    char buf[64];
    for (Index i = 0; i < M.outerSize(); ++i)
        for (SparseMatrix::InnerIterator it(M, i); it; ++it) {
            std::snprintf(buf, sizeof buf, "%ld %ld %.17g\n", static_cast<long>(i + 1), static_cast<long>(it.col() + 1), it.value());
            out << buf;
        }
}

/// Writes L.mtx, I.mtx and B.mtx into `dir`, creating it if needed.
inline void dump_matrices(const PimSystem& s, const std::string& dir) {
    std::filesystem::create_directories(dir);
    write_matrix_market(s.L, dir + "/L.mtx");
    write_matrix_market(s.I_mat, dir + "/I.mtx");
    write_matrix_market(s.B, dir + "/B.mtx");
}

} // namespace pim
