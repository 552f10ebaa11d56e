#pragma once

#include "pim/geometry.hpp"
#include "pim/spatial_index.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace pim {

struct MeshWeights {
    Vector V;                   // per vertex
    Vector A;                   // per boundary vertex, ordered like `boundary`
    std::vector<Index> boundary; // boundary_vertices(mesh)
};

/// Lumped simplex measures: each cell gives vol/(k+1) to its vertices, each
/// boundary facet gives vol/k to its vertices.
inline MeshWeights mesh_weights(const SimplicialMesh& mesh) {
    MeshWeights w;
    const int k = mesh.intrinsic_dim;
    w.V = Vector::Zero(mesh.num_vertices());
    for (std::size_t c = 0; c < mesh.cells.size(); ++c) {
        const double vol = cell_measure(mesh, c);
        if (!(vol > 0.0)) throw NumericalError("degenerate cell " + std::to_string(c) + " has zero measure");
        for (Index v : mesh.cell(c)) w.V[v] += vol / (k + 1);
    }
    w.boundary = boundary_vertices(mesh);
    w.A = Vector::Zero(static_cast<Index>(w.boundary.size()));
    for (std::size_t b = 0; b < mesh.boundary_cells.size(); ++b) {
        const double vol = boundary_cell_measure(mesh, b);
        if (!(vol > 0.0))
            throw NumericalError("degenerate boundary cell " + std::to_string(b) + " has zero measure");
        for (Index v : mesh.boundary_cell(b)) {
            const auto at = std::lower_bound(w.boundary.begin(), w.boundary.end(), v) - w.boundary.begin();
            w.A[at] += vol / k;
        }
    }
    return w;
}

/// Drops the connectivity; keeps vertices, boundary membership and mesh weights.
inline PointCloudDomain mesh_to_cloud(const SimplicialMesh& mesh) {
    auto w = mesh_weights(mesh);
    PointCloudDomain cloud;
    cloud.ambient_dim = mesh.ambient_dim;
    cloud.intrinsic_dim = mesh.intrinsic_dim;
    cloud.points = mesh.vertices;
    cloud.boundary_idx = std::move(w.boundary);
    cloud.volume_weights = std::move(w.V);
    cloud.boundary_weights = std::move(w.A);
    return cloud;
}

enum class TangentWeighting { uniform, gaussian };

struct WeightEstimateConfig {
    int nn_count = 0; // 0 picks the default for the intrinsic dimension
    TangentWeighting weighting = TangentWeighting::gaussian;
    double bandwidth_factor = 1.0; // gaussian bandwidth in units of δ
    bool boundary_clip = true;

    static int default_nn(int k) { return k == 1 ? 4 : k == 2 ? 10 : 15; }
    int resolved_nn(int k) const { return nn_count > 0 ? nn_count : default_nn(k); }
};

struct WeightEstimate {
    Vector V;
    Vector A;
    double delta = 0.0;
};

/// Mean over points of the mean distance to their nn nearest neighbors.
inline double compute_delta(const std::vector<Point>& points, int nn) {
    require(nn >= 1, "neighbor count must be positive");
    require(points.size() > static_cast<std::size_t>(nn), "need more points than neighbors");
    Point lo = points[0], hi = points[0];
    for (const auto& p : points) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    const double scale = std::max((hi - lo).maxCoeff(), 1e-300);
    GridIndex grid(points, scale / std::sqrt(static_cast<double>(points.size())));
    std::vector<double> local(points.size());
#pragma omp parallel for schedule(static)
    for (long i = 0; i < static_cast<long>(points.size()); ++i) {
        const auto nbr = grid.knn(points[i], static_cast<std::size_t>(nn), static_cast<Index>(i));
        double s = 0.0;
        for (const auto& [d, j] : nbr) s += d;
        local[i] = s / nn;
    }
    double sum = 0.0;
    for (double v : local) sum += v;
    return sum / static_cast<double>(points.size());
}

namespace detail {

using Vec2 = Eigen::Vector2d;
using Polygon = std::vector<Vec2>;

/// Keeps the part of a convex polygon with n·x <= c.
inline Polygon clip_halfplane(const Polygon& poly, const Vec2& n, double c) {
    Polygon out;
    const std::size_t m = poly.size();
    for (std::size_t i = 0; i < m; ++i) {
        const Vec2& a = poly[i];
        const Vec2& b = poly[(i + 1) % m];
        const double da = n.dot(a) - c;
        const double db = n.dot(b) - c;
        if (da <= 0.0) out.push_back(a);
        if ((da < 0.0 && db > 0.0) || (da > 0.0 && db < 0.0)) out.push_back(a + (b - a) * (da / (da - db)));
    }
    return out;
}

inline double polygon_area(const Polygon& poly) {
    double s = 0.0;
    for (std::size_t i = 0; i < poly.size(); ++i) {
        const Vec2& a = poly[i];
        const Vec2& b = poly[(i + 1) % poly.size()];
        s += a.x() * b.y() - a.y() * b.x();
    }
    return 0.5 * std::abs(s);
}

inline double cross2(const Vec2& o, const Vec2& a, const Vec2& b) {
    return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

/// Counter-clockwise convex hull (Andrew's monotone chain).
inline Polygon convex_hull(Polygon pts) {
    std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) {
        return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
    });
    if (pts.size() < 3) return pts;
    Polygon hull(2 * pts.size());
    std::size_t k = 0;
    for (const auto& p : pts) {
        while (k >= 2 && cross2(hull[k - 2], hull[k - 1], p) <= 0.0) --k;
        hull[k++] = p;
    }
    for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
        while (k >= lower && cross2(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    return hull;
}

/// Area of the Voronoi cell of the origin among `nbrs`, optionally clipped
/// to the convex hull of {0} ∪ nbrs. Unbounded cells are always clipped.
inline double voronoi_area(const Polygon& nbrs, bool clip) {
    double reach = 0.0;
    for (const auto& q : nbrs) reach = std::max(reach, q.norm());
    const double L = 4.0 * reach;
    Polygon cell{{-L, -L}, {L, -L}, {L, L}, {-L, L}};
    for (const auto& q : nbrs)
        if (q.squaredNorm() > 0.0) cell = clip_halfplane(cell, q, 0.5 * q.squaredNorm());
    bool unbounded = false;
    for (const auto& v : cell) unbounded = unbounded || v.cwiseAbs().maxCoeff() >= L * (1.0 - 1e-9);
    if (clip || unbounded) {
        Polygon all = nbrs;
        all.emplace_back(0.0, 0.0);
        const Polygon hull = convex_hull(all);
        for (std::size_t i = 0; i < hull.size() && !cell.empty(); ++i) {
            const Vec2& a = hull[i];
            const Vec2& b = hull[(i + 1) % hull.size()];
            const Vec2 n(b.y() - a.y(), a.x() - b.x());
            cell = clip_halfplane(cell, n, n.dot(a));
        }
    }
    return cell.size() < 3 ? 0.0 : polygon_area(cell);
}

/// Length of the 1-D Voronoi cell of 0 among the projected coordinates,
/// clipped to their hull on sides with no neighbor.
inline double voronoi_length(const std::vector<double>& s) {
    double left = 0.0, right = 0.0;
    bool has_left = false, has_right = false;
    for (double x : s) {
        if (x < 0.0 && (!has_left || x > left)) left = x, has_left = true;
        if (x > 0.0 && (!has_right || x < right)) right = x, has_right = true;
    }
    return (has_right ? right / 2.0 : 0.0) - (has_left ? left / 2.0 : 0.0);
}

inline Vector estimate_volumes(const std::vector<Point>& points, const std::vector<Point>& boundary_pts, int k,
                               int nn, const WeightEstimateConfig& cfg, double delta) {
    const std::size_t n = points.size();
    const double cell = std::max(delta, 1e-300);
    GridIndex grid(points, cell);
    std::optional<GridIndex> bgrid;
    if (!boundary_pts.empty()) bgrid.emplace(boundary_pts, cell);

    Vector V(static_cast<Index>(n));
    std::vector<std::string> errors(n);
#pragma omp parallel for schedule(dynamic, 64)
    for (long i = 0; i < static_cast<long>(n); ++i) {
        const Point& p = points[i];
        auto nbr = grid.knn(p, static_cast<std::size_t>(nn), static_cast<Index>(i));
        // The δ-ball wins when it holds more points than the nn nearest.
        auto ball = grid.radius_query(p, delta);
        if (ball.size() > nbr.size() + 1) {
            nbr.clear();
            for (Index j : ball)
                if (j != i) nbr.emplace_back((points[j] - p).norm(), j);
            std::sort(nbr.begin(), nbr.end());
        }

        Eigen::Matrix3d M = Eigen::Matrix3d::Zero();
        for (const auto& [d, j] : nbr) {
            const Point q = points[j] - p;
            const double bw = cfg.bandwidth_factor * delta;
            const double w = cfg.weighting == TangentWeighting::gaussian ? std::exp(-(d * d) / (bw * bw)) : 1.0;
            M += w * q * q.transpose();
        }
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(M);
        const Eigen::Vector3d ev = es.eigenvalues(); // ascending
        if (!(ev[2] > 0.0) || ev[3 - k] <= 1e-12 * ev[2]) {
            errors[i] = "degenerate tangent fit at point " + std::to_string(i);
            continue;
        }
        const bool near_boundary = bgrid && !bgrid->radius_query(p, 2.0 * delta).empty();
        const bool clip = cfg.boundary_clip || near_boundary;

        if (k == 1) {
            const Eigen::Vector3d tangent = es.eigenvectors().col(2);
            std::vector<double> s;
            for (const auto& [d, j] : nbr) s.push_back(tangent.dot(points[j] - p));
            V[i] = voronoi_length(s);
            continue;
        }
        if (nbr.size() < 3) {
            errors[i] = "fewer than 3 projected neighbors at point " + std::to_string(i);
            continue;
        }
        const Eigen::Vector3d e1 = es.eigenvectors().col(2);
        const Eigen::Vector3d e2 = es.eigenvectors().col(1);
        Polygon proj;
        for (const auto& [d, j] : nbr) {
            const Point q = points[j] - p;
            proj.emplace_back(e1.dot(q), e2.dot(q));
        }
        if (convex_hull(proj).size() < 3) {
            errors[i] = "degenerate tangent fit at point " + std::to_string(i);
            continue;
        }
        V[i] = voronoi_area(proj, clip);
    }
    for (const auto& e : errors)
        if (!e.empty()) throw NumericalError(e);
    return V;
}

} // namespace detail

/// Point-only quadrature weights: local tangent fit, projection, and the
/// area (k=2) or length (k=1) of the projected Voronoi cell. Boundary weights
/// come from the same procedure on the boundary points one dimension down.
inline WeightEstimate estimate_weights(const std::vector<Point>& points, const std::vector<Index>& boundary_idx,
                                       int k, const WeightEstimateConfig& cfg = {}) {
    require(k == 1 || k == 2, "point-only weights support k = 1 or 2; 3-D clouds need mesh weights");
    const int nn = cfg.resolved_nn(k);
    require(nn >= k + 1, "neighbor count must be at least k+1");
    require(points.size() > static_cast<std::size_t>(nn), "need at least nn_count+1 points");
    for (const auto& p : points) require(p.allFinite(), "non-finite coordinate");

    std::vector<Point> bpts;
    for (Index s : boundary_idx) {
        require(s >= 0 && static_cast<std::size_t>(s) < points.size(), "boundary index out of range");
        bpts.push_back(points[static_cast<std::size_t>(s)]);
    }
    WeightEstimate out;
    out.delta = compute_delta(points, nn);
    out.V = detail::estimate_volumes(points, bpts, k, nn, cfg, out.delta);
    if (bpts.empty()) {
        out.A = Vector(0);
    } else if (k == 1) {
        out.A = Vector::Ones(static_cast<Index>(bpts.size()));
    } else {
        WeightEstimateConfig sub = cfg;
        sub.nn_count = std::min<int>(WeightEstimateConfig::default_nn(k - 1), static_cast<int>(bpts.size()) - 1);
        out.A = estimate_weights(bpts, {}, k - 1, sub).V;
    }
    return out;
}

} // namespace pim
