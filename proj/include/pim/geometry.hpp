#pragma once

#include "pim/common.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pim {

/// Sampled manifold: points P, boundary subset S (as indices into P), and the
/// quadrature weights V on M and A on the boundary. Weights are optional
/// because raw clouds carry none until estimated.
struct PointCloudDomain {
    int ambient_dim = 2;
    int intrinsic_dim = 2;
    std::vector<Point> points;
    std::vector<Index> boundary_idx;
    std::optional<Vector> volume_weights;   // n entries
    std::optional<Vector> boundary_weights; // m entries, ordered like boundary_idx

    Index size() const { return static_cast<Index>(points.size()); }
    Index boundary_size() const { return static_cast<Index>(boundary_idx.size()); }
    bool has_weights() const {
        return volume_weights.has_value() && (boundary_idx.empty() || boundary_weights.has_value());
    }
};

/// Conforming simplicial mesh. Cells hold k+1 vertex ids, boundary cells hold
/// k ids; trailing slots are -1.
struct SimplicialMesh {
    int ambient_dim = 2;
    int intrinsic_dim = 2;
    std::vector<Point> vertices;
    std::vector<std::array<Index, 4>> cells;
    std::vector<std::array<Index, 3>> boundary_cells;

    Index num_vertices() const { return static_cast<Index>(vertices.size()); }
    Index num_cells() const { return static_cast<Index>(cells.size()); }
    int cell_size() const { return intrinsic_dim + 1; }
    int facet_size() const { return intrinsic_dim; }
    std::span<const Index> cell(std::size_t c) const {
        return {cells[c].data(), static_cast<std::size_t>(cell_size())};
    }
    std::span<const Index> boundary_cell(std::size_t b) const {
        return {boundary_cells[b].data(), static_cast<std::size_t>(facet_size())};
    }
};

struct Circle {
    double cx = 0.0;
    double cy = 0.0;
    double r = 1.0;
};

enum class DomainTag { unit_disk, unit_ball, unit_circle_curve, two_hole_planar, file };

/// Analytic description of a test domain, used by generators and by
/// boundary snapping during refinement.
struct DomainSpec {
    DomainTag tag = DomainTag::unit_disk;
    double outer_radius = 1.0;
    std::vector<Circle> holes; // two_hole_planar only
    std::string path;          // file only

    static DomainSpec disk() { return {}; }
    static DomainSpec ball() { return {DomainTag::unit_ball, 1.0, {}, {}}; }
    static DomainSpec two_hole(Circle a = {-0.4, 0.0, 0.2}, Circle b = {0.4, 0.0, 0.2}) {
        return {DomainTag::two_hole_planar, 1.0, {a, b}, {}};
    }
    static DomainSpec from_file(std::string p) { return {DomainTag::file, 1.0, {}, std::move(p)}; }
};

inline std::string to_string(DomainTag tag) {
    switch (tag) {
    case DomainTag::unit_disk: return "unit_disk";
    case DomainTag::unit_ball: return "unit_ball";
    case DomainTag::unit_circle_curve: return "unit_circle_curve";
    case DomainTag::two_hole_planar: return "two_hole_planar";
    case DomainTag::file: return "file";
    }
    return "unknown";
}

inline void validate(const DomainSpec& spec) {
    if (spec.tag != DomainTag::two_hole_planar) return;
    require(spec.holes.size() == 2, "two_hole_planar needs exactly two holes");
    require(spec.outer_radius > 0.0, "outer radius must be positive");
    for (const auto& h : spec.holes) {
        require(h.r > 0.0, "hole radius must be > 0");
        require(std::hypot(h.cx, h.cy) + h.r < spec.outer_radius,
                "hole must lie strictly inside the outer boundary");
    }
    const auto& a = spec.holes[0];
    const auto& b = spec.holes[1];
    require(std::hypot(a.cx - b.cx, a.cy - b.cy) > a.r + b.r, "holes must not intersect");
}

/// Project a point onto the nearest analytic boundary component. Points are
/// returned unchanged for file-backed domains.
inline Point snap_to_boundary(const DomainSpec& spec, const Point& p) {
    switch (spec.tag) {
    case DomainTag::unit_disk:
    case DomainTag::unit_ball:
    case DomainTag::unit_circle_curve: {
        const double norm = p.norm();
        return norm > 0.0 ? Point(p / norm * spec.outer_radius) : p;
    }
    case DomainTag::two_hole_planar: {
        std::vector<Circle> circles{{0.0, 0.0, spec.outer_radius}};
        circles.insert(circles.end(), spec.holes.begin(), spec.holes.end());
        const Circle* best = nullptr;
        double best_gap = 0.0;
        for (const auto& c : circles) {
            const double gap = std::abs(std::hypot(p.x() - c.cx, p.y() - c.cy) - c.r);
            if (!best || gap < best_gap) {
                best = &c;
                best_gap = gap;
            }
        }
        const double dx = p.x() - best->cx;
        const double dy = p.y() - best->cy;
        const double rho = std::hypot(dx, dy);
        if (rho == 0.0) return p;
        return Point(best->cx + dx / rho * best->r, best->cy + dy / rho * best->r, 0.0);
    }
    case DomainTag::file: return p;
    }
    return p;
}

/// Outward unit normal of the analytic boundary at a boundary point (planar domains).
inline Point boundary_normal(const DomainSpec& spec, const Point& p) {
    if (spec.tag == DomainTag::two_hole_planar) {
        const double outer_gap = std::abs(std::hypot(p.x(), p.y()) - spec.outer_radius);
        const Circle* best = nullptr;
        double best_gap = outer_gap;
        for (const auto& h : spec.holes) {
            const double gap = std::abs(std::hypot(p.x() - h.cx, p.y() - h.cy) - h.r);
            if (gap < best_gap) {
                best = &h;
                best_gap = gap;
            }
        }
        if (best) {
            // the domain lies outside the hole: outward normal points to the center
            Point n(best->cx - p.x(), best->cy - p.y(), 0.0);
            return n.normalized();
        }
    }
    return p.normalized();
}

// Measure of the simplex spanned by `count` points (1 to 4 vertices), in any
// ambient dimension up to 3.
inline double simplex_measure(std::span<const Point> v) {
    switch (v.size()) {
    case 1: return 1.0;
    case 2: return (v[1] - v[0]).norm();
    case 3: return 0.5 * (v[1] - v[0]).cross(v[2] - v[0]).norm();
    case 4: {
        Eigen::Matrix3d m;
        m.col(0) = v[1] - v[0];
        m.col(1) = v[2] - v[0];
        m.col(2) = v[3] - v[0];
        return std::abs(m.determinant()) / 6.0;
    }
    default: throw ConfigError("simplex with unsupported vertex count");
    }
}

inline std::vector<Point> gather(const std::vector<Point>& pts, std::span<const Index> ids) {
    std::vector<Point> out;
    out.reserve(ids.size());
    for (Index i : ids) out.push_back(pts[static_cast<std::size_t>(i)]);
    return out;
}

inline double cell_measure(const SimplicialMesh& mesh, std::size_t c) {
    return simplex_measure(gather(mesh.vertices, mesh.cell(c)));
}

inline double boundary_cell_measure(const SimplicialMesh& mesh, std::size_t b) {
    return simplex_measure(gather(mesh.vertices, mesh.boundary_cell(b)));
}

inline double total_volume(const SimplicialMesh& mesh) {
    double sum = 0.0;
    for (std::size_t c = 0; c < mesh.cells.size(); ++c) sum += cell_measure(mesh, c);
    return sum;
}

inline double total_boundary_measure(const SimplicialMesh& mesh) {
    double sum = 0.0;
    for (std::size_t b = 0; b < mesh.boundary_cells.size(); ++b) sum += boundary_cell_measure(mesh, b);
    return sum;
}

/// Longest edge over all cells.
inline double max_edge_length(const SimplicialMesh& mesh) {
    double h = 0.0;
    for (std::size_t c = 0; c < mesh.cells.size(); ++c) {
        const auto cell = mesh.cell(c);
        for (std::size_t a = 0; a < cell.size(); ++a)
            for (std::size_t b = a + 1; b < cell.size(); ++b)
                h = std::max(h, (mesh.vertices[cell[a]] - mesh.vertices[cell[b]]).norm());
    }
    return h;
}

/// Facets (sorted vertex tuples) that belong to exactly one cell, in order of
/// first appearance.
inline std::vector<std::array<Index, 3>> exterior_facets(const SimplicialMesh& mesh) {
    const int fs = mesh.facet_size();
    std::map<std::array<Index, 3>, std::pair<int, std::array<Index, 3>>> count;
    std::vector<std::array<Index, 3>> order;
    for (std::size_t c = 0; c < mesh.cells.size(); ++c) {
        const auto cell = mesh.cell(c);
        for (int skip = 0; skip <= mesh.intrinsic_dim; ++skip) {
            std::array<Index, 3> facet{-1, -1, -1};
            int at = 0;
            for (int j = 0; j <= mesh.intrinsic_dim; ++j)
                if (j != skip) facet[at++] = cell[j];
            std::array<Index, 3> key = facet;
            std::sort(key.begin(), key.begin() + fs);
            auto [it, inserted] = count.try_emplace(key, 0, facet);
            if (inserted) order.push_back(key);
            ++it->second.first;
        }
    }
    std::vector<std::array<Index, 3>> out;
    for (const auto& key : order) {
        const auto& entry = count.at(key);
        if (entry.first == 1) out.push_back(entry.second);
    }
    return out;
}

/// Checks index ranges, positive cell measure, and that every boundary cell is
/// a facet of exactly one cell.
inline void validate(const SimplicialMesh& mesh) {
    require(mesh.intrinsic_dim >= 1 && mesh.intrinsic_dim <= 3, "mesh intrinsic dimension must be 1..3");
    require(mesh.intrinsic_dim <= mesh.ambient_dim && mesh.ambient_dim <= 3,
            "mesh dimensions must satisfy k <= d <= 3");
    const Index n = mesh.num_vertices();
    for (std::size_t c = 0; c < mesh.cells.size(); ++c) {
        for (Index v : mesh.cell(c))
            if (v < 0 || v >= n) throw ConfigError("cell " + std::to_string(c) + " has out-of-range vertex");
        if (!(cell_measure(mesh, c) > 0.0)) throw ConfigError("cell " + std::to_string(c) + " is degenerate");
    }
    auto canonical = [&](std::array<Index, 3> f) {
        std::sort(f.begin(), f.begin() + mesh.facet_size());
        return f;
    };
    std::vector<std::array<Index, 3>> ext;
    for (const auto& f : exterior_facets(mesh)) ext.push_back(canonical(f));
    std::sort(ext.begin(), ext.end());
    for (std::size_t b = 0; b < mesh.boundary_cells.size(); ++b) {
        for (Index v : mesh.boundary_cell(b))
            if (v < 0 || v >= n) throw ConfigError("boundary cell " + std::to_string(b) + " out of range");
        if (!std::binary_search(ext.begin(), ext.end(), canonical(mesh.boundary_cells[b])))
            throw ConfigError("boundary cell " + std::to_string(b) + " is not an exterior facet");
    }
}

/// Sorted, unique vertices incident to boundary cells.
inline std::vector<Index> boundary_vertices(const SimplicialMesh& mesh) {
    std::vector<Index> ids;
    for (std::size_t b = 0; b < mesh.boundary_cells.size(); ++b)
        for (Index v : mesh.boundary_cell(b)) ids.push_back(v);
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    return ids;
}

inline void validate(const PointCloudDomain& cloud) {
    require(cloud.intrinsic_dim >= 1 && cloud.intrinsic_dim <= cloud.ambient_dim && cloud.ambient_dim <= 3,
            "cloud dimensions must satisfy 1 <= k <= d <= 3");
    const Index n = cloud.size();
    std::vector<Index> sorted = cloud.boundary_idx;
    std::sort(sorted.begin(), sorted.end());
    require(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(), "boundary indices must be distinct");
    for (Index s : sorted) require(s >= 0 && s < n, "boundary index out of range");
    for (const auto& p : cloud.points) require(p.allFinite(), "non-finite coordinate");
    if (cloud.volume_weights) {
        require(cloud.volume_weights->size() == n, "V must have one entry per point");
        require((cloud.volume_weights->array() >= 0.0).all(), "V must be nonnegative");
        require(cloud.volume_weights->sum() > 0.0, "V must have positive total");
    }
    if (cloud.boundary_weights) {
        require(cloud.boundary_weights->size() == cloud.boundary_size(), "A must have one entry per boundary point");
        require((cloud.boundary_weights->array() >= 0.0).all(), "A must be nonnegative");
    }
}

} // namespace pim
