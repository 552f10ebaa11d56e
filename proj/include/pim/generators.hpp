#pragma once

#include "pim/geometry.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <unordered_map>
#include <utility>
#include <vector>

namespace pim {

namespace detail {

inline double signed_area(const Point& a, const Point& b, const Point& c) {
    return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y()));
}

inline void orient_ccw(const std::vector<Point>& v, std::array<Index, 4>& tri) {
    if (signed_area(v[tri[0]], v[tri[1]], v[tri[2]]) < 0.0) std::swap(tri[1], tri[2]);
}

inline double signed_volume(const Point& a, const Point& b, const Point& c, const Point& d) {
    Eigen::Matrix3d m;
    m.col(0) = b - a;
    m.col(1) = c - a;
    m.col(2) = d - a;
    return m.determinant() / 6.0;
}

// Deterministic value in [-1, 1) from an integer seed (splitmix64).
inline double hash_unit(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return static_cast<double>(x >> 11) * 0x1.0p-52 - 1.0;
}

/// Bowyer-Watson Delaunay triangulation of planar points. Returns CCW
/// triangles over the input indices. Quadratic time; intended for coarse
/// base meshes.
inline std::vector<std::array<Index, 3>> delaunay(const std::vector<Point>& input) {
    struct Tri {
        std::array<Index, 3> v;
        double cx, cy, r2;
        bool alive;
    };
    std::vector<Point> pts = input;
    double lo_x = pts[0].x(), hi_x = lo_x, lo_y = pts[0].y(), hi_y = lo_y;
    for (const auto& p : pts) {
        lo_x = std::min(lo_x, p.x());
        hi_x = std::max(hi_x, p.x());
        lo_y = std::min(lo_y, p.y());
        hi_y = std::max(hi_y, p.y());
    }
    const double span = std::max(hi_x - lo_x, hi_y - lo_y) * 20.0 + 1.0;
    const double mx = 0.5 * (lo_x + hi_x), my = 0.5 * (lo_y + hi_y);
    const Index s0 = static_cast<Index>(pts.size());
    pts.emplace_back(mx - span, my - span, 0.0);
    pts.emplace_back(mx + span, my - span, 0.0);
    pts.emplace_back(mx, my + span, 0.0);

    auto make = [&](Index a, Index b, Index c) {
        if (signed_area(pts[a], pts[b], pts[c]) < 0.0) std::swap(b, c);
        const double ax = pts[a].x(), ay = pts[a].y();
        const double bx = pts[b].x() - ax, by = pts[b].y() - ay;
        const double cx = pts[c].x() - ax, cy = pts[c].y() - ay;
        const double d = 2.0 * (bx * cy - by * cx);
        const double ux = (cy * (bx * bx + by * by) - by * (cx * cx + cy * cy)) / d;
        const double uy = (bx * (cx * cx + cy * cy) - cx * (bx * bx + by * by)) / d;
        return Tri{{a, b, c}, ax + ux, ay + uy, ux * ux + uy * uy, true};
    };

    std::vector<Tri> tris{make(s0, s0 + 1, s0 + 2)};
    for (Index p = 0; p < s0; ++p) {
        const double px = pts[p].x(), py = pts[p].y();
        std::map<std::pair<Index, Index>, int> edges;
        for (auto& t : tris) {
            if (!t.alive) continue;
            const double dx = px - t.cx, dy = py - t.cy;
            if (dx * dx + dy * dy < t.r2) {
                t.alive = false;
                for (int e = 0; e < 3; ++e) {
                    Index a = t.v[e], b = t.v[(e + 1) % 3];
                    ++edges[{std::min(a, b), std::max(a, b)}];
                }
            }
        }
        std::erase_if(tris, [](const Tri& t) { return !t.alive; });
        for (const auto& [edge, count] : edges)
            if (count == 1) tris.push_back(make(edge.first, edge.second, p));
    }
    std::vector<std::array<Index, 3>> out;
    for (const auto& t : tris)
        if (t.v[0] < s0 && t.v[1] < s0 && t.v[2] < s0) out.push_back(t.v);
    return out;
}

} // namespace detail

/// Structured polar triangulation of the unit disk: ring r (1..rings) carries
/// 6r vertices at radius r/rings, consecutive rings are stitched sector by
/// sector.
inline SimplicialMesh generate_disk_mesh(int rings) {
    require(rings >= 1, "rings must be >= 1");
    SimplicialMesh mesh;
    mesh.ambient_dim = 2;
    mesh.intrinsic_dim = 2;
    mesh.vertices.emplace_back(0.0, 0.0, 0.0);
    std::vector<Index> ring_start{0};
    for (int r = 1; r <= rings; ++r) {
        ring_start.push_back(mesh.num_vertices());
        const int count = 6 * r;
        const double radius = (r == rings) ? 1.0 : static_cast<double>(r) / rings;
        for (int j = 0; j < count; ++j) {
            const double theta = 2.0 * std::numbers::pi * j / count;
            mesh.vertices.emplace_back(radius * std::cos(theta), radius * std::sin(theta), 0.0);
        }
    }
    auto ring_vertex = [&](int r, int j) -> Index {
        if (r == 0) return 0;
        const int count = 6 * r;
        return ring_start[r] + ((j % count) + count) % count;
    };
    for (int r = 1; r <= rings; ++r) {
        for (int s = 0; s < 6; ++s) {
            for (int i = 0; i < r; ++i) {
                std::array<Index, 4> t{ring_vertex(r, s * r + i), ring_vertex(r, s * r + i + 1),
                                       ring_vertex(r - 1, s * (r - 1) + i), -1};
                detail::orient_ccw(mesh.vertices, t);
                mesh.cells.push_back(t);
            }
            for (int i = 0; i + 1 < r; ++i) {
                std::array<Index, 4> t{ring_vertex(r - 1, s * (r - 1) + i), ring_vertex(r, s * r + i + 1),
                                       ring_vertex(r - 1, s * (r - 1) + i + 1), -1};
                detail::orient_ccw(mesh.vertices, t);
                mesh.cells.push_back(t);
            }
        }
    }
    for (int j = 0; j < 6 * rings; ++j)
        mesh.boundary_cells.push_back({ring_vertex(rings, j), ring_vertex(rings, j + 1), -1});
    return mesh;
}

/// Tetrahedral mesh of the unit ball with `layers` radial layers. The
/// octahedron |x|+|y|+|z| <= 1 is cut into layers^3 Freudenthal tetrahedra per
/// octant and mapped radially onto the ball; surface vertices are snapped to
/// the unit sphere.
inline SimplicialMesh generate_ball_mesh_layers(int layers) {
    require(layers >= 1, "layer count must be >= 1");
    const int R = layers;
    SimplicialMesh mesh;
    mesh.ambient_dim = 3;
    mesh.intrinsic_dim = 3;
    std::map<std::array<int, 3>, Index> ids;
    std::vector<std::array<int, 3>> lattice;
    auto vertex = [&](std::array<int, 3> key) {
        auto [it, inserted] = ids.try_emplace(key, static_cast<Index>(lattice.size()));
        if (inserted) lattice.push_back(key);
        return it->second;
    };
    vertex({0, 0, 0});

    const std::array<std::array<int, 3>, 6> perms{{{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};
    auto inside = [&](const std::array<int, 3>& abc) {
        return abc[0] <= R && abc[0] >= abc[1] && abc[1] >= abc[2] && abc[2] >= 0;
    };
    for (int sx : {1, -1})
        for (int sy : {1, -1})
            for (int sz : {1, -1})
                for (int a = 0; a < R; ++a)
                    for (int b = 0; b <= a; ++b)
                        for (int c = 0; c <= b; ++c)
                            for (const auto& perm : perms) {
                                std::array<std::array<int, 3>, 4> corner;
                                corner[0] = {a, b, c};
                                bool ok = inside(corner[0]);
                                for (int s = 0; s < 3 && ok; ++s) {
                                    corner[s + 1] = corner[s];
                                    ++corner[s + 1][perm[s]];
                                    ok = inside(corner[s + 1]);
                                }
                                if (!ok) continue;
                                std::array<Index, 4> tet;
                                for (int q = 0; q < 4; ++q) {
                                    const auto& abc = corner[q];
                                    tet[q] = vertex({sx * (abc[0] - abc[1]), sy * (abc[1] - abc[2]), sz * abc[2]});
                                }
                                mesh.cells.push_back(tet);
                            }

    for (const auto& key : lattice) {
        Point q(key[0], key[1], key[2]);
        q /= R;
        const int l1 = std::abs(key[0]) + std::abs(key[1]) + std::abs(key[2]);
        if (l1 == 0) {
            mesh.vertices.emplace_back(0.0, 0.0, 0.0);
        } else if (l1 == R) {
            mesh.vertices.push_back(q / q.norm());
        } else {
            mesh.vertices.push_back(q * (q.lpNorm<1>() / q.norm()));
        }
    }
    for (auto& tet : mesh.cells) {
        const auto& v = mesh.vertices;
        if (detail::signed_volume(v[tet[0]], v[tet[1]], v[tet[2]], v[tet[3]]) < 0.0) std::swap(tet[1], tet[2]);
    }
    mesh.boundary_cells = exterior_facets(mesh);
    return mesh;
}

/// Ball mesh from the octahedron refined resolution-1 times, i.e. with
/// 2^(resolution-1) radial layers.
inline SimplicialMesh generate_ball_mesh(int resolution) {
    require(resolution >= 1 && resolution <= 7, "resolution must be in [1, 7]");
    return generate_ball_mesh_layers(1 << (resolution - 1));
}

/// Unstructured triangle mesh of a disk with two circular holes: boundary
/// circles sampled at spacing target_h, interior filled by a hexagonal
/// lattice, triangulated by Delaunay and trimmed to the domain.
inline SimplicialMesh generate_two_hole_mesh(const DomainSpec& spec, double target_h) {
    require(spec.tag == DomainTag::two_hole_planar, "two-hole generator needs a two_hole_planar spec");
    require(target_h > 0.0, "target_h must be positive");
    validate(spec);
    const double h = target_h;
    std::vector<Circle> circles{{0.0, 0.0, spec.outer_radius}};
    circles.insert(circles.end(), spec.holes.begin(), spec.holes.end());

    std::vector<Point> exact;
    std::vector<Point> jittered;
    std::uint64_t seed = 0;
    for (const auto& c : circles) {
        const int count = std::max(8, static_cast<int>(std::ceil(2.0 * std::numbers::pi * c.r / h)));
        for (int j = 0; j < count; ++j) {
            const double theta = 2.0 * std::numbers::pi * j / count;
            exact.emplace_back(c.cx + c.r * std::cos(theta), c.cy + c.r * std::sin(theta), 0.0);
            // break exact cocircularity for the triangulator
            const double rr = c.r * (1.0 + 1e-9 * detail::hash_unit(seed++));
            jittered.emplace_back(c.cx + rr * std::cos(theta), c.cy + rr * std::sin(theta), 0.0);
        }
    }
    const double dy = h * std::sqrt(3.0) / 2.0;
    const int rows = static_cast<int>(std::ceil(spec.outer_radius / dy)) + 1;
    const int cols = static_cast<int>(std::ceil(spec.outer_radius / h)) + 2;
    for (int row = -rows; row <= rows; ++row) {
        for (int col = -cols; col <= cols; ++col) {
            const double x = (col + 0.5 * (row & 1)) * h;
            const double y = row * dy;
            bool keep = true;
            for (std::size_t ci = 0; ci < circles.size() && keep; ++ci) {
                const double rho = std::hypot(x - circles[ci].cx, y - circles[ci].cy);
                const double margin = 0.75 * h;
                keep = (ci == 0) ? rho < circles[ci].r - margin : rho > circles[ci].r + margin;
            }
            if (!keep) continue;
            exact.emplace_back(x, y, 0.0);
            const double jx = 1e-9 * h * detail::hash_unit(seed++);
            const double jy = 1e-9 * h * detail::hash_unit(seed++);
            jittered.emplace_back(x + jx, y + jy, 0.0);
        }
    }

    auto in_domain = [&](double x, double y) {
        if (std::hypot(x, y) >= spec.outer_radius) return false;
        for (const auto& hole : spec.holes)
            if (std::hypot(x - hole.cx, y - hole.cy) <= hole.r) return false;
        return true;
    };
    std::vector<std::array<Index, 3>> kept;
    for (const auto& t : detail::delaunay(jittered)) {
        const Point centroid = (exact[t[0]] + exact[t[1]] + exact[t[2]]) / 3.0;
        if (in_domain(centroid.x(), centroid.y())) kept.push_back(t);
    }

    std::vector<Index> remap(exact.size(), -1);
    SimplicialMesh mesh;
    mesh.ambient_dim = 2;
    mesh.intrinsic_dim = 2;
    for (const auto& t : kept) {
        std::array<Index, 4> cell{-1, -1, -1, -1};
        for (int q = 0; q < 3; ++q) {
            Index& id = remap[t[q]];
            if (id < 0) {
                id = mesh.num_vertices();
                mesh.vertices.push_back(exact[t[q]]);
            }
            cell[q] = id;
        }
        detail::orient_ccw(mesh.vertices, cell);
        mesh.cells.push_back(cell);
    }
    mesh.boundary_cells = exterior_facets(mesh);
    for (Index v : boundary_vertices(mesh)) {
        const Point& p = mesh.vertices[v];
        if ((snap_to_boundary(spec, p) - p).norm() > 1e-12)
            throw NumericalError("two-hole mesher produced a boundary vertex off the analytic boundary");
    }
    return mesh;
}

/// Splits every triangle into four through its edge midpoints. Midpoints of
/// boundary edges are projected onto the analytic boundary when `snap` is a
/// spec with an analytic boundary.
inline SimplicialMesh subdivide_midpoint(const SimplicialMesh& mesh, const std::optional<DomainSpec>& snap) {
    if (mesh.intrinsic_dim != 2) throw ConfigError("midpoint subdivision supports triangle meshes only");
    SimplicialMesh out;
    out.ambient_dim = mesh.ambient_dim;
    out.intrinsic_dim = 2;
    out.vertices = mesh.vertices;
    const bool snapping = snap.has_value() && snap->tag != DomainTag::file;

    std::map<std::pair<Index, Index>, bool> on_boundary;
    for (std::size_t b = 0; b < mesh.boundary_cells.size(); ++b) {
        const auto e = mesh.boundary_cells[b];
        on_boundary[{std::min(e[0], e[1]), std::max(e[0], e[1])}] = true;
    }
    std::map<std::pair<Index, Index>, Index> midpoint;
    auto mid = [&](Index a, Index b) {
        const std::pair<Index, Index> key{std::min(a, b), std::max(a, b)};
        auto it = midpoint.find(key);
        if (it != midpoint.end()) return it->second;
        Point m = 0.5 * (mesh.vertices[a] + mesh.vertices[b]);
        if (snapping && on_boundary.count(key)) m = snap_to_boundary(*snap, m);
        const Index id = out.num_vertices();
        out.vertices.push_back(m);
        midpoint.emplace(key, id);
        return id;
    };
    for (std::size_t c = 0; c < mesh.cells.size(); ++c) {
        const auto& t = mesh.cells[c];
        const Index ab = mid(t[0], t[1]);
        const Index bc = mid(t[1], t[2]);
        const Index ca = mid(t[2], t[0]);
        out.cells.push_back({t[0], ab, ca, -1});
        out.cells.push_back({ab, t[1], bc, -1});
        out.cells.push_back({ca, bc, t[2], -1});
        out.cells.push_back({ab, bc, ca, -1});
    }
    for (std::size_t b = 0; b < mesh.boundary_cells.size(); ++b) {
        const auto e = mesh.boundary_cells[b];
        const Index m = mid(e[0], e[1]);
        out.boundary_cells.push_back({e[0], m, -1});
        out.boundary_cells.push_back({m, e[1], -1});
    }
    return out;
}

/// n equally spaced points on the unit circle (closed curve, k = 1, no boundary).
inline std::vector<Point> circle_points(int n) {
    std::vector<Point> pts;
    for (int j = 0; j < n; ++j) {
        const double theta = 2.0 * std::numbers::pi * j / n;
        pts.emplace_back(std::cos(theta), std::sin(theta), 0.0);
    }
    return pts;
}

} // namespace pim
