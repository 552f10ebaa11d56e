#include "pim/generators.hpp"
#include "pim/weights.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace pim;

namespace {

std::vector<Point> grid_points(int half, double h) {
    std::vector<Point> pts;
    for (int i = -half; i <= half; ++i)
        for (int j = -half; j <= half; ++j) pts.emplace_back(i * h, j * h, 0.0);
    return pts;
}

Index grid_index(int half, int i, int j) { return (i + half) * (2 * half + 1) + (j + half); }

std::vector<Point> sunflower(int n) {
    std::vector<Point> pts;
    const double golden = M_PI * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < n; ++i) {
        const double r = std::sqrt((i + 0.5) / n);
        pts.emplace_back(r * std::cos(i * golden), r * std::sin(i * golden), 0.0);
    }
    return pts;
}

} // namespace

TEST(MeshWeights, RightTriangleSplitsEvenly) {
    SimplicialMesh tri;
    tri.vertices = {Point(0, 0, 0), Point(1, 0, 0), Point(0, 1, 0)};
    tri.cells = {{0, 1, 2, -1}};
    tri.boundary_cells = {{0, 1, -1}};
    const auto w = mesh_weights(tri);
    for (int i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(w.V[i], 1.0 / 6.0);
    ASSERT_EQ(w.boundary, (std::vector<Index>{0, 1}));
    EXPECT_DOUBLE_EQ(w.A[0], 0.5);
    EXPECT_DOUBLE_EQ(w.A[1], 0.5);
}

TEST(MeshWeights, ConservesMeasure) {
    for (const auto& mesh : {generate_disk_mesh(12), generate_ball_mesh(3),
                             generate_two_hole_mesh(DomainSpec::two_hole(), 0.1)}) {
        const auto w = mesh_weights(mesh);
        EXPECT_NEAR(w.V.sum(), total_volume(mesh), 1e-12 * total_volume(mesh));
        EXPECT_NEAR(w.A.sum(), total_boundary_measure(mesh), 1e-12 * total_boundary_measure(mesh));
        EXPECT_TRUE((w.V.array() > 0.0).all());
    }
}

TEST(MeshWeights, DiskAreaApproachesPi) {
    const auto w = mesh_weights(generate_disk_mesh(20));
    EXPECT_NEAR(w.V.sum() / M_PI, 1.0, 0.02);
}

TEST(MeshWeights, DegenerateCellIsNamed) {
    SimplicialMesh mesh;
    mesh.vertices = {Point(0, 0, 0), Point(1, 0, 0), Point(0, 1, 0), Point(2, 0, 0)};
    mesh.cells = {{0, 1, 2, -1}, {0, 1, 3, -1}};
    try {
        mesh_weights(mesh);
        FAIL() << "expected NumericalError";
    } catch (const NumericalError& e) {
        EXPECT_NE(std::string(e.what()).find("cell 1"), std::string::npos) << e.what();
    }
}

TEST(ComputeDelta, SquareGridFourNeighbors) {
    const double h = 0.1;
    const int half = 1;
    // centre point has 4 neighbours at h, the corners have 2 at h and 1 at √2h ...
    // an exact oracle: average the per-point means directly
    const auto pts = grid_points(half, h);
    double expected = 0.0;
    for (const auto& p : pts) {
        std::vector<double> d;
        for (const auto& q : pts)
            if ((p - q).norm() > 0) d.push_back((p - q).norm());
        std::sort(d.begin(), d.end());
        expected += (d[0] + d[1] + d[2] + d[3]) / 4.0;
    }
    expected /= pts.size();
    EXPECT_NEAR(compute_delta(pts, 4), expected, 1e-15);
}

TEST(EstimateWeights, RegularGridInteriorCellIsSquare) {
    const int half = 8;
    const double h = 0.05;
    const auto pts = grid_points(half, h);
    const auto est = estimate_weights(pts, {}, 2);
    for (int i = -half + 3; i <= half - 3; ++i)
        for (int j = -half + 3; j <= half - 3; ++j) EXPECT_NEAR(est.V[grid_index(half, i, j)], h * h, 1e-9);
}

TEST(EstimateWeights, UniformWeightingAlsoExactOnGrid) {
    const int half = 6;
    const double h = 0.2;
    WeightEstimateConfig cfg;
    cfg.weighting = TangentWeighting::uniform;
    const auto est = estimate_weights(grid_points(half, h), {}, 2, cfg);
    EXPECT_NEAR(est.V[grid_index(half, 0, 0)], h * h, 1e-9);
}

TEST(EstimateWeights, UniformCircle) {
    // Projecting the neighbours onto the tangent line puts the nearest ones at
    // ±sin(2π/n), so the 1-D cell has length sin(2π/n).
    for (int n : {16, 64, 400}) {
        std::vector<Point> pts;
        for (int i = 0; i < n; ++i) pts.emplace_back(std::cos(2 * M_PI * i / n), std::sin(2 * M_PI * i / n), 0.0);
        const auto est = estimate_weights(pts, {}, 1);
        for (int i = 0; i < n; ++i) EXPECT_NEAR(est.V[i], std::sin(2 * M_PI / n), 1e-12);
        EXPECT_NEAR(est.V.sum(), 2 * M_PI, 2 * M_PI * 4.0 / (n * n) * M_PI * M_PI);
    }
}

TEST(EstimateWeights, CurveWithEndpointsIsClippedToHull) {
    std::vector<Point> pts;
    for (int i = 0; i <= 10; ++i) pts.emplace_back(0.1 * i, 0.0, 0.0);
    const auto est = estimate_weights(pts, {0, 10}, 1);
    EXPECT_NEAR(est.V[0], 0.05, 1e-12);
    EXPECT_NEAR(est.V[5], 0.1, 1e-12);
    EXPECT_NEAR(est.V.sum(), 1.0, 1e-12);
    EXPECT_EQ(est.A, Vector::Ones(2));
}

TEST(EstimateWeights, QuasiUniformDiskArea) {
    const auto pts = sunflower(20000);
    const auto est = estimate_weights(pts, {}, 2);
    EXPECT_NEAR(est.V.sum() / M_PI, 1.0, 0.03);
}

TEST(EstimateWeights, BoundaryWeightsFromCurve) {
    // Disk mesh vertices with the outer ring as S: A should sum to the perimeter.
    const auto mesh = generate_disk_mesh(20);
    const auto bnd = boundary_vertices(mesh);
    const auto est = estimate_weights(mesh.vertices, bnd, 2);
    EXPECT_NEAR(est.A.sum() / (2 * M_PI), 1.0, 0.01);
    EXPECT_NEAR(est.V.sum() / M_PI, 1.0, 0.03);
    EXPECT_TRUE((est.V.array() > 0.0).all());
}

TEST(EstimateWeights, RigidMotionInvariance) {
    auto pts = sunflower(2000);
    // lift to a tilted plane in 3-D and move it
    Eigen::Matrix3d R = (Eigen::AngleAxisd(0.7, Eigen::Vector3d(1, 2, 3).normalized())).toRotationMatrix();
    const Eigen::Vector3d shift(0.3, -1.2, 2.5);
    std::vector<Point> moved;
    for (const auto& p : pts) moved.push_back(R * p + shift);
    const auto a = estimate_weights(pts, {}, 2);
    const auto b = estimate_weights(moved, {}, 2);
    EXPECT_NEAR(a.delta, b.delta, 1e-12);
    EXPECT_LT((a.V - b.V).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(EstimateWeights, QuadratureConvergesOnNestedDisks) {
    // ∫_disk (1 + x² + y) = π + π/4
    const double exact = 1.25 * M_PI;
    auto mesh = generate_disk_mesh(6);
    double prev = std::numeric_limits<double>::infinity();
    for (int level = 0; level < 3; ++level) {
        const auto est = estimate_weights(mesh.vertices, boundary_vertices(mesh), 2);
        double q = 0.0;
        for (Index i = 0; i < mesh.num_vertices(); ++i) {
            const Point& p = mesh.vertices[i];
            q += (1.0 + p.x() * p.x() + p.y()) * est.V[i];
        }
        const double err = std::abs(q - exact);
        EXPECT_LT(err, prev) << "level " << level;
        prev = err;
        mesh = subdivide_midpoint(mesh, DomainSpec::disk());
    }
}

TEST(EstimateWeights, Errors) {
    std::vector<Point> line;
    for (int i = 0; i < 30; ++i) line.emplace_back(0.1 * i, 0.2 * i, 0.0);
    EXPECT_THROW(estimate_weights(line, {}, 2), NumericalError);

    WeightEstimateConfig tiny;
    tiny.nn_count = 2;
    EXPECT_THROW(estimate_weights(grid_points(3, 1.0), {}, 2, tiny), ConfigError);
    EXPECT_THROW(estimate_weights(grid_points(3, 1.0), {}, 3), ConfigError);
    EXPECT_THROW(estimate_weights(grid_points(1, 1.0), {}, 2), ConfigError);
}
