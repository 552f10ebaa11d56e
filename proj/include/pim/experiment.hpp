#pragma once

#include "pim/assembly.hpp"
#include "pim/generators.hpp"
#include "pim/kernel.hpp"
#include "pim/reference.hpp"
#include "pim/solve.hpp"
#include "pim/weights.hpp"

#include <chrono>
#include <cmath>
#include <optional>
#include <vector>

namespace pim {

/// Nested disk meshes: a structured base mesh refined by midpoint subdivision.
inline std::vector<SimplicialMesh> disk_hierarchy(int levels, int base_rings = 15, bool snap = true) {
    require(levels >= 1, "levels must be >= 1");
    std::vector<SimplicialMesh> out{generate_disk_mesh(base_rings)};
    const std::optional<DomainSpec> spec = snap ? std::optional<DomainSpec>(DomainSpec::disk()) : std::nullopt;
    while (static_cast<int>(out.size()) < levels) out.push_back(subdivide_midpoint(out.back(), spec));
    return out;
}

/// Ball meshes with layer counts round(base·ratio^ℓ) (not nested). The
/// defaults step h by 2^(1/3) from 2625 to 19649 points.
inline std::vector<SimplicialMesh> ball_hierarchy(int levels, int base_layers = 12, double ratio = std::cbrt(2.0)) {
    require(levels >= 1, "levels must be >= 1");
    require(base_layers >= 1 && ratio > 1.0, "ball hierarchy needs base_layers >= 1 and ratio > 1");
    std::vector<SimplicialMesh> out;
    for (int l = 0; l < levels; ++l)
        out.push_back(generate_ball_mesh_layers(static_cast<int>(std::lround(base_layers * std::pow(ratio, l)))));
    return out;
}

/// Nested two-hole meshes: Delaunay base mesh refined by midpoint subdivision.
inline std::vector<SimplicialMesh> two_hole_hierarchy(int levels, double base_h = 0.06, bool snap = true,
                                                      const DomainSpec& spec = DomainSpec::two_hole()) {
    require(levels >= 1, "levels must be >= 1");
    std::vector<SimplicialMesh> out{generate_two_hole_mesh(spec, base_h)};
    const std::optional<DomainSpec> s = snap ? std::optional<DomainSpec>(spec) : std::nullopt;
    while (static_cast<int>(out.size()) < levels) out.push_back(subdivide_midpoint(out.back(), s));
    return out;
}

/// Least-squares slope of log(err) against log(h).
inline double fit_slope(const std::vector<double>& h, const std::vector<double>& err) {
    require(h.size() == err.size() && h.size() >= 2, "slope fit needs at least two levels");
    double mx = 0, my = 0;
    const double n = static_cast<double>(h.size());
    for (std::size_t i = 0; i < h.size(); ++i) {
        mx += std::log(h[i]) / n;
        my += std::log(err[i]) / n;
    }
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < h.size(); ++i) {
        const double dx = std::log(h[i]) - mx;
        sxy += dx * (std::log(err[i]) - my);
        sxx += dx * dx;
    }
    return sxy / sxx;
}

/// Boundary data of the radial truth on a cloud: u on S (Dirichlet) or ∂u/∂n
/// with the analytic outward normal (Neumann).
inline Vector boundary_data(const RadialTruth& truth, const PointCloudDomain& cloud, const DomainSpec& spec,
                            BoundaryKind kind) {
    Vector g(cloud.boundary_size());
    for (Index j = 0; j < cloud.boundary_size(); ++j) {
        const Point& s = cloud.points[static_cast<std::size_t>(cloud.boundary_idx[static_cast<std::size_t>(j)])];
        g[j] = kind == BoundaryKind::dirichlet ? truth.u(s) : truth.grad(s).dot(boundary_normal(spec, s));
    }
    return g;
}

struct PimRunConfig {
    BoundaryKind kind = BoundaryKind::neumann;
    KernelFamily kernel = KernelFamily::gaussian;
    double t_factor = 0.0; // 0 picks the default for the problem
    double t = 0.0;        // explicit override when > 0
    double beta = 1e-4;
    bool alm = false;
    int alm_iterations = 100;
    double alm_tol = 1e-8;
    int nn = 0; // δ neighbour count, 0 picks 10 (k=2) / 15 (k=3)
    SolverOptions solver;
};

struct PimRun {
    Vector u;
    double error = 0.0;
    double delta = 0.0;
    double t = 0.0;
    SolveReport report;
    std::vector<double> alm_history;
    double seconds = 0.0;
};

inline double resolve_t(const PointCloudDomain& cloud, const PimRunConfig& cfg, double& delta) {
    const int nn = cfg.nn > 0 ? cfg.nn : WeightEstimateConfig::default_nn(cloud.intrinsic_dim);
    delta = compute_delta(cloud.points, nn);
    if (cfg.t > 0.0) return cfg.t;
    const double factor = cfg.t_factor > 0.0 ? cfg.t_factor : default_t_factor(cfg.kind, cloud.intrinsic_dim);
    return select_bandwidth(delta, factor);
}

/// Solves the radial test problem on a weighted cloud and measures the
/// relative weighted-L2 error (constant-adjusted for Neumann).
inline PimRun run_pim_poisson(const PointCloudDomain& cloud, const DomainSpec& spec, const PimRunConfig& cfg,
                              const RadialTruth& truth) {
    const auto start = std::chrono::steady_clock::now();
    PimRun run;
    run.t = resolve_t(cloud, cfg, run.delta);
    const PimSystem sys = assemble(cloud, KernelSpec::make(cfg.kernel, run.t));
    const Vector f = truth.sample_f(cloud.points);
    const Vector g = boundary_data(truth, cloud, spec, cfg.kind);
    if (cfg.kind == BoundaryKind::neumann) {
        run.report = poisson_neumann(sys, f, g, cfg.solver);
    } else if (cfg.alm) {
        auto alm = alm_dirichlet(sys, f, g, cfg.beta, cfg.alm_iterations, cfg.alm_tol, cfg.solver);
        run.report = std::move(alm.report);
        run.alm_history = std::move(alm.state.boundary_residual_history);
    } else {
        run.report = poisson_dirichlet(sys, f, g, cfg.beta, cfg.solver);
    }
    run.u = run.report.u;
    const Vector ugt = truth.sample_u(cloud.points);
    run.error = weighted_l2_error(run.u, ugt, sys.V, cfg.kind == BoundaryKind::neumann);
    run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return run;
}

/// P1 FEM error for the radial test problem on a triangle mesh.
inline double run_fem_poisson(const SimplicialMesh& mesh, const DomainSpec& spec, BoundaryKind kind,
                              const RadialTruth& truth, Vector* u_out = nullptr) {
    const auto cloud = mesh_to_cloud(mesh);
    const Vector f = truth.sample_f(mesh.vertices);
    const Vector g = boundary_data(truth, cloud, spec, kind);
    const auto sol = fem_solve(mesh, kind, f, g);
    if (u_out) *u_out = sol.u;
    return weighted_l2_error(sol.u, truth.sample_u(mesh.vertices), *cloud.volume_weights,
                             kind == BoundaryKind::neumann);
}

} // namespace pim
