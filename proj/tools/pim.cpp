// pim: command-line driver for weights, Poisson solves, eigenproblems and
// convergence studies.

#include "pim/experiment.hpp"
#include "pim/io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace pim;
using json = nlohmann::json;

namespace {

constexpr int kSchemaVersion = 1;

enum ExitCode { ok = 0, check_failed = 1, usage_error = 2, numerical_error = 3 };

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string num(double v) { return detail::fmt_real(v); }

// ---- shared options -------------------------------------------------------------

struct Common {
    std::string input;
    std::string domain = "disk";
    int level = 1;
    bool no_snap = false;
    std::string kernel = "gaussian";
    double t_factor = 0.0;
    double t = 0.0;
    double beta = 1e-4;
    double tol = 1e-9;
    int nn = 0;
    bool estimate = false;
    int k = 0;
    std::string dump_matrices;
    std::string out;
    std::string report;
    bool check = false;
};

void add_common(CLI::App* app, Common& c) {
    app->add_option("--input", c.input, "Input .pts cloud or .off/.tet mesh (default: generated domain)");
    app->add_option("--domain", c.domain, "Analytic domain: disk, ball or two-hole")
        ->check(CLI::IsMember({"disk", "ball", "two-hole"}));
    app->add_option("--level", c.level, "Hierarchy level of the generated domain (1 = coarsest)")
        ->check(CLI::PositiveNumber);
    app->add_flag("--no-snap", c.no_snap, "Do not snap refined boundary vertices to the analytic boundary");
    app->add_option("--kernel", c.kernel, "Kernel family: gaussian or compact")
        ->check(CLI::IsMember({"gaussian", "compact"}));
    app->add_option("--t-factor", c.t_factor, "sqrt(t) as a multiple of delta (default per problem)")
        ->check(CLI::PositiveNumber);
    app->add_option("--t", c.t, "Explicit bandwidth t (overrides --t-factor)")->check(CLI::PositiveNumber);
    app->add_option("--beta", c.beta, "Robin penalty beta")->check(CLI::PositiveNumber);
    app->add_option("--tol", c.tol, "Relative residual tolerance of the iterative solvers")->check(CLI::PositiveNumber);
    app->add_option("--nn", c.nn, "Neighbour count for delta and weight estimation")->check(CLI::PositiveNumber);
    app->add_flag("--estimate", c.estimate, "Estimate weights from the points when the input carries none");
    app->add_option("--k", c.k, "Intrinsic dimension for weight estimation (default from input)");
    app->add_option("--dump-matrices", c.dump_matrices, "Write L.mtx, I.mtx and B.mtx into this directory");
    app->add_option("--out", c.out, "Output CSV path (default: stdout)");
    app->add_option("--report", c.report, "JSON run report path");
    app->add_flag("--check", c.check, "Exit nonzero unless all tolerances are met");
}

DomainSpec domain_spec(const std::string& name) {
    if (name == "ball") return DomainSpec::ball();
    if (name == "two-hole") return DomainSpec::two_hole();
    return DomainSpec::disk();
}

SimplicialMesh generated_mesh(const std::string& domain, int level, bool snap) {
    if (domain == "ball") return ball_hierarchy(level).back();
    if (domain == "two-hole") return two_hole_hierarchy(level, 0.06, snap).back();
    return disk_hierarchy(level, 15, snap).back();
}

std::vector<SimplicialMesh> generated_hierarchy(const std::string& domain, int levels, bool snap) {
    if (domain == "ball") return ball_hierarchy(levels);
    if (domain == "two-hole") return two_hole_hierarchy(levels, 0.06, snap);
    return disk_hierarchy(levels, 15, snap);
}

bool is_mesh_path(const std::string& p) { return p.ends_with(".off") || p.ends_with(".tet"); }

WeightEstimateConfig estimate_config(const Common& c) {
    WeightEstimateConfig cfg;
    cfg.nn_count = c.nn;
    return cfg;
}

/// Loads or generates the cloud; estimates weights on request.
PointCloudDomain load_domain(const Common& c, std::optional<SimplicialMesh>* mesh_out = nullptr) {
    if (c.input.empty() || is_mesh_path(c.input)) {
        SimplicialMesh mesh = c.input.empty() ? generated_mesh(c.domain, c.level, !c.no_snap) : load_mesh(c.input);
        auto cloud = mesh_to_cloud(mesh);
        if (mesh_out) *mesh_out = std::move(mesh);
        return cloud;
    }
    auto cloud = load_cloud(c.input);
    if (!cloud.has_weights() && c.estimate) {
        const int k = c.k > 0 ? c.k : cloud.intrinsic_dim;
        auto est = estimate_weights(cloud.points, cloud.boundary_idx, k, estimate_config(c));
        cloud.volume_weights = std::move(est.V);
        if (!cloud.boundary_idx.empty()) cloud.boundary_weights = std::move(est.A);
    }
    return cloud;
}

RadialTruth truth_for(const PointCloudDomain& cloud) { return RadialTruth{cloud.intrinsic_dim}; }

void write_text(const std::string& path, const std::string& text) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(path);
    if (!f) throw ConfigError("cannot open '" + path + "' for writing");
    f << text;
}

void write_report(const std::string& path, const json& j) {
    if (path.empty()) return;
    write_text(path, j.dump(2) + "\n");
}

json parameters_json(const Common& c, const PointCloudDomain& cloud, const PimSystem& sys, double delta,
                     BoundaryKind kind) {
    json p;
    p["domain"] = c.input.empty() ? c.domain : c.input;
    if (c.input.empty()) p["level"] = c.level;
    p["n"] = cloud.size();
    p["m"] = cloud.boundary_size();
    p["intrinsic_dim"] = cloud.intrinsic_dim;
    p["kernel"] = to_string(sys.spec.family);
    p["t"] = sys.spec.t;
    p["sqrt_t"] = std::sqrt(sys.spec.t);
    p["delta"] = delta;
    p["t_factor"] = std::sqrt(sys.spec.t) / delta;
    p["cutoff"] = sys.spec.cutoff_r;
    p["support_radius"] = sys.support_radius;
    p["beta"] = c.beta;
    p["nn"] = c.nn > 0 ? c.nn : WeightEstimateConfig::default_nn(cloud.intrinsic_dim);
    p["boundary"] = to_string(kind);
    return p;
}

PimRunConfig run_config(const Common& c, BoundaryKind kind) {
    PimRunConfig cfg;
    cfg.kind = kind;
    cfg.kernel = parse_kernel_family(c.kernel);
    cfg.t_factor = c.t_factor;
    cfg.t = c.t;
    cfg.beta = c.beta;
    cfg.nn = c.nn;
    cfg.solver.tol = c.tol;
    return cfg;
}

// ---- weights ----------------------------------------------------------------

struct WeightsArgs {
    Common c;
    std::string json_out;
};

int cmd_weights(const WeightsArgs& a) {
    if (a.c.input.empty()) throw ConfigError("weights needs --input");
    PointCloudDomain cloud;
    double delta = 0.0;
    if (is_mesh_path(a.c.input)) {
        cloud = mesh_to_cloud(load_mesh(a.c.input));
        delta = compute_delta(cloud.points, a.c.nn > 0 ? a.c.nn : WeightEstimateConfig::default_nn(cloud.intrinsic_dim));
    } else {
        cloud = load_cloud(a.c.input);
        if (!a.c.estimate && !cloud.has_weights())
            throw ConfigError("'" + a.c.input + "' carries no weights; pass --estimate to compute them");
        const int k = a.c.k > 0 ? a.c.k : cloud.intrinsic_dim;
        if (a.c.estimate) {
            auto est = estimate_weights(cloud.points, cloud.boundary_idx, k, estimate_config(a.c));
            cloud.volume_weights = std::move(est.V);
            if (!cloud.boundary_idx.empty()) cloud.boundary_weights = std::move(est.A);
            else cloud.boundary_weights.reset();
            delta = est.delta;
        } else {
            delta = compute_delta(cloud.points, a.c.nn > 0 ? a.c.nn : WeightEstimateConfig::default_nn(k));
        }
    }
    if (!a.c.out.empty()) save_cloud(cloud, a.c.out);
    json j;
    j["schema_version"] = kSchemaVersion;
    j["delta"] = delta;
    j["V"] = std::vector<double>(cloud.volume_weights->begin(), cloud.volume_weights->end());
    j["A"] = cloud.boundary_weights ? std::vector<double>(cloud.boundary_weights->begin(), cloud.boundary_weights->end())
                                    : std::vector<double>{};
    std::string json_path = a.json_out;
    if (json_path.empty() && !a.c.out.empty()) json_path = a.c.out + ".json";
    if (!json_path.empty()) write_text(json_path, j.dump() + "\n");
    std::printf("delta %s\n", num(delta).c_str());
    return ok;
}

// ---- solve ------------------------------------------------------------------

struct SolveArgs {
    Common c;
    std::string problem = "neumann";
    int max_iter = 100;
    double alm_tol = 1e-8;
    std::string history;
    double max_error = 0.0;
};

std::string solution_csv(const PointCloudDomain& cloud, const Vector& u) {
    std::string s = cloud.ambient_dim == 3 ? "point_index,x,y,z,u\n" : "point_index,x,y,u\n";
    for (Index i = 0; i < cloud.size(); ++i) {
        const Point& p = cloud.points[static_cast<std::size_t>(i)];
        s += std::to_string(i) + "," + num(p.x()) + "," + num(p.y());
        if (cloud.ambient_dim == 3) s += "," + num(p.z());
        s += "," + num(u[i]) + "\n";
    }
    return s;
}

int cmd_solve(const SolveArgs& a) {
    const auto t0 = Clock::now();
    const BoundaryKind kind = a.problem == "neumann" ? BoundaryKind::neumann : BoundaryKind::dirichlet;
    const auto cloud = load_domain(a.c);
    const DomainSpec spec = domain_spec(a.c.domain);
    PimRunConfig cfg = run_config(a.c, kind);
    double delta = 0.0;
    const double t = resolve_t(cloud, cfg, delta);
    const auto t_assemble = Clock::now();
    const PimSystem sys = assemble(cloud, KernelSpec::make(cfg.kernel, t));
    const double assemble_s = seconds_since(t_assemble);
    for (const auto& w : sys.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
    if (!a.c.dump_matrices.empty()) dump_matrices(sys, a.c.dump_matrices);

    const RadialTruth truth = truth_for(cloud);
    const Vector f = truth.sample_f(cloud.points);
    const Vector g = boundary_data(truth, cloud, spec, kind);
    const auto t_solve = Clock::now();
    SolveReport rep;
    std::vector<double> history;
    if (a.problem == "neumann") {
        rep = poisson_neumann(sys, f, g, cfg.solver);
    } else if (a.problem == "dirichlet") {
        rep = poisson_dirichlet(sys, f, g, a.c.beta, cfg.solver);
    } else {
        auto alm = alm_dirichlet(sys, f, g, a.c.beta, a.max_iter, a.alm_tol, cfg.solver);
        rep = std::move(alm.report);
        history = std::move(alm.state.boundary_residual_history);
    }
    const double solve_s = seconds_since(t_solve);
    const double error =
        weighted_l2_error(rep.u, truth.sample_u(cloud.points), sys.V, kind == BoundaryKind::neumann);

    write_text(a.c.out, solution_csv(cloud, rep.u));
    if (!a.history.empty()) {
        std::string s = "iteration,boundary_residual\n";
        for (std::size_t i = 0; i < history.size(); ++i) s += std::to_string(i + 1) + "," + num(history[i]) + "\n";
        write_text(a.history, s);
    }
    const bool converged = rep.method == SolverMethod::dense_lu || rep.relative_residual <= 10.0 * a.c.tol;
    const bool error_ok = a.max_error <= 0.0 || error <= a.max_error;

    json j;
    j["schema_version"] = kSchemaVersion;
    j["command"] = "solve";
    j["problem"] = a.problem;
    j["parameters"] = parameters_json(a.c, cloud, sys, delta, kind);
    j["solver"] = {{"method", to_string(rep.method)},
                   {"iterations", rep.iterations},
                   {"relative_residual", rep.relative_residual},
                   {"tolerance", a.c.tol},
                   {"compatibility", rep.compatibility}};
    j["truth"] = "cos(2 pi r)";
    j["relative_error"] = error;
    j["neumann_residual"] = kind == BoundaryKind::neumann ? json(neumann_residual(sys, truth.sample_u(cloud.points), f, g))
                                                         : json(nullptr);
    if (!history.empty()) j["alm_boundary_residual"] = history;
    j["warnings"] = sys.warnings;
    j["timings"] = {{"assemble_s", assemble_s}, {"solve_s", solve_s}, {"total_s", seconds_since(t0)}};
    j["check"] = {{"converged", converged}, {"max_error", a.max_error}, {"error_ok", error_ok}};
    write_report(a.c.report, j);
    std::fprintf(stderr, "n=%ld t=%s error=%s method=%s iterations=%d\n", static_cast<long>(cloud.size()),
                 num(t).c_str(), num(error).c_str(), to_string(rep.method).c_str(), rep.iterations);
    return a.c.check && !(converged && error_ok) ? check_failed : ok;
}

// ---- eigen ------------------------------------------------------------------

struct EigenArgs {
    Common c;
    std::string problem = "neumann";
    int count = 10;
    std::string vectors;
    double max_error = 0.0;
    int check_index = 5;
};

int cmd_eigen(const EigenArgs& a) {
    const auto t0 = Clock::now();
    const BoundaryKind kind = a.problem == "neumann" ? BoundaryKind::neumann : BoundaryKind::dirichlet;
    const auto cloud = load_domain(a.c);
    PimRunConfig cfg = run_config(a.c, kind);
    double delta = 0.0;
    const double t = resolve_t(cloud, cfg, delta);
    const PimSystem sys = assemble(cloud, KernelSpec::make(cfg.kernel, t));
    for (const auto& w : sys.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
    if (!a.c.dump_matrices.empty()) dump_matrices(sys, a.c.dump_matrices);
    const auto t_eig = Clock::now();
    const EigenResult r = kind == BoundaryKind::neumann ? eigen_neumann(sys, a.count)
                                                         : eigen_dirichlet(sys, a.c.beta, a.count);
    const double eig_s = seconds_since(t_eig);

    // The Bessel reference applies to the generated unit disk only.
    const bool disk_ref = a.c.input.empty() && a.c.domain == "disk" && a.count <= 60;
    const std::vector<double> ref = disk_ref ? disk_spectrum(kind, a.count) : std::vector<double>{};
    std::string s = disk_ref ? "index,eigenvalue,reference\n" : "index,eigenvalue\n";
    for (int i = 0; i < a.count; ++i) {
        s += std::to_string(i) + "," + num(r.eigenvalues[i]);
        if (disk_ref) s += "," + num(ref[static_cast<std::size_t>(i)]);
        s += "\n";
    }
    write_text(a.c.out, s);
    if (!a.vectors.empty()) {
        std::string v = "point_index";
        for (int i = 0; i < a.count; ++i) v += ",v" + std::to_string(i);
        v += "\n";
        for (Index p = 0; p < cloud.size(); ++p) {
            v += std::to_string(p);
            for (int i = 0; i < a.count; ++i) v += "," + num(r.eigenvectors(p, i));
            v += "\n";
        }
        write_text(a.vectors, v);
    }
    bool check_ok = true;
    json j;
    j["schema_version"] = kSchemaVersion;
    j["command"] = "eigen";
    j["problem"] = a.problem;
    j["parameters"] = parameters_json(a.c, cloud, sys, delta, kind);
    j["parameters"]["count"] = a.count;
    j["eigenvalues"] = std::vector<double>(r.eigenvalues.begin(), r.eigenvalues.end());
    j["max_imag_part"] = r.max_imag_part;
    if (disk_ref) {
        j["reference"] = ref;
        if (a.check_index < a.count) {
            const double e = std::abs(r.eigenvalues[a.check_index] - ref[static_cast<std::size_t>(a.check_index)]);
            j["check_index"] = a.check_index;
            j["check_error"] = e;
            check_ok = a.max_error <= 0.0 || e <= a.max_error;
        }
    } else if (a.max_error > 0.0) {
        check_ok = false; // nothing to compare against
    }
    j["timings"] = {{"eigen_s", eig_s}, {"total_s", seconds_since(t0)}};
    j["check"] = {{"passed", check_ok}, {"max_error", a.max_error}};
    write_report(a.c.report, j);
    return a.c.check && !check_ok ? check_failed : ok;
}

// ---- convergence / compare-fem ----------------------------------------------------

struct ConvergenceArgs {
    Common c;
    std::string problem = "neumann";
    int levels = 3;
    bool fem_compare = false;
    double min_slope = 0.0;
    int eigen_index = 5;
};

bool decreasing(const std::vector<double>& v) {
    for (std::size_t i = 1; i < v.size(); ++i)
        if (!(v[i] < v[i - 1])) return false;
    return true;
}

int cmd_convergence(const ConvergenceArgs& a) {
    const auto t0 = Clock::now();
    if (!a.c.input.empty()) throw ConfigError("convergence studies run on generated hierarchies; omit --input");
    const DomainSpec spec = domain_spec(a.c.domain);
    const auto meshes = generated_hierarchy(a.c.domain, a.levels, !a.c.no_snap);
    const bool eigen = a.problem.starts_with("eigen-");
    const bool alm = a.problem == "dirichlet-alm";
    const BoundaryKind kind =
        (a.problem == "neumann" || a.problem == "eigen-neumann") ? BoundaryKind::neumann : BoundaryKind::dirichlet;
    const bool fem = a.fem_compare && !eigen;
    if (fem && a.c.domain == "ball") throw ConfigError("FEM oracle supports triangle meshes only");

    std::vector<double> h, err, fem_err, cross;
    json rows = json::array();
    std::string csv = eigen ? "level,n,h,eigenvalue,reference,err_pim\n"
                            : (fem ? "level,n,h,err_pim,err_fem,pim_vs_fem\n" : "level,n,h,err_pim\n");
    const std::vector<double> ref = eigen && a.c.domain == "disk" ? disk_spectrum(kind, a.eigen_index + 1)
                                                                  : std::vector<double>{};
    if (eigen && ref.empty()) throw ConfigError("eigenvalue tracking needs the disk domain");
    for (std::size_t l = 0; l < meshes.size(); ++l) {
        const auto lt = Clock::now();
        const auto cloud = mesh_to_cloud(meshes[l]);
        PimRunConfig cfg = run_config(a.c, kind);
        cfg.alm = alm;
        h.push_back(max_edge_length(meshes[l]));
        std::string row = std::to_string(l + 1) + "," + std::to_string(cloud.size()) + "," + num(h.back());
        json jr{{"level", l + 1}, {"n", cloud.size()}, {"h", h.back()}};
        if (eigen) {
            double delta = 0.0;
            const double t = resolve_t(cloud, cfg, delta);
            const PimSystem sys = assemble(cloud, KernelSpec::make(cfg.kernel, t));
            const int count = a.eigen_index + 1;
            const auto r = kind == BoundaryKind::neumann ? eigen_neumann(sys, count)
                                                         : eigen_dirichlet(sys, a.c.beta, count);
            const double gamma = r.eigenvalues[a.eigen_index];
            err.push_back(std::abs(gamma - ref.back()));
            row += "," + num(gamma) + "," + num(ref.back()) + "," + num(err.back());
            jr["eigenvalue"] = gamma;
            jr["t"] = t;
            jr["delta"] = delta;
        } else {
            const RadialTruth truth{cloud.intrinsic_dim};
            const auto run = run_pim_poisson(cloud, spec, cfg, truth);
            err.push_back(run.error);
            row += "," + num(run.error);
            jr["t"] = run.t;
            jr["delta"] = run.delta;
            jr["iterations"] = run.report.iterations;
            jr["method"] = to_string(run.report.method);
            if (fem) {
                Vector uf;
                fem_err.push_back(run_fem_poisson(meshes[l], spec, kind, truth, &uf));
                cross.push_back(weighted_l2_error(run.u, uf, *cloud.volume_weights, kind == BoundaryKind::neumann));
                row += "," + num(fem_err.back()) + "," + num(cross.back());
                jr["err_fem"] = fem_err.back();
                jr["pim_vs_fem"] = cross.back();
            }
        }
        jr["err_pim"] = err.back();
        jr["seconds"] = seconds_since(lt);
        rows.push_back(jr);
        csv += row + "\n";
    }
    const double slope = meshes.size() >= 2 ? fit_slope(h, err) : 0.0;
    write_text(a.c.out, csv);
    std::fprintf(stderr, "slope_pim %s\n", num(slope).c_str());
    if (fem) std::fprintf(stderr, "slope_fem %s\n", num(fit_slope(h, fem_err)).c_str());

    const bool mono = decreasing(err);
    const bool check_ok = mono && slope >= a.min_slope && (!fem || decreasing(cross));
    json j;
    j["schema_version"] = kSchemaVersion;
    j["command"] = "convergence";
    j["problem"] = a.problem;
    j["domain"] = a.c.domain;
    j["kernel"] = a.c.kernel;
    j["t_factor"] = a.c.t_factor > 0.0 ? a.c.t_factor : default_t_factor(kind, a.c.domain == "ball" ? 3 : 2);
    j["beta"] = a.c.beta;
    j["rows"] = rows;
    j["slope_pim"] = slope;
    if (fem) j["slope_fem"] = fit_slope(h, fem_err);
    j["timings"] = {{"total_s", seconds_since(t0)}};
    j["check"] = {{"passed", check_ok}, {"monotone", mono}, {"min_slope", a.min_slope}};
    write_report(a.c.report, j);
    return a.c.check && !check_ok ? check_failed : ok;
}

int cmd_compare_fem(const ConvergenceArgs& a) {
    const auto t0 = Clock::now();
    if (a.c.domain == "ball") throw ConfigError("FEM oracle supports triangle meshes only");
    const DomainSpec spec = domain_spec(a.c.domain);
    const auto meshes = generated_hierarchy(a.c.domain, a.levels, !a.c.no_snap);
    std::string csv = "level,n,h,boundary,pim_vs_fem\n";
    json rows = json::array();
    bool check_ok = true;
    for (auto kind : {BoundaryKind::neumann, BoundaryKind::dirichlet}) {
        std::vector<double> rel;
        for (std::size_t l = 0; l < meshes.size(); ++l) {
            const auto cloud = mesh_to_cloud(meshes[l]);
            PimRunConfig cfg = run_config(a.c, kind);
            if (a.c.t_factor <= 0.0 && a.c.t <= 0.0) cfg.t_factor = 0.75;
            const RadialTruth truth{2};
            const auto run = run_pim_poisson(cloud, spec, cfg, truth);
            Vector uf;
            run_fem_poisson(meshes[l], spec, kind, truth, &uf);
            rel.push_back(weighted_l2_error(run.u, uf, *cloud.volume_weights, kind == BoundaryKind::neumann));
            const double h = max_edge_length(meshes[l]);
            csv += std::to_string(l + 1) + "," + std::to_string(cloud.size()) + "," + num(h) + "," + to_string(kind) +
                   "," + num(rel.back()) + "\n";
            rows.push_back({{"level", l + 1},
                            {"n", cloud.size()},
                            {"h", h},
                            {"boundary", to_string(kind)},
                            {"t", run.t},
                            {"delta", run.delta},
                            {"pim_vs_fem", rel.back()}});
        }
        check_ok = check_ok && decreasing(rel);
    }
    write_text(a.c.out, csv);
    json j;
    j["schema_version"] = kSchemaVersion;
    j["command"] = "compare-fem";
    j["domain"] = a.c.domain;
    j["rows"] = rows;
    j["timings"] = {{"total_s", seconds_since(t0)}};
    j["check"] = {{"passed", check_ok}};
    write_report(a.c.report, j);
    return a.c.check && !check_ok ? check_failed : ok;
}

void apply_thread_cap() {
#ifdef _OPENMP
    if (const char* s = std::getenv("PIM_THREADS")) {
        const int n = std::atoi(s);
        if (n > 0) omp_set_num_threads(n);
    }
#endif
}

} // namespace

int main(int argc, char** argv) {
    apply_thread_cap();
    CLI::App app{"Point Integral Method toolkit"};
    app.require_subcommand(1);

    WeightsArgs wa;
    auto* weights = app.add_subcommand("weights", "Compute quadrature weights and write an augmented PTS");
    add_common(weights, wa.c);
    weights->add_option("--json", wa.json_out, "Weights JSON path (default: <out>.json)");

    SolveArgs sa;
    auto* solve = app.add_subcommand("solve", "Solve the radial Poisson test problem");
    add_common(solve, sa.c);
    solve->add_option("--problem", sa.problem, "neumann, dirichlet or dirichlet-alm")
        ->check(CLI::IsMember({"neumann", "dirichlet", "dirichlet-alm"}));
    solve->add_option("--max-iter", sa.max_iter, "ALM iterations")->check(CLI::PositiveNumber);
    solve->add_option("--alm-tol", sa.alm_tol, "ALM stopping tolerance on the boundary residual");
    solve->add_option("--history", sa.history, "ALM residual history CSV path");
    solve->add_option("--max-error", sa.max_error, "With --check: largest accepted relative error");

    EigenArgs ea;
    auto* eigen = app.add_subcommand("eigen", "Smallest eigenpairs of the PIM Laplacian");
    add_common(eigen, ea.c);
    eigen->add_option("--problem", ea.problem, "neumann or dirichlet")
        ->check(CLI::IsMember({"neumann", "dirichlet"}));
    eigen->add_option("--count", ea.count, "Number of eigenvalues")->check(CLI::PositiveNumber);
    eigen->add_option("--vectors", ea.vectors, "Eigenvector CSV path");
    eigen->add_option("--max-error", ea.max_error, "With --check: largest accepted eigenvalue error");
    eigen->add_option("--check-index", ea.check_index, "Zero-based eigenvalue index compared by --check");

    ConvergenceArgs ca;
    auto* conv = app.add_subcommand("convergence", "Error table over a refined hierarchy");
    add_common(conv, ca.c);
    conv->add_option("--problem", ca.problem,
                     "neumann, dirichlet, dirichlet-alm, eigen-neumann or eigen-dirichlet")
        ->check(CLI::IsMember({"neumann", "dirichlet", "dirichlet-alm", "eigen-neumann", "eigen-dirichlet"}));
    conv->add_option("--levels", ca.levels, "Number of hierarchy levels")->check(CLI::PositiveNumber);
    conv->add_flag("--fem-compare", ca.fem_compare, "Add FEM error and PIM-vs-FEM columns");
    conv->add_option("--min-slope", ca.min_slope, "With --check: smallest accepted log-log slope");
    conv->add_option("--eigen-index", ca.eigen_index, "Zero-based eigenvalue tracked by eigen problems");

    ConvergenceArgs fa;
    fa.c.domain = "two-hole";
    auto* cmp = app.add_subcommand("compare-fem", "PIM vs FEM relative differences for both boundary types");
    add_common(cmp, fa.c);
    cmp->add_option("--levels", fa.levels, "Number of hierarchy levels")->check(CLI::PositiveNumber);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*weights) return cmd_weights(wa);
        if (*solve) return cmd_solve(sa);
        if (*eigen) return cmd_eigen(ea);
        if (*conv) return cmd_convergence(ca);
        if (*cmp) return cmd_compare_fem(fa);
    } catch (const NumericalError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return numerical_error;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return usage_error;
    }
    return usage_error;
}
