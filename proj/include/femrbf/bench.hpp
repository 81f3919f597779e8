#pragma once

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "femrbf/fem.hpp"
#include "femrbf/geometry.hpp"
#include "femrbf/linsolve.hpp"
#include "femrbf/metrics.hpp"
#include "femrbf/rbf.hpp"
#include "femrbf/shapeopt.hpp"
#include "femrbf/timestep.hpp"
#include "femrbf/types.hpp"

namespace femrbf {

struct OutsideDomain : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct ConfigParse : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct InsufficientPoints : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct NonPositiveValue : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// ---------------------------------------------------------------------------
// benchmark catalog
// ---------------------------------------------------------------------------

enum class Example { PDir, PDirNeuL, PUnsteady, SColliding, SUnsteadyL };
enum class Method { Fem1, Fem2, RbfMq, RbfTps };

inline bool is_stokes(Example e) {
    return e == Example::SColliding || e == Example::SUnsteadyL;
}
inline bool is_unsteady(Example e) {
    return e == Example::PUnsteady || e == Example::SUnsteadyL;
}
inline bool is_fem(Method m) { return m == Method::Fem1 || m == Method::Fem2; }

inline std::string to_string(Example e) {
    switch (e) {
        case Example::PDir: return "p-dir";
        case Example::PDirNeuL: return "p-dirneu-l";
        case Example::PUnsteady: return "p-unsteady";
        case Example::SColliding: return "s-colliding";
        case Example::SUnsteadyL: return "s-unsteady-l";
    }
    return "?";
}
inline std::string to_string(Method m) {
    switch (m) {
        case Method::Fem1: return "fem1";
        case Method::Fem2: return "fem2";
        case Method::RbfMq: return "rbf-mq";
        case Method::RbfTps: return "rbf-tps";
    }
    return "?";
}

inline Example example_from_string(const std::string& s) {
    for (Example e : {Example::PDir, Example::PDirNeuL, Example::PUnsteady,
                      Example::SColliding, Example::SUnsteadyL})
        if (to_string(e) == s) return e;
    throw ConfigParse("unknown example id: " + s);
}
inline Method method_from_string(const std::string& s) {
    for (Method m : {Method::Fem1, Method::Fem2, Method::RbfMq, Method::RbfTps})
        if (to_string(m) == s) return m;
    throw ConfigParse("unknown method id: " + s);
}

inline DomainSpec domain_of(Example e) {
    switch (e) {
        case Example::PDir:
        case Example::PUnsteady: return DomainSpec::unit_square_dirichlet();
        case Example::PDirNeuL: return DomainSpec::lshape_mixed();
        case Example::SColliding: return DomainSpec::bi_unit_square_dirichlet();
        case Example::SUnsteadyL: return DomainSpec::lshape_natural_right();
    }
    return DomainSpec::unit_square_dirichlet();
}

struct AnalyticValues {
    double u = 0.0;            // scalar examples
    double ux = 0.0, uy = 0.0, p = 0.0;  // Stokes examples
};
struct SourceValues {
    double f = 0.0;            // scalar examples
    double fx = 0.0, fy = 0.0;  // Stokes examples
};

namespace detail {
inline void check_in_domain(Example e, double x, double y) {
    if (!domain_of(e).inside_or_boundary({x, y}, 1e-9))
        throw OutsideDomain("point outside the example domain");
}
}  // namespace detail

/// Manufactured solutions of the five benchmark examples.
inline AnalyticValues analytic_solution(Example e, double x, double y, double t = 0.0) {
    detail::check_in_domain(e, x, y);
    constexpr double pi = 3.14159265358979323846;
    AnalyticValues v;
    switch (e) {
        case Example::PDir:
            v.u = std::sin(pi * x) * std::cos(pi * y / 2.0);
            break;
        case Example::PDirNeuL:
            v.u = y * std::exp(-x * x) + std::sin(pi * x) * std::cos(pi * y);
            break;
        case Example::PUnsteady:
            v.u = std::exp(-x / (y + 1.0)) + 0.8 * t;
            break;
        case Example::SColliding:
            v.ux = 20.0 * x * y * y * y;
            v.uy = 5.0 * x * x * x * x - 5.0 * y * y * y * y;
            v.p = 60.0 * x * x * y - 20.0 * y * y * y;
            break;
        case Example::SUnsteadyL:
            // pressure constant fixed to 1 so the natural boundary at x=1 balances
            v.ux = t + 1.0 - y * y * y;
            v.uy = -x * x * x + 3.0 * x * x - 3.0 * x;
            v.p = -6.0 * x * y - x + 6.0 * y + 1.0;
            break;
    }
    return v;
}

/// Gradient of the scalar manufactured solutions (Neumann data g = k grad(u).n).
inline std::array<double, 2> analytic_scalar_gradient(Example e, double x, double y,
                                                      double t = 0.0) {
    (void)t;
    constexpr double pi = 3.14159265358979323846;
    switch (e) {
        case Example::PDir:
            return {pi * std::cos(pi * x) * std::cos(pi * y / 2.0),
                    -pi / 2.0 * std::sin(pi * x) * std::sin(pi * y / 2.0)};
        case Example::PDirNeuL:
            return {-2.0 * x * y * std::exp(-x * x) + pi * std::cos(pi * x) * std::cos(pi * y),
                    std::exp(-x * x) - pi * std::sin(pi * x) * std::sin(pi * y)};
        case Example::PUnsteady: {
            const double w = std::exp(-x / (y + 1.0));
            return {-w / (y + 1.0), x * w / ((y + 1.0) * (y + 1.0))};
        }
        default:
            throw std::invalid_argument("scalar gradient requested for a Stokes example");
    }
}

/// Source terms: the printed closed forms for the Poisson examples; for the
/// Stokes examples f = du/dt - lap(u) + grad(p) evaluates to zero with the
/// given fields (cross-checked against a finite-difference operator oracle in
/// the test suite).
inline SourceValues source_term(Example e, double x, double y, double t = 0.0) {
    detail::check_in_domain(e, x, y);
    constexpr double pi = 3.14159265358979323846;
    SourceValues s;
    switch (e) {
        case Example::PDir:
            s.f = 1.25 * pi * pi * std::sin(pi * x) * std::cos(pi * y / 2.0);
            break;
        case Example::PDirNeuL:
            s.f = y * std::exp(-x * x) * (2.0 - 4.0 * x * x) +
                  2.0 * pi * pi * std::sin(pi * x) * std::cos(pi * y);
            break;
        case Example::PUnsteady: {
            const double w = std::exp(-x / (y + 1.0));
            const double yp = y + 1.0;
            s.f = 0.8 - w / (yp * yp) - x * w * (x - 2.0 * y - 2.0) / (yp * yp * yp * yp);
            break;
        }
        case Example::SColliding:
        case Example::SUnsteadyL:
            s.fx = 0.0;
            s.fy = 0.0;
            break;
    }
    return s;
}

// ---------------------------------------------------------------------------
// case specification and results
// ---------------------------------------------------------------------------

struct CaseSpec {
    Example example = Example::PDir;
    Method method = Method::Fem1;
    double dh = 0.25;  // table row key; physical spacing doubles on (-1,1)^2
    bool random_nodes = false;
    std::uint64_t seed = 1;
    std::optional<TimeConfig> time;  // defaulted for the unsteady examples
    double k = 1.0;
    int tps_beta = 4;
    std::optional<double> fixed_c;  // skip the optimizer and use this MQ c
    SearchConfig search;

    /// The colliding-flow rows are labeled with the unit-square dh values;
    /// the (-1,1)^2 domain uses their double.
    double physical_dh() const { return example == Example::SColliding ? 2.0 * dh : dh; }

    TimeConfig time_config() const { return time ? *time : TimeConfig{}; }
};

struct FieldReport {
    std::string field;  // "u" for Poisson; "u_x", "u_y", "p" for Stokes
    ErrorReport report;
};

struct ResultRow {
    CaseSpec spec;
    std::vector<FieldReport> fields;
};

struct TrendFit {
    double slope = 0.0;
    double intercept = 0.0;  // in log10(y) = slope * log10(x) + intercept
};

/// Ordinary least squares of log10(y) on log10(x).
inline TrendFit fit_trend(const std::vector<std::pair<double, double>>& points) {
    if (points.size() < 3) throw InsufficientPoints("trend fit needs at least 3 points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& [x, y] : points) {
        if (x <= 0.0 || y <= 0.0) throw NonPositiveValue("log-log fit needs positive values");
        const double lx = std::log10(x), ly = std::log10(y);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double n = static_cast<double>(points.size());
    TrendFit fit;
    fit.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    fit.intercept = (sy - fit.slope * sx) / n;
    return fit;
}

// ---------------------------------------------------------------------------
// case execution
// ---------------------------------------------------------------------------

namespace detail {

using Clock = std::chrono::steady_clock;
inline double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

inline ErrorReport make_report(double lse_v, const Eigen::VectorXd& numeric,
                               const Eigen::VectorXd& exact, const SolveReport& solve) {
    ErrorReport r;
    r.lse = lse_v;
    r.rmse = rmse(numeric, exact);
    r.mre = max_relative_error(numeric, exact);
    r.condition_number = solve.condition_number;
    r.cn_overflow = solve.overflow;
    return r;
}

inline Eigen::VectorXd nodal_exact(const std::vector<Point2>& pts,
                                   const std::function<double(double, double)>& f) {
    Eigen::VectorXd v(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i)
        v(static_cast<Eigen::Index>(i)) = f(pts[i].x, pts[i].y);
    return v;
}

// ---- FEM Poisson (steady and transient) ----

inline ResultRow run_fem_poisson(const CaseSpec& spec) {
    const Example ex = spec.example;
    const DomainSpec domain = domain_of(ex);
    const int order = spec.method == Method::Fem2 ? 2 : 1;
    const TriMesh mesh = build_structured_mesh(domain, spec.physical_dh(), order);

    const ScalarField f = [ex](double x, double y, double t) { return source_term(ex, x, y, t).f; };
    const ScalarField dir = [ex](double x, double y, double t) { return analytic_solution(ex, x, y, t).u; };
    const ScalarField neu = [ex, &domain](double x, double y, double t) {
        const auto g = analytic_scalar_gradient(ex, x, y, t);
        const Point2 n = boundary_normal(domain, {x, y});
        return g[0] * n.x + g[1] * n.y;
    };

    const auto t0 = Clock::now();
    Eigen::VectorXd u;
    SolveReport solve;
    double t_end = 0.0;
    if (!is_unsteady(ex)) {
        const AssembledSystem sys = assemble_poisson(mesh, domain, spec.k, f, dir, neu);
        auto [x, rep] = pinv_solve(sys.A, sys.b);
        u = std::move(x);
        solve = rep;
    } else {
        const TimeConfig time = spec.time_config();
        t_end = time.t_final;
        AssembledSystem sys = assemble_poisson(mesh, domain, spec.k, f, dir, neu, 0.0);
        TransientSystem transient;
        transient.steady_matrix = std::move(sys.A);
        transient.time_block = assemble_mass(mesh);
        transient.unscaled_rows = sys.dirichlet_rows;
        transient.steady_rhs = [&](double t) { return poisson_rhs(mesh, domain, f, dir, neu, t); };
        Eigen::VectorXd u0(mesh.n_nodes());
        for (int i = 0; i < mesh.n_nodes(); ++i)
            u0(i) = analytic_solution(ex, mesh.nodes[i].x, mesh.nodes[i].y, 0.0).u;
        TransientResult res = run_transient(transient, u0, time);
        u = std::move(res.final_state);
        solve = res.report;
    }
    const double runtime = seconds_since(t0);

    const auto exact = [&](double x, double y) { return analytic_solution(ex, x, y, t_end).u; };
    const double lse_v = lse(
        mesh, [&](int e, double x, double y) { return fe_interpolate(mesh, u, e, x, y); },
        exact, quad_rule(5), domain.area());
    ErrorReport rep = make_report(lse_v, u, nodal_exact(mesh.nodes, exact), solve);
    rep.runtime_s = runtime;

    ResultRow row;
    row.spec = spec;
    row.fields.push_back({"u", rep});
    return row;
}

// ---- Kansa Poisson ----

struct KansaScalarRun {
    Eigen::VectorXd alpha;
    SolveReport solve;
    double residual_inf = 0.0;
};

inline KansaScalarRun solve_kansa_poisson(const NodeCloud& cloud, const DomainSpec& domain,
                                          const RbfKind& kind, const CaseSpec& spec,
                                          const ScalarField& f, const ScalarField& dir,
                                          const ScalarField& neu) {
    KansaScalarRun run;
    if (!is_unsteady(spec.example)) {
        const KansaSystem sys = assemble_kansa_poisson(cloud, domain, kind, spec.k, f, dir, neu);
        auto [alpha, rep] = pinv_solve(sys.A, sys.b);
        const double bnorm = sys.b.lpNorm<Eigen::Infinity>();
        if (bnorm > 0.0)
            run.residual_inf = (sys.A * alpha - sys.b).lpNorm<Eigen::Infinity>() / bnorm;
        run.alpha = std::move(alpha);
        run.solve = rep;
        return run;
    }
    const TimeConfig time = spec.time_config();
    KansaSystem sys = assemble_kansa_poisson(cloud, domain, kind, spec.k, f, dir, neu, 0.0);
    TransientSystem transient;
    transient.steady_matrix = std::move(sys.A);
    transient.time_block = kansa_time_matrix(cloud, kind);
    transient.unscaled_rows.resize(cloud.n_dirichlet + cloud.n_neumann);
    for (int i = 0; i < cloud.n_dirichlet + cloud.n_neumann; ++i) transient.unscaled_rows[i] = i;
    transient.steady_rhs = [&](double t) { return kansa_poisson_rhs(cloud, f, dir, neu, t); };

    // alpha(0) interpolates the initial condition
    Eigen::MatrixXd interp(cloud.total(), cloud.total());
    for (int i = 0; i < cloud.total(); ++i)
        for (int j = 0; j < cloud.total(); ++j)
            interp(i, j) = rbf_eval(kind, dist(cloud.points[i], cloud.points[j]));
    Eigen::VectorXd u0(cloud.total());
    for (int i = 0; i < cloud.total(); ++i)
        u0(i) = analytic_solution(spec.example, cloud.points[i].x, cloud.points[i].y, 0.0).u;
    const Eigen::VectorXd alpha0 = pinv_solve(interp, u0).first;

    TransientResult res = run_transient(transient, alpha0, time);
    run.alpha = std::move(res.final_state);
    run.solve = res.report;
    run.residual_inf = res.max_step_residual;
    return run;
}

inline ResultRow run_kansa_poisson(const CaseSpec& spec) {
    const Example ex = spec.example;
    const DomainSpec domain = domain_of(ex);
    const NodeCloud cloud =
        spec.random_nodes
            ? build_random_cloud(domain, spec.physical_dh(), {spec.seed, -1.0})
            : build_node_cloud(domain, spec.physical_dh());
    const TriMesh imaginary = triangulate_cloud(cloud);

    const ScalarField f = [ex](double x, double y, double t) { return source_term(ex, x, y, t).f; };
    const ScalarField dir = [ex](double x, double y, double t) { return analytic_solution(ex, x, y, t).u; };
    const ScalarField neu = [ex, &domain](double x, double y, double t) {
        const auto g = analytic_scalar_gradient(ex, x, y, t);
        const Point2 n = neumann_normal(domain, {x, y});
        return g[0] * n.x + g[1] * n.y;
    };
    const double t_end = is_unsteady(ex) ? spec.time_config().t_final : 0.0;
    const auto exact = [&](double x, double y) { return analytic_solution(ex, x, y, t_end).u; };
    const Eigen::VectorXd exact_nodes = nodal_exact(cloud.points, exact);

    const auto t0 = Clock::now();
    std::optional<double> osp;
    RbfKind kind = RbfKind::tps(spec.tps_beta);
    if (spec.method == Method::RbfMq) {
        if (spec.fixed_c) {
            kind = RbfKind::mq(*spec.fixed_c);
        } else {
            const OptResult opt = optimize_shape_parameter(
                [&](double c) {
                    const KansaScalarRun run = solve_kansa_poisson(
                        cloud, domain, RbfKind::mq(c), spec, f, dir, neu);
                    const Coefficients coeffs{run.alpha, cloud.points, RbfKind::mq(c)};
                    return rmse(evaluate_solution(coeffs, cloud.points), exact_nodes);
                },
                spec.search);
            kind = RbfKind::mq(opt.c_star);
            osp = opt.c_star;
        }
    }
    const KansaScalarRun run = solve_kansa_poisson(cloud, domain, kind, spec, f, dir, neu);
    const double runtime = seconds_since(t0);

    const Coefficients coeffs{run.alpha, cloud.points, kind};
    const double lse_v = lse(
        imaginary, [&](int, double x, double y) { return evaluate_at(coeffs, x, y); },
        exact, quad_rule(5), domain.area());

    ErrorReport rep = make_report(lse_v, evaluate_solution(coeffs, cloud.points), exact_nodes,
                                  run.solve);
    rep.runtime_s = runtime;
    rep.residual_inf = run.residual_inf;
    rep.residual_flagged = !(run.solve.condition_number < 1e14);
    if (spec.method == Method::RbfMq)
        rep.shape_parameter = spec.fixed_c ? *spec.fixed_c : osp;
    else
        rep.tps_beta = spec.tps_beta;

    ResultRow row;
    row.spec = spec;
    row.fields.push_back({"u", rep});
    return row;
}

// ---- FEM Stokes ----

inline int find_node(const std::vector<Point2>& pts, const Point2& p) {
    for (std::size_t i = 0; i < pts.size(); ++i)
        if (dist(pts[i], p) < kGeomTol) return static_cast<int>(i);
    throw PinNodeNotFound("pin point is not a mesh node");
}

inline ResultRow run_fem_stokes(const CaseSpec& spec) {
    const Example ex = spec.example;
    const DomainSpec domain = domain_of(ex);
    const double dh = spec.physical_dh();
    const TriMesh mesh_v = build_structured_mesh(domain, dh, 2);
    const TriMesh mesh_p = build_structured_mesh(domain, dh, 1);

    const VectorField f = [ex](double x, double y, double t) {
        const SourceValues s = source_term(ex, x, y, t);
        return std::array<double, 2>{s.fx, s.fy};
    };
    const VectorField dir = [ex](double x, double y, double t) {
        const AnalyticValues v = analytic_solution(ex, x, y, t);
        return std::array<double, 2>{v.ux, v.uy};
    };
    // all-Dirichlet velocity leaves the pressure level free; pin the exact
    // value at the upper-right node. A natural segment needs no pin.
    std::optional<PressurePin> pin;
    if (ex == Example::SColliding)
        pin = PressurePin{find_node(mesh_p.nodes, {1.0, 1.0}),
                          analytic_solution(ex, 1.0, 1.0).p};

    const int nu = mesh_v.n_nodes(), np = mesh_p.n_nodes();
    const auto t0 = Clock::now();
    Eigen::VectorXd state;
    SolveReport solve;
    double t_end = 0.0;
    if (!is_unsteady(ex)) {
        const AssembledSystem sys = assemble_stokes(mesh_v, mesh_p, domain, f, dir, pin);
        auto [x, rep] = pinv_solve(sys.A, sys.b);
        state = std::move(x);
        solve = rep;
    } else {
        const TimeConfig time = spec.time_config();
        t_end = time.t_final;
        AssembledSystem sys = assemble_stokes(mesh_v, mesh_p, domain, f, dir, pin, 0.0);
        TransientSystem transient;
        transient.steady_matrix = std::move(sys.A);
        transient.time_block = Eigen::MatrixXd::Zero(2 * nu + np, 2 * nu + np);
        const Eigen::MatrixXd mass = assemble_mass(mesh_v);
        transient.time_block.block(0, 0, nu, nu) = mass;
        transient.time_block.block(nu, nu, nu, nu) = mass;
        transient.unscaled_rows = sys.dirichlet_rows;
        for (int i = 0; i < np; ++i) transient.unscaled_rows.push_back(2 * nu + i);
        transient.steady_rhs = [&, pin](double t) {
            return stokes_rhs(mesh_v, np, f, dir, pin, t);
        };
        Eigen::VectorXd s0(2 * nu + np);
        for (int i = 0; i < nu; ++i) {
            const AnalyticValues v =
                analytic_solution(ex, mesh_v.nodes[i].x, mesh_v.nodes[i].y, 0.0);
            s0(i) = v.ux;
            s0(nu + i) = v.uy;
        }
        for (int i = 0; i < np; ++i)
            s0(2 * nu + i) = analytic_solution(ex, mesh_p.nodes[i].x, mesh_p.nodes[i].y, 0.0).p;
        TransientResult res = run_transient(transient, s0, time);
        state = std::move(res.final_state);
        solve = res.report;
    }
    const double runtime = seconds_since(t0);

    const Eigen::VectorXd ux = state.head(nu), uy = state.segment(nu, nu), pr = state.tail(np);
    const QuadratureRule rule = quad_rule(5);
    ResultRow row;
    row.spec = spec;
    const struct {
        const char* name;
        const Eigen::VectorXd* values;
        const TriMesh* mesh;
        std::function<double(double, double)> exact;
    } fields[3] = {
        {"u_x", &ux, &mesh_v, [&](double x, double y) { return analytic_solution(ex, x, y, t_end).ux; }},
        {"u_y", &uy, &mesh_v, [&](double x, double y) { return analytic_solution(ex, x, y, t_end).uy; }},
        {"p", &pr, &mesh_p, [&](double x, double y) { return analytic_solution(ex, x, y, t_end).p; }},
    };
    for (const auto& fld : fields) {
        const TriMesh& m = *fld.mesh;
        const double lse_v = lse(
            m, [&](int e, double x, double y) { return fe_interpolate(m, *fld.values, e, x, y); },
            fld.exact, rule, domain.area());
        ErrorReport rep = make_report(lse_v, *fld.values, nodal_exact(m.nodes, fld.exact), solve);
        rep.runtime_s = runtime;
        row.fields.push_back({fld.name, rep});
    }
    return row;
}

// ---- Kansa Stokes ----

struct KansaStokesRun {
    Eigen::VectorXd alpha;  // [alpha_ux; alpha_uy; alpha_p]
    SolveReport solve;
    double residual_inf = 0.0;
};

inline KansaStokesRun solve_kansa_stokes(const NodeCloud& cloud, const DomainSpec& domain,
                                         const RbfKind& kind, const CaseSpec& spec,
                                         const VectorField& f, const VectorField& dir,
                                         std::optional<std::pair<int, double>> pin) {
    KansaStokesRun run;
    const int n = cloud.total();
    if (!is_unsteady(spec.example)) {
        const KansaSystem sys = assemble_kansa_stokes(cloud, domain, kind, f, dir, pin);
        auto [alpha, rep] = pinv_solve(sys.A, sys.b);
        const double bnorm = sys.b.lpNorm<Eigen::Infinity>();
        if (bnorm > 0.0)
            run.residual_inf = (sys.A * alpha - sys.b).lpNorm<Eigen::Infinity>() / bnorm;
        run.alpha = std::move(alpha);
        run.solve = rep;
        return run;
    }
    const TimeConfig time = spec.time_config();
    KansaSystem sys = assemble_kansa_stokes(cloud, domain, kind, f, dir, pin, 0.0);
    TransientSystem transient;
    transient.steady_matrix = std::move(sys.A);
    transient.time_block = Eigen::MatrixXd::Zero(3 * n, 3 * n);
    const Eigen::MatrixXd mk = kansa_time_matrix(cloud, kind);
    transient.time_block.block(0, 0, n, n) = mk;
    transient.time_block.block(n, n, n, n) = mk;
    // boundary-condition rows in both momentum blocks plus all continuity rows
    for (int i = 0; i < n; ++i) {
        if (cloud.tag_of(i) != NodeTag::Interior) {
            transient.unscaled_rows.push_back(i);
            transient.unscaled_rows.push_back(n + i);
        }
        transient.unscaled_rows.push_back(2 * n + i);
    }
    transient.steady_rhs = [&, pin](double t) { return kansa_stokes_rhs(cloud, f, dir, pin, t); };

    Eigen::MatrixXd interp(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            interp(i, j) = rbf_eval(kind, dist(cloud.points[i], cloud.points[j]));
    const PinvSolver interp_solver(interp);
    Eigen::VectorXd ux0(n), uy0(n), p0(n);
    for (int i = 0; i < n; ++i) {
        const AnalyticValues v =
            analytic_solution(spec.example, cloud.points[i].x, cloud.points[i].y, 0.0);
        ux0(i) = v.ux;
        uy0(i) = v.uy;
        p0(i) = v.p;
    }
    Eigen::VectorXd alpha0(3 * n);
    alpha0.head(n) = interp_solver.solve(ux0);
    alpha0.segment(n, n) = interp_solver.solve(uy0);
    alpha0.tail(n) = interp_solver.solve(p0);

    TransientResult res = run_transient(transient, alpha0, time);
    run.alpha = std::move(res.final_state);
    run.solve = res.report;
    run.residual_inf = res.max_step_residual;
    return run;
}

inline ResultRow run_kansa_stokes(const CaseSpec& spec) {
    const Example ex = spec.example;
    const DomainSpec domain = domain_of(ex);
    const double dh = spec.physical_dh();
    const NodeCloud cloud = spec.random_nodes
                                ? build_random_cloud(domain, dh, {spec.seed, -1.0})
                                : build_node_cloud(domain, dh);
    const TriMesh imaginary = triangulate_cloud(cloud);

    const VectorField f = [ex](double x, double y, double t) {
        const SourceValues s = source_term(ex, x, y, t);
        return std::array<double, 2>{s.fx, s.fy};
    };
    const VectorField dir = [ex](double x, double y, double t) {
        const AnalyticValues v = analytic_solution(ex, x, y, t);
        return std::array<double, 2>{v.ux, v.uy};
    };
    std::optional<std::pair<int, double>> pin;
    if (ex == Example::SColliding)
        pin = std::make_pair(find_node(cloud.points, {1.0, 1.0}),
                             analytic_solution(ex, 1.0, 1.0).p);

    const double t_end = is_unsteady(ex) ? spec.time_config().t_final : 0.0;
    const int n = cloud.total();
    const auto exact_ux = [&](double x, double y) { return analytic_solution(ex, x, y, t_end).ux; };
    const auto exact_uy = [&](double x, double y) { return analytic_solution(ex, x, y, t_end).uy; };
    const auto exact_p = [&](double x, double y) { return analytic_solution(ex, x, y, t_end).p; };
    const Eigen::VectorXd ex_ux = nodal_exact(cloud.points, exact_ux);
    const Eigen::VectorXd ex_uy = nodal_exact(cloud.points, exact_uy);
    const Eigen::VectorXd ex_p = nodal_exact(cloud.points, exact_p);

    const auto t0 = Clock::now();
    std::optional<double> osp;
    RbfKind kind = RbfKind::tps(spec.tps_beta);
    if (spec.method == Method::RbfMq) {
        if (spec.fixed_c) {
            kind = RbfKind::mq(*spec.fixed_c);
        } else {
            // velocity errors are prioritized: objective is the sum of the
            // velocity RMSEs
            const OptResult opt = optimize_shape_parameter(
                [&](double c) {
                    const RbfKind cand = RbfKind::mq(c);
                    const KansaStokesRun run =
                        solve_kansa_stokes(cloud, domain, cand, spec, f, dir, pin);
                    const Coefficients cux{run.alpha.head(n), cloud.points, cand};
                    const Coefficients cuy{run.alpha.segment(n, n), cloud.points, cand};
                    return rmse(evaluate_solution(cux, cloud.points), ex_ux) +
                           rmse(evaluate_solution(cuy, cloud.points), ex_uy);
                },
                spec.search);
            kind = RbfKind::mq(opt.c_star);
            osp = opt.c_star;
        }
    }
    const KansaStokesRun run = solve_kansa_stokes(cloud, domain, kind, spec, f, dir, pin);
    const double runtime = seconds_since(t0);

    const Coefficients cux{run.alpha.head(n), cloud.points, kind};
    const Coefficients cuy{run.alpha.segment(n, n), cloud.points, kind};
    const Coefficients cp{run.alpha.tail(n), cloud.points, kind};
    const QuadratureRule rule = quad_rule(5);

    ResultRow row;
    row.spec = spec;
    const struct {
        const char* name;
        const Coefficients* coeffs;
        const Eigen::VectorXd* exact_nodes;
        std::function<double(double, double)> exact;
    } fields[3] = {{"u_x", &cux, &ex_ux, exact_ux},
                   {"u_y", &cuy, &ex_uy, exact_uy},
                   {"p", &cp, &ex_p, exact_p}};
    for (const auto& fld : fields) {
        const double lse_v = lse(
            imaginary,
            [&](int, double x, double y) { return evaluate_at(*fld.coeffs, x, y); }, fld.exact,
            rule, domain.area());
        ErrorReport rep = make_report(lse_v, evaluate_solution(*fld.coeffs, cloud.points),
                                      *fld.exact_nodes, run.solve);
        rep.runtime_s = runtime;
        rep.residual_inf = run.residual_inf;
        rep.residual_flagged = !(run.solve.condition_number < 1e14);
        if (spec.method == Method::RbfMq)
            rep.shape_parameter = spec.fixed_c ? *spec.fixed_c : osp;
        else
            rep.tps_beta = spec.tps_beta;
        row.fields.push_back({fld.name, rep});
    }
    return row;
}

}  // namespace detail

/// Executes one benchmark configuration end to end: geometry, assembly,
/// optional shape-parameter optimization, solve or time march, and the error
/// metrics of the comparison tables. Runtime covers assembly and solves
/// (including the optimizer's solves); pre/postprocessing is excluded.
inline ResultRow run_case(const CaseSpec& spec) {
    if (spec.random_nodes &&
        (is_fem(spec.method) ||
         (spec.example != Example::PDirNeuL && spec.example != Example::SUnsteadyL)))
        throw std::invalid_argument(
            "random nodes are only valid for RBF methods on the L-shaped examples");
    if (is_stokes(spec.example))
        return is_fem(spec.method) ? detail::run_fem_stokes(spec)
                                   : detail::run_kansa_stokes(spec);
    return is_fem(spec.method) ? detail::run_fem_poisson(spec)
                               : detail::run_kansa_poisson(spec);
}

// ---------------------------------------------------------------------------
// suite orchestration: config parsing, CSV tables, convergence bundles
// ---------------------------------------------------------------------------

inline CaseSpec case_from_json(const nlohmann::json& j) {
    CaseSpec spec;
    spec.example = example_from_string(j.at("example").get<std::string>());
    spec.method = method_from_string(j.at("method").get<std::string>());
    spec.dh = j.at("dh").get<double>();
    spec.random_nodes = j.value("random", false);
    spec.seed = j.value("seed", std::uint64_t{1});
    spec.k = j.value("k", 1.0);
    spec.tps_beta = j.value("tps_beta", 4);
    if (j.contains("fixed_c")) spec.fixed_c = j.at("fixed_c").get<double>();
    if (j.contains("tf") || j.contains("dt")) {
        TimeConfig t;
        t.t_final = j.value("tf", 50.0);
        t.dt = j.value("dt", 0.01);
        spec.time = t;
    }
    return spec;
}

inline std::vector<CaseSpec> parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigParse("cannot open config file: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        const std::size_t line =
            1 + std::count(text.begin(), text.begin() + std::min(e.byte, text.size()), '\n');
        throw ConfigParse("config parse error at line " + std::to_string(line) + ": " + e.what());
    }
    if (!j.is_array()) throw ConfigParse("config must be a JSON list of cases");
    std::vector<CaseSpec> cases;
    try {
        for (const auto& item : j) cases.push_back(case_from_json(item));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigParse(std::string("config field error: ") + e.what());
    }
    return cases;
}

inline std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

inline void write_case_csv(std::ostream& os, const std::vector<ResultRow>& rows) {
    os << "dh,method,field,lse,rmse,mre,cn,rt,osp,tps_beta\n";
    for (const auto& row : rows) {
        for (const auto& fld : row.fields) {
            const ErrorReport& r = fld.report;
            os << sci(row.spec.dh) << ',' << to_string(row.spec.method) << ',' << fld.field
               << ',' << sci(r.lse) << ',' << sci(r.rmse) << ',' << sci(r.mre) << ','
               << (r.cn_overflow ? std::string("overflow") : sci(r.condition_number)) << ','
               << sci(r.runtime_s) << ','
               << (r.shape_parameter ? sci(*r.shape_parameter) : std::string()) << ','
               << (r.tps_beta ? std::to_string(*r.tps_beta) : std::string()) << '\n';
        }
    }
}

/// Runs every case, writes one CSV per example plus a JSON convergence bundle
/// (dh vs LSE series per method and field). Cases execute in config order;
/// outputs are grouped deterministically.
inline std::vector<ResultRow> run_suite(const std::vector<CaseSpec>& cases,
                                        const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    std::vector<ResultRow> rows;
    rows.reserve(cases.size());
    for (const auto& c : cases) rows.push_back(run_case(c));

    std::map<std::string, std::vector<ResultRow>> by_example;
    for (const auto& row : rows) by_example[to_string(row.spec.example)].push_back(row);

    for (const auto& [example, group] : by_example) {
        std::ofstream csv(fs::path(out_dir) / ("table_" + example + ".csv"));
        write_case_csv(csv, group);
    }

    nlohmann::json bundle = nlohmann::json::array();
    for (const auto& [example, group] : by_example) {
        std::map<std::pair<std::string, std::string>, std::vector<std::pair<double, double>>>
            series;
        for (const auto& row : group)
            for (const auto& fld : row.fields)
                series[{to_string(row.spec.method), fld.field}].emplace_back(row.spec.dh,
                                                                             fld.report.lse);
        nlohmann::json jex;
        jex["example"] = example;
        jex["series"] = nlohmann::json::array();
        for (auto& [key, pts] : series) {
            std::sort(pts.begin(), pts.end(),
                      [](const auto& a, const auto& b) { return a.first > b.first; });
            nlohmann::json s;
            s["method"] = key.first;
            s["field"] = key.second;
            s["points"] = nlohmann::json::array();
            for (const auto& [dh, lse_v] : pts) s["points"].push_back({dh, lse_v});
            jex["series"].push_back(s);
        }
        bundle.push_back(jex);
    }
    std::ofstream(fs::path(out_dir) / "convergence.json") << bundle.dump(2) << '\n';
    return rows;
}

inline std::vector<ResultRow> run_suite_file(const std::string& config_path,
                                             const std::string& out_dir) {
    return run_suite(parse_config(config_path), out_dir);
}

}  // namespace femrbf
