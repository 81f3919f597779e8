#pragma once

#include <Eigen/Dense>
#include <array>
#include <map>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "femrbf/geometry.hpp"
#include "femrbf/quadrature.hpp"
#include "femrbf/types.hpp"

namespace femrbf {

struct OutsideReferenceElement : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Nodal basis on the reference triangle. Order 1: vertex hat functions.
/// Order 2: vertices then edge midpoints (m01, m12, m20).
struct ShapeEval {
    int n = 0;
    std::array<double, 6> value{};
    std::array<std::array<double, 2>, 6> grad{};  // reference gradients
};

inline ShapeEval shape_eval(int order, const Point2& ref, bool check_inside = true) {
    const double xi = ref.x, eta = ref.y;
    if (check_inside && (xi < -kGeomTol || eta < -kGeomTol || xi + eta > 1.0 + kGeomTol))
        throw OutsideReferenceElement("reference point outside the unit triangle");
    ShapeEval s;
    const double l1 = 1.0 - xi - eta, l2 = xi, l3 = eta;
    static constexpr std::array<std::array<double, 2>, 3> dl{{{-1, -1}, {1, 0}, {0, 1}}};
    if (order == 1) {
        s.n = 3;
        s.value = {l1, l2, l3};
        s.grad[0] = dl[0];
        s.grad[1] = dl[1];
        s.grad[2] = dl[2];
        return s;
    }
    if (order != 2) throw std::invalid_argument("shape order must be 1 or 2");
    s.n = 6;
    const std::array<double, 3> l{l1, l2, l3};
    for (int i = 0; i < 3; ++i) {
        s.value[i] = l[i] * (2.0 * l[i] - 1.0);
        s.grad[i] = {(4.0 * l[i] - 1.0) * dl[i][0], (4.0 * l[i] - 1.0) * dl[i][1]};
    }
    static constexpr std::array<std::pair<int, int>, 3> edges{{{0, 1}, {1, 2}, {2, 0}}};
    for (int m = 0; m < 3; ++m) {
        const auto [i, j] = edges[m];
        s.value[3 + m] = 4.0 * l[i] * l[j];
        s.grad[3 + m] = {4.0 * (l[i] * dl[j][0] + l[j] * dl[i][0]),
                         4.0 * (l[i] * dl[j][1] + l[j] * dl[i][1])};
    }
    return s;
}

enum class Layout { PoissonScalar, StokesBlock };

struct AssembledSystem {
    Eigen::MatrixXd A;
    Eigen::VectorXd b;
    Layout layout = Layout::PoissonScalar;
    int n_u = 0;  // velocity dofs per component (StokesBlock)
    int n_p = 0;  // pressure dofs (StokesBlock)
    std::vector<int> dirichlet_rows;  // rows replaced by boundary conditions
};

namespace detail {

struct ElementMap {
    Point2 origin;
    double j00, j01, j10, j11;  // columns (p1-p0), (p2-p0)
    double det;

    explicit ElementMap(const TriMesh& mesh, const std::array<int, 6>& t) {
        const Point2 &p0 = mesh.nodes[t[0]], &p1 = mesh.nodes[t[1]], &p2 = mesh.nodes[t[2]];
        origin = p0;
        j00 = p1.x - p0.x;
        j01 = p2.x - p0.x;
        j10 = p1.y - p0.y;
        j11 = p2.y - p0.y;
        det = j00 * j11 - j01 * j10;
    }
    Point2 to_physical(const Point2& ref) const {
        return {origin.x + j00 * ref.x + j01 * ref.y, origin.y + j10 * ref.x + j11 * ref.y};
    }
    Point2 to_reference(const Point2& phys) const {
        const double rx = phys.x - origin.x, ry = phys.y - origin.y;
        return {(j11 * rx - j01 * ry) / det, (-j10 * rx + j00 * ry) / det};
    }
    // physical gradient = J^{-T} * reference gradient
    std::array<double, 2> grad_to_physical(const std::array<double, 2>& g) const {
        return {(j11 * g[0] - j10 * g[1]) / det, (-j01 * g[0] + j00 * g[1]) / det};
    }
};

/// Boundary edges (vertex pair + optional midpoint), each owned by exactly
/// one triangle.
struct BoundaryEdge {
    int a, b;       // vertex nodes
    int mid = -1;   // edge midpoint node (order 2)
};

inline std::vector<BoundaryEdge> boundary_edges(const TriMesh& mesh) {
    std::map<std::pair<int, int>, std::pair<int, BoundaryEdge>> count;
    for (const auto& t : mesh.triangles) {
        for (int e = 0; e < 3; ++e) {
            const int a = t[e], b = t[(e + 1) % 3];
            BoundaryEdge edge{a, b, mesh.order == 2 ? t[3 + e] : -1};
            auto key = std::minmax(a, b);
            auto it = count.find(key);
            if (it == count.end())
                count.emplace(key, std::make_pair(1, edge));
            else
                it->second.first++;
        }
    }
    std::vector<BoundaryEdge> out;
    for (const auto& [key, v] : count)
        if (v.first == 1) out.push_back(v.second);
    return out;
}

}  // namespace detail

/// Evaluate the finite element interpolant of nodal values inside element e.
inline double fe_interpolate(const TriMesh& mesh, const Eigen::VectorXd& values, int e,
                             double x, double y) {
    const auto& t = mesh.triangles[e];
    const detail::ElementMap map(mesh, t);
    const ShapeEval s = shape_eval(mesh.order, map.to_reference({x, y}), false);
    double u = 0.0;
    for (int i = 0; i < s.n; ++i) u += s.value[i] * values(t[i]);
    return u;
}

inline Eigen::MatrixXd assemble_stiffness(const TriMesh& mesh, double k = 1.0) {
    const int n = mesh.n_nodes();
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    const QuadratureRule rule = quad_rule(5);
    const int nb = mesh.nodes_per_element();
    for (const auto& t : mesh.triangles) {
        const detail::ElementMap map(mesh, t);
        for (int q = 0; q < rule.size(); ++q) {
            const ShapeEval s = shape_eval(mesh.order, rule.points[q], false);
            std::array<std::array<double, 2>, 6> gx;
            for (int i = 0; i < nb; ++i) gx[i] = map.grad_to_physical(s.grad[i]);
            const double scale = k * rule.weights[q] * std::abs(map.det);
            for (int i = 0; i < nb; ++i)
                for (int j = 0; j < nb; ++j)
                    a(t[i], t[j]) += scale * (gx[i][0] * gx[j][0] + gx[i][1] * gx[j][1]);
        }
    }
    return a;
}

inline Eigen::MatrixXd assemble_mass(const TriMesh& mesh) {
    const int n = mesh.n_nodes();
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    const QuadratureRule rule = quad_rule(5);
    const int nb = mesh.nodes_per_element();
    for (const auto& t : mesh.triangles) {
        const detail::ElementMap map(mesh, t);
        for (int q = 0; q < rule.size(); ++q) {
            const ShapeEval s = shape_eval(mesh.order, rule.points[q], false);
            const double scale = rule.weights[q] * std::abs(map.det);
            for (int i = 0; i < nb; ++i)
                for (int j = 0; j < nb; ++j)
                    m(t[i], t[j]) += scale * s.value[i] * s.value[j];
        }
    }
    return m;
}

inline Eigen::VectorXd assemble_load(const TriMesh& mesh, const ScalarField& f, double t) {
    Eigen::VectorXd b = Eigen::VectorXd::Zero(mesh.n_nodes());
    const QuadratureRule rule = quad_rule(5);
    const int nb = mesh.nodes_per_element();
    for (const auto& tri : mesh.triangles) {
        const detail::ElementMap map(mesh, tri);
        for (int q = 0; q < rule.size(); ++q) {
            const ShapeEval s = shape_eval(mesh.order, rule.points[q], false);
            const Point2 xq = map.to_physical(rule.points[q]);
            const double scale = rule.weights[q] * std::abs(map.det) * f(xq.x, xq.y, t);
            for (int i = 0; i < nb; ++i) b(tri[i]) += scale * s.value[i];
        }
    }
    return b;
}

/// Surface term of the weak form: adds the integral of g*v over every
/// boundary edge that lies on a Neumann segment.
inline void add_neumann_load(Eigen::VectorXd& b, const TriMesh& mesh,
                             const DomainSpec& domain, const ScalarField& g, double t) {
    const auto edges = detail::boundary_edges(mesh);
    for (const auto& e : edges) {
        const Point2 &pa = mesh.nodes[e.a], &pb = mesh.nodes[e.b];
        const Point2 mid{0.5 * (pa.x + pb.x), 0.5 * (pa.y + pb.y)};
        const BoundarySegment* seg = nullptr;
        for (const auto& s : domain.segments)
            if (s.contains(mid)) seg = &s;
        if (seg == nullptr || seg->kind != BoundaryKind::Neumann) continue;
        const double len = dist(pa, pb);
        for (const auto& gp : gauss3_unit()) {
            const Point2 xq{pa.x + gp.s * (pb.x - pa.x), pa.y + gp.s * (pb.y - pa.y)};
            const double gv = g(xq.x, xq.y, t) * gp.w * len;
            if (mesh.order == 1) {
                b(e.a) += gv * (1.0 - gp.s);
                b(e.b) += gv * gp.s;
            } else {
                b(e.a) += gv * (1.0 - gp.s) * (1.0 - 2.0 * gp.s);
                b(e.b) += gv * gp.s * (2.0 * gp.s - 1.0);
                b(e.mid) += gv * 4.0 * gp.s * (1.0 - gp.s);
            }
        }
    }
}

/// Row replacement: Dirichlet rows become identity rows with boundary values.
inline std::vector<int> apply_dirichlet_rows(Eigen::MatrixXd& a, Eigen::VectorXd& b,
                                             const TriMesh& mesh, const ScalarField& dir,
                                             double t) {
    std::vector<int> rows;
    for (int i = 0; i < mesh.n_nodes(); ++i) {
        if (mesh.tags[i] != NodeTag::Dirichlet) continue;
        a.row(i).setZero();
        a(i, i) = 1.0;
        b(i) = dir(mesh.nodes[i].x, mesh.nodes[i].y, t);
        rows.push_back(i);
    }
    return rows;
}

inline AssembledSystem assemble_poisson(const TriMesh& mesh, const DomainSpec& domain,
                                        double k, const ScalarField& f,
                                        const ScalarField& dirichlet,
                                        const ScalarField& neumann, double t = 0.0) {
    AssembledSystem sys;
    sys.layout = Layout::PoissonScalar;
    sys.A = assemble_stiffness(mesh, k);
    sys.b = assemble_load(mesh, f, t);
    add_neumann_load(sys.b, mesh, domain, neumann, t);
    sys.dirichlet_rows = apply_dirichlet_rows(sys.A, sys.b, mesh, dirichlet, t);
    return sys;
}

/// rhs of the Poisson system at time t (matrix rows unchanged).
inline Eigen::VectorXd poisson_rhs(const TriMesh& mesh, const DomainSpec& domain,
                                   const ScalarField& f, const ScalarField& dirichlet,
                                   const ScalarField& neumann, double t) {
    Eigen::VectorXd b = assemble_load(mesh, f, t);
    add_neumann_load(b, mesh, domain, neumann, t);
    for (int i = 0; i < mesh.n_nodes(); ++i)
        if (mesh.tags[i] == NodeTag::Dirichlet)
            b(i) = dirichlet(mesh.nodes[i].x, mesh.nodes[i].y, t);
    return b;
}

struct PressurePin {
    int node = -1;  // pressure (vertex) node index
    double value = 0.0;
};

/// Taylor-Hood operator blocks. mesh_p must be the vertex submesh of mesh_v.
struct StokesOperators {
    Eigen::MatrixXd K;   // P2 velocity stiffness (viscosity 1)
    Eigen::MatrixXd M;   // P2 velocity mass
    Eigen::MatrixXd Lx;  // n_u x n_p, integral of dphi_i/dx * psi_j
    Eigen::MatrixXd Ly;
    int n_u = 0, n_p = 0;
};

inline StokesOperators assemble_stokes_operators(const TriMesh& mesh_v,
                                                 const TriMesh& mesh_p) {
    if (mesh_v.order != 2 || mesh_p.order != 1)
        throw std::invalid_argument("Taylor-Hood needs an order-2 velocity mesh and order-1 pressure mesh");
    if (mesh_p.n_nodes() != mesh_v.n_vertex_nodes)
        throw std::invalid_argument("pressure mesh is not the vertex submesh of the velocity mesh");
    StokesOperators ops;
    ops.n_u = mesh_v.n_nodes();
    ops.n_p = mesh_p.n_nodes();
    ops.K = assemble_stiffness(mesh_v, 1.0);
    ops.M = assemble_mass(mesh_v);
    ops.Lx = Eigen::MatrixXd::Zero(ops.n_u, ops.n_p);
    ops.Ly = Eigen::MatrixXd::Zero(ops.n_u, ops.n_p);
    const QuadratureRule rule = quad_rule(5);
    for (const auto& t : mesh_v.triangles) {
        const detail::ElementMap map(mesh_v, t);
        for (int q = 0; q < rule.size(); ++q) {
            const ShapeEval s2 = shape_eval(2, rule.points[q], false);
            const ShapeEval s1 = shape_eval(1, rule.points[q], false);
            const double scale = rule.weights[q] * std::abs(map.det);
            for (int i = 0; i < 6; ++i) {
                const auto gx = map.grad_to_physical(s2.grad[i]);
                for (int j = 0; j < 3; ++j) {
                    ops.Lx(t[i], t[j]) += scale * gx[0] * s1.value[j];
                    ops.Ly(t[i], t[j]) += scale * gx[1] * s1.value[j];
                }
            }
        }
    }
    return ops;
}

/// Steady Stokes block system
///   [ K   0  -Lx ] [u_x]   [F_x]
///   [ 0   K  -Ly ] [u_y] = [F_y]
///   [ Lx' Ly'  0 ] [ p ]   [ 0 ]
/// with velocity Dirichlet rows replaced by identity rows. Natural segments
/// contribute nothing (flux/pressure balance). When pin is given, that
/// pressure node's continuity row is replaced by p = value.
inline AssembledSystem assemble_stokes(const TriMesh& mesh_v, const TriMesh& mesh_p,
                                       const DomainSpec& domain, const VectorField& f,
                                       const VectorField& dirichlet,
                                       std::optional<PressurePin> pin, double t = 0.0) {
    const StokesOperators ops = assemble_stokes_operators(mesh_v, mesh_p);
    const int nu = ops.n_u, np = ops.n_p, n = 2 * nu + np;

    AssembledSystem sys;
    sys.layout = Layout::StokesBlock;
    sys.n_u = nu;
    sys.n_p = np;
    sys.A = Eigen::MatrixXd::Zero(n, n);
    sys.A.block(0, 0, nu, nu) = ops.K;
    sys.A.block(0, 2 * nu, nu, np) = -ops.Lx;
    sys.A.block(nu, nu, nu, nu) = ops.K;
    sys.A.block(nu, 2 * nu, nu, np) = -ops.Ly;
    sys.A.block(2 * nu, 0, np, nu) = ops.Lx.transpose();
    sys.A.block(2 * nu, nu, np, nu) = ops.Ly.transpose();

    sys.b = Eigen::VectorXd::Zero(n);
    sys.b.head(nu) = assemble_load(mesh_v, [&](double x, double y, double tt) {
        return f(x, y, tt)[0];
    }, t);
    sys.b.segment(nu, nu) = assemble_load(mesh_v, [&](double x, double y, double tt) {
        return f(x, y, tt)[1];
    }, t);

    for (int i = 0; i < nu; ++i) {
        if (mesh_v.tags[i] != NodeTag::Dirichlet) continue;
        const auto uv = dirichlet(mesh_v.nodes[i].x, mesh_v.nodes[i].y, t);
        sys.A.row(i).setZero();
        sys.A(i, i) = 1.0;
        sys.b(i) = uv[0];
        sys.A.row(nu + i).setZero();
        sys.A(nu + i, nu + i) = 1.0;
        sys.b(nu + i) = uv[1];
        sys.dirichlet_rows.push_back(i);
        sys.dirichlet_rows.push_back(nu + i);
    }
    if (pin) {
        if (pin->node < 0 || pin->node >= np)
            throw PinNodeNotFound("pressure pin node index out of range");
        const int row = 2 * nu + pin->node;
        sys.A.row(row).setZero();
        sys.A(row, row) = 1.0;
        sys.b(row) = pin->value;
    }
    return sys;
}

/// rhs of the Stokes system at time t (matrix rows unchanged).
inline Eigen::VectorXd stokes_rhs(const TriMesh& mesh_v, int n_p, const VectorField& f,
                                  const VectorField& dirichlet,
                                  std::optional<PressurePin> pin, double t) {
    const int nu = mesh_v.n_nodes();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(2 * nu + n_p);
    b.head(nu) = assemble_load(mesh_v, [&](double x, double y, double tt) {
        return f(x, y, tt)[0];
    }, t);
    b.segment(nu, nu) = assemble_load(mesh_v, [&](double x, double y, double tt) {
        return f(x, y, tt)[1];
    }, t);
    for (int i = 0; i < nu; ++i) {
        if (mesh_v.tags[i] != NodeTag::Dirichlet) continue;
        const auto uv = dirichlet(mesh_v.nodes[i].x, mesh_v.nodes[i].y, t);
        b(i) = uv[0];
        b(nu + i) = uv[1];
    }
    if (pin) b(2 * nu + pin->node) = pin->value;
    return b;
}

}  // namespace femrbf
