#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "femrbf/geometry.hpp"
#include "femrbf/types.hpp"

namespace femrbf {

struct SingularDerivative : std::domain_error {
    using std::domain_error::domain_error;
};
struct MissingPressureClosure : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Radial kernel family: multiquadric (r^2+c^2)^(beta/2) with beta = 1, or
/// thin plate spline r^beta ln r with even beta (value 0 at r = 0).
struct RbfKind {
    enum class Family { MQ, TPS };
    Family family = Family::MQ;
    double c = 1.0;  // MQ shape parameter
    int beta = 1;

    static RbfKind mq(double c) {
        if (c <= 0.0) throw std::invalid_argument("MQ shape parameter must be positive");
        return {Family::MQ, c, 1};
    }
    static RbfKind tps(int beta = 4) {
        if (beta <= 0 || beta % 2 != 0)
            throw std::invalid_argument("TPS exponent must be a positive even integer");
        return {Family::TPS, 0.0, beta};
    }
};

inline double rbf_eval(const RbfKind& kind, double r) {
    if (kind.family == RbfKind::Family::MQ) return std::sqrt(r * r + kind.c * kind.c);
    if (r == 0.0) return 0.0;
    return std::pow(r, kind.beta) * std::log(r);
}

struct RbfDerivs {
    double d_x = 0.0, d_y = 0.0, d_xx = 0.0, d_yy = 0.0;
};

/// Closed-form first and second derivatives of phi(|(dx,dy)|) with respect to
/// the offset. TPS beta=2 second derivatives are log-singular at the origin.
inline RbfDerivs rbf_derivs(const RbfKind& kind, double dx, double dy) {
    RbfDerivs d;
    const double r2 = dx * dx + dy * dy;
    if (kind.family == RbfKind::Family::MQ) {
        const double s = std::sqrt(r2 + kind.c * kind.c);
        d.d_x = dx / s;
        d.d_y = dy / s;
        d.d_xx = (dy * dy + kind.c * kind.c) / (s * s * s);
        d.d_yy = (dx * dx + kind.c * kind.c) / (s * s * s);
        return d;
    }
    const int b = kind.beta;
    if (r2 == 0.0) {
        if (b == 2) throw SingularDerivative("TPS beta=2 Laplacian is singular at r=0");
        return d;  // limits vanish for beta >= 4
    }
    const double r = std::sqrt(r2);
    const double lnr = std::log(r);
    const double core = b * lnr + 1.0;                       // phi'(r) / r^(b-1)
    const double rb2 = std::pow(r, b - 2);
    const double rb4 = rb2 / r2;
    d.d_x = dx * rb2 * core;
    d.d_y = dy * rb2 * core;
    d.d_xx = rb2 * core + dx * dx * rb4 * ((b - 2) * core + b);
    d.d_yy = rb2 * core + dy * dy * rb4 * ((b - 2) * core + b);
    return d;
}

struct Coefficients {
    Eigen::VectorXd alpha;
    std::vector<Point2> centers;
    RbfKind kind;
};

/// u(p) = sum_j alpha_j phi(|p - x_j|), per the RBF expansion.
inline Eigen::VectorXd evaluate_solution(const Coefficients& coeffs,
                                         const std::vector<Point2>& points) {
    Eigen::VectorXd out(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        double u = 0.0;
        for (std::size_t j = 0; j < coeffs.centers.size(); ++j)
            u += coeffs.alpha(j) * rbf_eval(coeffs.kind, dist(points[i], coeffs.centers[j]));
        out(static_cast<Eigen::Index>(i)) = u;
    }
    return out;
}

inline double evaluate_at(const Coefficients& coeffs, double x, double y) {
    double u = 0.0;
    for (std::size_t j = 0; j < coeffs.centers.size(); ++j)
        u += coeffs.alpha(j) * rbf_eval(coeffs.kind, dist({x, y}, coeffs.centers[j]));
    return u;
}

/// Collocation system. Rows follow the cloud's block order: Dirichlet rows
/// first, then Neumann rows, then interior PDE rows; columns run over all
/// centers (centers == collocation nodes).
struct KansaSystem {
    Eigen::MatrixXd A;
    Eigen::VectorXd b;
    int n_dirichlet = 0, n_neumann = 0, n_interior = 0;
    bool stokes = false;  // scalar N x N vs block 3N x 3N

    int n_centers() const { return n_dirichlet + n_neumann + n_interior; }
};

inline KansaSystem assemble_kansa_poisson(const NodeCloud& cloud, const DomainSpec& domain,
                                          const RbfKind& kind, double k, const ScalarField& f,
                                          const ScalarField& dirichlet,
                                          const ScalarField& neumann, double t = 0.0) {
    const int n = cloud.total();
    KansaSystem sys;
    sys.n_dirichlet = cloud.n_dirichlet;
    sys.n_neumann = cloud.n_neumann;
    sys.n_interior = cloud.n_interior;
    sys.A.resize(n, n);
    sys.b.resize(n);
    for (int i = 0; i < n; ++i) {
        const Point2& xi = cloud.points[i];
        const NodeTag tag = cloud.tag_of(i);
        Point2 normal{0, 0};
        if (tag == NodeTag::Neumann) normal = neumann_normal(domain, xi);
        for (int j = 0; j < n; ++j) {
            const double dx = xi.x - cloud.points[j].x;
            const double dy = xi.y - cloud.points[j].y;
            switch (tag) {
                case NodeTag::Dirichlet:
                    sys.A(i, j) = rbf_eval(kind, std::hypot(dx, dy));
                    break;
                case NodeTag::Neumann: {
                    const RbfDerivs d = rbf_derivs(kind, dx, dy);
                    sys.A(i, j) = normal.x * d.d_x + normal.y * d.d_y;
                    break;
                }
                case NodeTag::Interior: {
                    const RbfDerivs d = rbf_derivs(kind, dx, dy);
                    sys.A(i, j) = -k * (d.d_xx + d.d_yy);
                    break;
                }
            }
        }
        switch (tag) {
            case NodeTag::Dirichlet: sys.b(i) = dirichlet(xi.x, xi.y, t); break;
            case NodeTag::Neumann: sys.b(i) = neumann(xi.x, xi.y, t); break;
            case NodeTag::Interior: sys.b(i) = f(xi.x, xi.y, t); break;
        }
    }
    return sys;
}

/// rhs of the Poisson collocation system at time t.
inline Eigen::VectorXd kansa_poisson_rhs(const NodeCloud& cloud, const ScalarField& f,
                                         const ScalarField& dirichlet,
                                         const ScalarField& neumann, double t) {
    Eigen::VectorXd b(cloud.total());
    for (int i = 0; i < cloud.total(); ++i) {
        const Point2& xi = cloud.points[i];
        switch (cloud.tag_of(i)) {
            case NodeTag::Dirichlet: b(i) = dirichlet(xi.x, xi.y, t); break;
            case NodeTag::Neumann: b(i) = neumann(xi.x, xi.y, t); break;
            case NodeTag::Interior: b(i) = f(xi.x, xi.y, t); break;
        }
    }
    return b;
}

/// Time-derivative matrix of the unsteady collocation schemes: phi rows on
/// interior collocation nodes, zero rows on boundary nodes.
inline Eigen::MatrixXd kansa_time_matrix(const NodeCloud& cloud, const RbfKind& kind) {
    const int n = cloud.total();
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        if (cloud.tag_of(i) != NodeTag::Interior) continue;
        for (int j = 0; j < n; ++j)
            m(i, j) = rbf_eval(kind, dist(cloud.points[i], cloud.points[j]));
    }
    return m;
}

/// Stokes collocation over unknowns (alpha_ux, alpha_uy, alpha_p). Momentum
/// rows: -laplacian blocks plus pressure-gradient blocks at interior nodes,
/// kernel rows at velocity Dirichlet nodes, flux/pressure balance rows
/// (du/dn - p n = 0, componentwise) at natural nodes. Continuity rows cover
/// every node; the pin node's continuity row is replaced by p = value.
inline KansaSystem assemble_kansa_stokes(const NodeCloud& cloud, const DomainSpec& domain,
                                         const RbfKind& kind, const VectorField& f,
                                         const VectorField& dirichlet,
                                         std::optional<std::pair<int, double>> pin,
                                         double t = 0.0) {
    if (!pin && cloud.n_neumann == 0)
        throw MissingPressureClosure("need a pressure pin or a natural segment");
    const int n = cloud.total();
    KansaSystem sys;
    sys.stokes = true;
    sys.n_dirichlet = cloud.n_dirichlet;
    sys.n_neumann = cloud.n_neumann;
    sys.n_interior = cloud.n_interior;
    sys.A = Eigen::MatrixXd::Zero(3 * n, 3 * n);
    sys.b = Eigen::VectorXd::Zero(3 * n);

    for (int i = 0; i < n; ++i) {
        const Point2& xi = cloud.points[i];
        const NodeTag tag = cloud.tag_of(i);
        Point2 normal{0, 0};
        if (tag == NodeTag::Neumann) normal = neumann_normal(domain, xi);
        for (int j = 0; j < n; ++j) {
            const double dx = xi.x - cloud.points[j].x;
            const double dy = xi.y - cloud.points[j].y;
            const double phi = rbf_eval(kind, std::hypot(dx, dy));
            const RbfDerivs d = rbf_derivs(kind, dx, dy);
            switch (tag) {
                case NodeTag::Dirichlet:
                    sys.A(i, j) = phi;
                    sys.A(n + i, n + j) = phi;
                    break;
                case NodeTag::Neumann: {
                    const double dn = normal.x * d.d_x + normal.y * d.d_y;
                    sys.A(i, j) = dn;
                    sys.A(i, 2 * n + j) = -normal.x * phi;
                    sys.A(n + i, n + j) = dn;
                    sys.A(n + i, 2 * n + j) = -normal.y * phi;
                    break;
                }
                case NodeTag::Interior: {
                    const double lap = d.d_xx + d.d_yy;
                    sys.A(i, j) = -lap;
                    sys.A(i, 2 * n + j) = d.d_x;
                    sys.A(n + i, n + j) = -lap;
                    sys.A(n + i, 2 * n + j) = d.d_y;
                    break;
                }
            }
            sys.A(2 * n + i, j) = d.d_x;
            sys.A(2 * n + i, n + j) = d.d_y;
        }
        if (tag == NodeTag::Dirichlet) {
            const auto uv = dirichlet(xi.x, xi.y, t);
            sys.b(i) = uv[0];
            sys.b(n + i) = uv[1];
        } else if (tag == NodeTag::Interior) {
            const auto fv = f(xi.x, xi.y, t);
            sys.b(i) = fv[0];
            sys.b(n + i) = fv[1];
        }
    }
    if (pin) {
        const int pi = pin->first;
        if (pi < 0 || pi >= n) throw PinNodeNotFound("pressure pin node index out of range");
        const int row = 2 * n + pi;
        sys.A.row(row).setZero();
        for (int j = 0; j < n; ++j)
            sys.A(row, 2 * n + j) = rbf_eval(kind, dist(cloud.points[pi], cloud.points[j]));
        sys.b(row) = pin->second;
    }
    return sys;
}

/// rhs of the Stokes collocation system at time t.
inline Eigen::VectorXd kansa_stokes_rhs(const NodeCloud& cloud, const VectorField& f,
                                        const VectorField& dirichlet,
                                        std::optional<std::pair<int, double>> pin, double t) {
    const int n = cloud.total();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(3 * n);
    for (int i = 0; i < n; ++i) {
        const Point2& xi = cloud.points[i];
        const NodeTag tag = cloud.tag_of(i);
        if (tag == NodeTag::Dirichlet) {
            const auto uv = dirichlet(xi.x, xi.y, t);
            b(i) = uv[0];
            b(n + i) = uv[1];
        } else if (tag == NodeTag::Interior) {
            const auto fv = f(xi.x, xi.y, t);
            b(i) = fv[0];
            b(n + i) = fv[1];
        }
    }
    if (pin) b(2 * n + pin->first) = pin->second;
    return b;
}

}  // namespace femrbf
