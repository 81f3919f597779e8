#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>

#include "femrbf/geometry.hpp"
#include "femrbf/quadrature.hpp"
#include "femrbf/types.hpp"

namespace femrbf {

struct UncoveredDomain : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// One row of the comparison tables.
struct ErrorReport {
    double lse = 0.0;
    double rmse = 0.0;
    double mre = 0.0;
    double condition_number = 1.0;
    bool cn_overflow = false;
    double runtime_s = 0.0;
    std::optional<double> shape_parameter;
    std::optional<int> tps_beta;
    double residual_inf = 0.0;     // collocation residual |A a - b|_inf / |b|_inf
    bool residual_flagged = false; // residual check skipped (condition number >= 1e14)
};

inline double rmse(const Eigen::VectorXd& numeric, const Eigen::VectorXd& exact) {
    if (numeric.size() != exact.size() || numeric.size() == 0)
        throw LengthMismatch("rmse: vectors must have equal nonzero length");
    return std::sqrt((numeric - exact).squaredNorm() / static_cast<double>(numeric.size()));
}

/// max_i |numeric_i - exact_i| / max(|exact_i|, floor)
inline double max_relative_error(const Eigen::VectorXd& numeric, const Eigen::VectorXd& exact,
                                 double floor = 1e-12) {
    if (numeric.size() != exact.size() || numeric.size() == 0)
        throw LengthMismatch("max_relative_error: vectors must have equal nonzero length");
    double m = 0.0;
    for (Eigen::Index i = 0; i < numeric.size(); ++i)
        m = std::max(m, std::abs(numeric(i) - exact(i)) /
                            std::max(std::abs(exact(i)), floor));
    return m;
}

/// Surface evaluated inside a given element at a physical point. The element
/// index lets finite element interpolants avoid point location; global
/// surfaces (RBF expansions) can ignore it.
using ElementField = std::function<double(int elem, double x, double y)>;

namespace detail {

inline void check_coverage(const TriMesh& mesh, std::optional<double> expected_area) {
    if (!expected_area) return;
    double sum = 0.0;
    for (int e = 0; e < mesh.n_elements(); ++e) sum += std::abs(mesh.triangle_area(e));
    if (std::abs(sum - *expected_area) > 1e-8)
        throw UncoveredDomain("element areas do not cover the domain");
}

}  // namespace detail

/// Least square error of the comparison tables: per imaginary element the
/// squared difference between the numeric and analytic surfaces is integrated
/// with Gaussian quadrature; element contributions are summed and the total
/// square rooted.
inline double lse(const TriMesh& mesh, const ElementField& numeric,
                  const std::function<double(double, double)>& exact,
                  const QuadratureRule& rule,
                  std::optional<double> expected_area = std::nullopt) {
    detail::check_coverage(mesh, expected_area);
    double sq = 0.0;
    for (int e = 0; e < mesh.n_elements(); ++e) {
        const auto& t = mesh.triangles[e];
        const Point2 &p0 = mesh.nodes[t[0]], &p1 = mesh.nodes[t[1]], &p2 = mesh.nodes[t[2]];
        const double det = std::abs((p1.x - p0.x) * (p2.y - p0.y) -
                                    (p2.x - p0.x) * (p1.y - p0.y));
        for (int q = 0; q < rule.size(); ++q) {
            const double xi = rule.points[q].x, eta = rule.points[q].y;
            const double x = p0.x + (p1.x - p0.x) * xi + (p2.x - p0.x) * eta;
            const double y = p0.y + (p1.y - p0.y) * xi + (p2.y - p0.y) * eta;
            const double diff = numeric(e, x, y) - exact(x, y);
            sq += rule.weights[q] * det * diff * diff;
        }
    }
    return std::sqrt(sq);
}

inline double lse(const TriMesh& mesh, const std::function<double(double, double)>& numeric,
                  const std::function<double(double, double)>& exact,
                  const QuadratureRule& rule,
                  std::optional<double> expected_area = std::nullopt) {
    return lse(mesh, [&](int, double x, double y) { return numeric(x, y); }, exact, rule,
               expected_area);
}

/// Literal per-element volume variant: V_e = sum_k w_k |J_e| u(x_k) for both
/// surfaces, then sqrt(sum_e (V_num - V_ex)^2). Diagnostic companion of lse;
/// for a constant offset delta on equal-area elements it equals
/// delta * sqrt(sum areas^2).
inline double element_volume_lse(const TriMesh& mesh, const ElementField& numeric,
                                 const std::function<double(double, double)>& exact,
                                 const QuadratureRule& rule,
                                 std::optional<double> expected_area = std::nullopt) {
    detail::check_coverage(mesh, expected_area);
    double sq = 0.0;
    for (int e = 0; e < mesh.n_elements(); ++e) {
        const auto& t = mesh.triangles[e];
        const Point2 &p0 = mesh.nodes[t[0]], &p1 = mesh.nodes[t[1]], &p2 = mesh.nodes[t[2]];
        const double det = std::abs((p1.x - p0.x) * (p2.y - p0.y) -
                                    (p2.x - p0.x) * (p1.y - p0.y));
        double v_num = 0.0, v_ex = 0.0;
        for (int q = 0; q < rule.size(); ++q) {
            const double xi = rule.points[q].x, eta = rule.points[q].y;
            const double x = p0.x + (p1.x - p0.x) * xi + (p2.x - p0.x) * eta;
            const double y = p0.y + (p1.y - p0.y) * xi + (p2.y - p0.y) * eta;
            v_num += rule.weights[q] * det * numeric(e, x, y);
            v_ex += rule.weights[q] * det * exact(x, y);
        }
        sq += (v_num - v_ex) * (v_num - v_ex);
    }
    return std::sqrt(sq);
}

inline double element_volume_lse(const TriMesh& mesh,
                                 const std::function<double(double, double)>& numeric,
                                 const std::function<double(double, double)>& exact,
                                 const QuadratureRule& rule,
                                 std::optional<double> expected_area = std::nullopt) {
    return element_volume_lse(mesh, [&](int, double x, double y) { return numeric(x, y); },
                              exact, rule, expected_area);
}

}  // namespace femrbf
