#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "femrbf/types.hpp"

namespace femrbf {

struct UnsupportedDegree : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Symmetric rule on the reference triangle {xi >= 0, eta >= 0, xi+eta <= 1}.
/// Weights sum to the reference area 1/2 and are all positive.
struct QuadratureRule {
    std::vector<Point2> points;
    std::vector<double> weights;
    int degree = 0;

    int size() const { return static_cast<int>(points.size()); }
};

inline QuadratureRule quad_rule(int degree) {
    if (degree < 1 || degree > 5) throw UnsupportedDegree("triangle rule degree must be in 1..5");
    QuadratureRule rule;
    rule.degree = degree;
    if (degree == 1) {
        rule.points = {{1.0 / 3.0, 1.0 / 3.0}};
        rule.weights = {0.5};
        return rule;
    }
    if (degree == 2) {
        rule.points = {{1.0 / 6.0, 1.0 / 6.0}, {2.0 / 3.0, 1.0 / 6.0}, {1.0 / 6.0, 2.0 / 3.0}};
        rule.weights = {1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0};
        return rule;
    }
    // degrees 3..5: the 7-point degree-5 rule (positive weights)
    const double s15 = std::sqrt(15.0);
    const double a1 = (6.0 + s15) / 21.0, w1 = (155.0 + s15) / 2400.0;
    const double a2 = (6.0 - s15) / 21.0, w2 = (155.0 - s15) / 2400.0;
    rule.points = {{1.0 / 3.0, 1.0 / 3.0},
                   {1.0 - 2.0 * a1, a1}, {a1, 1.0 - 2.0 * a1}, {a1, a1},
                   {1.0 - 2.0 * a2, a2}, {a2, 1.0 - 2.0 * a2}, {a2, a2}};
    rule.weights = {9.0 / 80.0, w1, w1, w1, w2, w2, w2};
    rule.degree = 5;
    return rule;
}

struct GaussPoint1d {
    double s;  // position on [0, 1]
    double w;  // weight, sum = 1
};

/// 3-point Gauss-Legendre on [0, 1], exact through degree 5. Used for the
/// boundary-edge surface integrals.
inline std::array<GaussPoint1d, 3> gauss3_unit() {
    const double r = 0.5 * std::sqrt(3.0 / 5.0);
    return {{{0.5 - r, 5.0 / 18.0}, {0.5, 8.0 / 18.0}, {0.5 + r, 5.0 / 18.0}}};
}

}  // namespace femrbf
