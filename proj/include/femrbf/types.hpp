#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <stdexcept>

namespace femrbf {

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

inline double dist(const Point2& a, const Point2& b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

/// Scalar field of (x, y, t). Steady data ignores t.
using ScalarField = std::function<double(double, double, double)>;
/// Vector field of (x, y, t), returns {fx, fy}.
using VectorField = std::function<std::array<double, 2>(double, double, double)>;

struct ShapeMismatch : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct LengthMismatch : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct PinNodeNotFound : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

}  // namespace femrbf
