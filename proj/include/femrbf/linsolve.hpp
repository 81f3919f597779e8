#pragma once

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

#include "femrbf/types.hpp"

namespace femrbf {

struct EmptyMatrix : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct SolveReport {
    double condition_number = 1.0;  // sigma_max / sigma_min
    bool overflow = false;          // ratio not representable in double range
    int rank = 0;
    int truncated_singular_values = 0;
    double wall_time_s = 0.0;  // SVD factorization + apply
};

namespace detail {
// Ratio of extreme singular values with overflow semantics: anything past
// 1e300 (or a vanishing sigma_min) is reported as overflow/rank-deficient.
inline std::pair<double, bool> sigma_ratio(double smax, double smin) {
    if (smax == 0.0) return {1.0, false};
    if (smin <= 0.0 || smax / smin > 1e300)
        return {std::numeric_limits<double>::infinity(), true};
    return {smax / smin, false};
}
}  // namespace detail

/// Moore-Penrose solve via singular value decomposition. Singular values
/// below rtol * sigma_max are treated as zero. Factor once, apply many.
class PinvSolver {
public:
    explicit PinvSolver(const Eigen::MatrixXd& a, double rtol = -1.0) {
        if (a.rows() == 0 || a.cols() == 0) throw EmptyMatrix("pinv of empty matrix");
        const auto t0 = std::chrono::steady_clock::now();
        Eigen::BDCSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
        u_ = svd.matrixU();
        v_ = svd.matrixV();
        const Eigen::VectorXd& s = svd.singularValues();
        if (rtol < 0.0)
            rtol = static_cast<double>(std::max(a.rows(), a.cols())) *
                   std::numeric_limits<double>::epsilon();
        const double cutoff = rtol * s(0);
        inv_sigma_ = Eigen::VectorXd::Zero(s.size());
        for (Eigen::Index i = 0; i < s.size(); ++i) {
            if (s(i) > cutoff && s(i) > 0.0) {
                inv_sigma_(i) = 1.0 / s(i);
                ++report_.rank;
            } else {
                ++report_.truncated_singular_values;
            }
        }
        auto [cn, ovf] = detail::sigma_ratio(s(0), s(s.size() - 1));
        report_.condition_number = cn;
        report_.overflow = ovf;
        report_.wall_time_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }

    Eigen::VectorXd solve(const Eigen::VectorXd& b) const {
        if (b.size() != u_.rows())
            throw ShapeMismatch("pinv apply: rhs length does not match matrix rows");
        return v_ * (inv_sigma_.asDiagonal() * (u_.transpose() * b));
    }

    const SolveReport& report() const { return report_; }

private:
    Eigen::MatrixXd u_, v_;
    Eigen::VectorXd inv_sigma_;
    SolveReport report_;
};

/// One or two steps of residual correction against the original matrix.
/// Convergent only while kappa * eps stays well below one; skipped otherwise
/// (rank-deficient and overflow-conditioned systems keep the raw A^+ b).
inline Eigen::VectorXd refined_solve(const Eigen::MatrixXd& a, const PinvSolver& solver,
                                     const Eigen::VectorXd& b, int steps = 2) {
    Eigen::VectorXd x = solver.solve(b);
    const double kappa = solver.report().condition_number;
    if (!(kappa * std::numeric_limits<double>::epsilon() < 0.1)) return x;
    for (int i = 0; i < steps; ++i) x += solver.solve(b - a * x);
    return x;
}

/// x = A^+ b with diagnostics. Default rtol = max(m, n) * machine epsilon.
inline std::pair<Eigen::VectorXd, SolveReport> pinv_solve(const Eigen::MatrixXd& a,
                                                          const Eigen::VectorXd& b,
                                                          double rtol = -1.0) {
    if (a.rows() != b.size()) throw ShapeMismatch("pinv_solve: rhs length mismatch");
    const auto t0 = std::chrono::steady_clock::now();
    PinvSolver solver(a, rtol);
    Eigen::VectorXd x = refined_solve(a, solver, b);
    SolveReport rep = solver.report();
    rep.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {std::move(x), rep};
}

/// sigma_max / sigma_min; +inf when the ratio overflows the double range.
inline double condition_number(const Eigen::MatrixXd& a) {
    if (a.rows() == 0 || a.cols() == 0) throw EmptyMatrix("condition number of empty matrix");
    Eigen::BDCSVD<Eigen::MatrixXd> svd(a);
    const Eigen::VectorXd& s = svd.singularValues();
    return detail::sigma_ratio(s(0), s(s.size() - 1)).first;
}

}  // namespace femrbf
