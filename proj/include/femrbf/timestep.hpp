#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "femrbf/linsolve.hpp"
#include "femrbf/types.hpp"

namespace femrbf {

struct TimeConfig {
    double dt = 0.01;
    double t_final = 50.0;

    int steps() const {
        if (dt <= 0.0) throw std::invalid_argument("time step must be positive");
        const double q = t_final / dt;
        const int n = static_cast<int>(std::llround(q));
        if (n < 1 || std::abs(q - n) > 1e-9 * std::max(1.0, q))
            throw std::invalid_argument("t_final must be an integer multiple of dt");
        return n;
    }
};

/// Backward Euler state for a linear system with constant operators:
///   interior rows     (M + dt*K) u^n = dt*F(t^n) + M u^{n-1}
///   unscaled rows     K u^n = F(t^n)    (boundary and continuity rows, kept
///                                        at full strength; M rows are zero)
/// `steady_matrix` is K with boundary rows applied; `time_block` is M with
/// zero rows wherever a row is listed in `unscaled_rows`.
struct TransientSystem {
    Eigen::MatrixXd steady_matrix;
    Eigen::MatrixXd time_block;
    std::vector<int> unscaled_rows;
    std::function<Eigen::VectorXd(double)> steady_rhs;  // F(t)
};

inline Eigen::MatrixXd compose_implicit(const Eigen::MatrixXd& time_block,
                                        const Eigen::MatrixXd& steady_matrix, double dt,
                                        const std::vector<int>& unscaled_rows) {
    if (time_block.rows() != steady_matrix.rows() || time_block.cols() != steady_matrix.cols())
        throw ShapeMismatch("compose_implicit: M and K dimensions differ");
    Eigen::MatrixXd a = time_block + dt * steady_matrix;
    for (int r : unscaled_rows) a.row(r) = steady_matrix.row(r);
    return a;
}

inline Eigen::VectorXd implicit_rhs(const Eigen::MatrixXd& time_block,
                                    const Eigen::VectorXd& f, const Eigen::VectorXd& u_prev,
                                    double dt, const std::vector<int>& unscaled_rows) {
    if (f.size() != time_block.rows() || u_prev.size() != time_block.cols())
        throw ShapeMismatch("implicit_rhs: vector lengths do not match the operators");
    Eigen::VectorXd rhs = dt * f + time_block * u_prev;
    for (int r : unscaled_rows) rhs(r) = f(r);
    return rhs;
}

/// One implicit Euler step of the scalar scheme, (M + dt K) u^n = dt F + M u^{n-1}.
/// Rows listed in unscaled_rows carry boundary data at full strength instead.
inline Eigen::VectorXd step_poisson(const Eigen::MatrixXd& m, const Eigen::MatrixXd& k,
                                    const Eigen::VectorXd& f, const Eigen::VectorXd& u_prev,
                                    double dt, const std::vector<int>& unscaled_rows = {}) {
    const Eigen::MatrixXd a = compose_implicit(m, k, dt, unscaled_rows);
    const Eigen::VectorXd rhs = implicit_rhs(m, f, u_prev, dt, unscaled_rows);
    return pinv_solve(a, rhs).first;
}

/// One implicit Euler step of a block system (Stokes): identical row rule,
/// with the continuity rows included in unscaled_rows by the assembler.
inline Eigen::VectorXd step_stokes(const Eigen::MatrixXd& time_block,
                                   const Eigen::MatrixXd& steady_matrix,
                                   const Eigen::VectorXd& f, const Eigen::VectorXd& state_prev,
                                   double dt, const std::vector<int>& unscaled_rows) {
    const Eigen::MatrixXd a = compose_implicit(time_block, steady_matrix, dt, unscaled_rows);
    const Eigen::VectorXd rhs = implicit_rhs(time_block, f, state_prev, dt, unscaled_rows);
    return pinv_solve(a, rhs).first;
}

struct TransientResult {
    Eigen::VectorXd final_state;
    SolveReport report;          // factorization of the time-invariant operator
    double max_step_residual = 0.0;  // max over steps of |A u - rhs|_inf / |rhs|_inf
    std::vector<std::array<double, 3>> trace;  // (step, t, rmse) when requested
};

/// Iterate backward Euler to t_final. The implicit operator is factored once
/// and reused every step. An optional callback provides per-step RMSE traces.
inline TransientResult run_transient(
    const TransientSystem& sys, const Eigen::VectorXd& u0, const TimeConfig& time,
    const std::function<double(const Eigen::VectorXd&, double)>& rmse_at = nullptr) {
    const int n_steps = time.steps();
    const Eigen::MatrixXd a =
        compose_implicit(sys.time_block, sys.steady_matrix, time.dt, sys.unscaled_rows);
    const PinvSolver solver(a);

    TransientResult result;
    result.report = solver.report();
    Eigen::VectorXd u = u0;
    for (int step = 1; step <= n_steps; ++step) {
        const double t = step * time.dt;
        const Eigen::VectorXd rhs =
            implicit_rhs(sys.time_block, sys.steady_rhs(t), u, time.dt, sys.unscaled_rows);
        u = refined_solve(a, solver, rhs);
        const double denom = rhs.lpNorm<Eigen::Infinity>();
        if (denom > 0.0)
            result.max_step_residual = std::max(
                result.max_step_residual, (a * u - rhs).lpNorm<Eigen::Infinity>() / denom);
        if (rmse_at) result.trace.push_back({static_cast<double>(step), t, rmse_at(u, t)});
    }
    result.final_state = std::move(u);
    return result;
}

}  // namespace femrbf
