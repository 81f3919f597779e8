#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

namespace femrbf {

struct AllSolvesFailed : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SearchConfig {
    double c_min = 0.05;
    double c_max = 50.0;
    int scan_points = 20;   // coarse log-spaced scan
    int max_evals = 60;
    double rel_tol = 1e-3;  // convergence tolerance on c
};

struct OptResult {
    double c_star = 0.0;
    double rmse_at_c_star = 0.0;
    std::vector<std::pair<double, double>> trace;  // (c, rmse) in evaluation order
};

/// Minimizes rmse(c) over the shape parameter: a coarse log-spaced scan
/// followed by golden-section refinement around the best scan point. The
/// landscape is not guaranteed unimodal (conditioning noise past the optimum),
/// so the global scan comes first. Candidates that throw or return non-finite
/// values count as failed evaluations.
inline OptResult optimize_shape_parameter(const std::function<double(double)>& rmse_of_c,
                                          const SearchConfig& cfg = {}) {
    if (!(cfg.c_min > 0.0) || !(cfg.c_max > cfg.c_min))
        throw std::invalid_argument("search bounds must satisfy 0 < c_min < c_max");

    OptResult result;
    auto evaluate = [&](double c) {
        double v;
        try {
            v = rmse_of_c(c);
        } catch (const std::exception&) {
            v = std::numeric_limits<double>::quiet_NaN();
        }
        if (!std::isfinite(v)) v = std::numeric_limits<double>::infinity();
        result.trace.emplace_back(c, v);
        return v;
    };

    const int n_scan = std::min(cfg.scan_points, cfg.max_evals);
    const double ratio = cfg.c_max / cfg.c_min;
    std::vector<double> scan(n_scan);
    std::vector<double> value(n_scan);
    int best = -1;
    for (int i = 0; i < n_scan; ++i) {
        scan[i] = cfg.c_min * std::pow(ratio, static_cast<double>(i) / (n_scan - 1));
        value[i] = evaluate(scan[i]);
        if (best < 0 || value[i] < value[best]) best = i;
    }
    if (!std::isfinite(value[best]))
        throw AllSolvesFailed("every shape-parameter candidate failed");

    // golden-section refinement inside the bracket around the best scan point
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double lo = scan[std::max(best - 1, 0)];
    double hi = scan[std::min(best + 1, n_scan - 1)];
    double x1 = hi - gr * (hi - lo);
    double x2 = lo + gr * (hi - lo);
    double f1 = evaluate(x1);
    double f2 = evaluate(x2);
    while (static_cast<int>(result.trace.size()) < cfg.max_evals &&
           (hi - lo) > cfg.rel_tol * 0.5 * (hi + lo)) {
        if (f1 <= f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - gr * (hi - lo);
            f1 = evaluate(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + gr * (hi - lo);
            f2 = evaluate(x2);
        }
    }

    result.c_star = result.trace.front().first;
    result.rmse_at_c_star = result.trace.front().second;
    for (const auto& [c, v] : result.trace) {
        if (v < result.rmse_at_c_star) {
            result.c_star = c;
            result.rmse_at_c_star = v;
        }
    }
    if (!std::isfinite(result.rmse_at_c_star))
        throw AllSolvesFailed("every shape-parameter candidate failed");
    return result;
}

}  // namespace femrbf
