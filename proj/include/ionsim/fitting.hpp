#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

namespace ionsim::fitting {

// Straight-line least squares y = a + b x. Returns {a, b, r2}.
struct LineFit {
    double intercept = 0.0;
    double slope = 0.0;
    double r2 = 0.0;
};
LineFit fit_line(const Eigen::VectorXd& x, const Eigen::VectorXd& y);

// Small dense Levenberg-Marquardt. residual(p, r, J) fills r (m) and J (m x n).
// Deterministic: fixed damping schedule, no randomness.
struct LmOptions {
    int max_iter = 200;
    double tol_grad = 1e-12;
    double tol_step = 1e-14;
    double lambda0 = 1e-3;
};
struct LmResult {
    Eigen::VectorXd params;
    double cost = 0.0; // 0.5 * ||r||^2
    int iterations = 0;
    bool converged = false;
};
LmResult levenberg_marquardt(
    const std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&, Eigen::MatrixXd&)>& residual,
    const Eigen::VectorXd& p0, const LmOptions& opts = {});

} // namespace ionsim::fitting
