#include "ionsim/fitting.hpp"

#include "ionsim/errors.hpp"

namespace ionsim::fitting {

LineFit fit_line(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    if (x.size() != y.size()) throw DimensionMismatch("fit_line: size mismatch");
    if (x.size() < 2) throw InsufficientData("fit_line: need at least 2 points");
    const double n = static_cast<double>(x.size());
    const double mx = x.mean(), my = y.mean();
    const double sxx = (x.array() - mx).square().sum();
    const double sxy = ((x.array() - mx) * (y.array() - my)).sum();
    if (sxx <= 0.0) throw InsufficientData("fit_line: degenerate abscissa");
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    const double syy = (y.array() - my).square().sum();
    f.r2 = syy > 0.0 ? (f.slope * sxy) / syy : 1.0;
    (void)n;
    return f;
}

LmResult levenberg_marquardt(
    const std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&, Eigen::MatrixXd&)>& residual,
    const Eigen::VectorXd& p0, const LmOptions& opts) {
    LmResult out;
    Eigen::VectorXd p = p0;
    Eigen::VectorXd r;
    Eigen::MatrixXd jac;
    residual(p, r, jac);
    double cost = 0.5 * r.squaredNorm();
    double lambda = opts.lambda0;

    for (int it = 0; it < opts.max_iter; ++it) {
        out.iterations = it + 1;
        const Eigen::MatrixXd jtj = jac.transpose() * jac;
        const Eigen::VectorXd g = jac.transpose() * r;
        if (g.lpNorm<Eigen::Infinity>() < opts.tol_grad) {
            out.converged = true;
            break;
        }
        Eigen::MatrixXd a = jtj;
        a.diagonal().array() += lambda * (jtj.diagonal().array() + 1e-30);
        const Eigen::VectorXd step = a.ldlt().solve(-g);
        if (!step.allFinite() || step.norm() < opts.tol_step * (p.norm() + opts.tol_step)) {
            out.converged = true;
            break;
        }
        Eigen::VectorXd pt = p + step;
        Eigen::VectorXd rt;
        Eigen::MatrixXd jt;
        residual(pt, rt, jt);
        const double ct = 0.5 * rt.squaredNorm();
        if (std::isfinite(ct) && ct < cost) {
            p = pt; r = rt; jac = jt; cost = ct;
            lambda = std::max(lambda * 0.3, 1e-12);
        } else {
            lambda *= 10.0;
            if (lambda > 1e12) {
                out.converged = true;
                break;
            }
        }
    }
    out.params = p;
    out.cost = cost;
    return out;
}

} // namespace ionsim::fitting
