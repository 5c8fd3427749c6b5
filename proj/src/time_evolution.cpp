#include "ionsim/time_evolution.hpp"

#include <cmath>
#include <complex>

#include "ionsim/errors.hpp"

namespace ionsim {

namespace {

using cvec = Eigen::VectorXcd;
using cplx = std::complex<double>;

struct KrylovBasis {
    Eigen::MatrixXcd v;        // dim x (m_used)
    Eigen::VectorXd alpha;     // diagonal of T
    Eigen::VectorXd beta;      // off-diagonal, beta[j] couples j and j+1
    int m_used = 0;
    double beta_break = 0.0;   // coupling out of the last vector (0 if happy)
    double scale = 1.0;
};

KrylovBasis build_krylov(const ApplyFn& apply, const cvec& v0, int m) {
    const long dim = v0.size();
    KrylovBasis kb;
    kb.v.resize(dim, std::min<long>(m, dim));
    kb.alpha.resize(kb.v.cols());
    kb.beta = Eigen::VectorXd::Zero(kb.v.cols());
    kb.v.col(0) = v0;
    cvec w(dim);
    int j = 0;
    for (; j < kb.v.cols(); ++j) {
        apply(kb.v.col(j), w);
        const double a = kb.v.col(j).dot(w).real();
        kb.alpha[j] = a;
        w -= a * kb.v.col(j);
        if (j > 0) w -= kb.beta[j - 1] * kb.v.col(j - 1);
        // One extra projection pass keeps the small basis orthonormal.
        for (int i = 0; i <= j; ++i) w -= kb.v.col(i).dot(w) * kb.v.col(i);
        const double b = w.norm();
        kb.scale = std::max(kb.scale, std::abs(a) + b);
        if (j + 1 < kb.v.cols() && b > 1e-14 * kb.scale) {
            kb.beta[j] = b;
            kb.v.col(j + 1) = w / b;
        } else {
            kb.beta_break = b;
            ++j;
            break;
        }
    }
    kb.m_used = j;
    return kb;
}

// u = exp(-i T dt) e1 on the m_used x m_used tridiagonal T.
Eigen::VectorXcd small_exp(const KrylovBasis& kb, double dt) {
    const int m = kb.m_used;
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) {
        t(i, i) = kb.alpha[i];
        if (i + 1 < m) t(i, i + 1) = t(i + 1, i) = kb.beta[i];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
    Eigen::VectorXcd phases(m);
    for (int i = 0; i < m; ++i)
        phases[i] = std::exp(cplx(0.0, -es.eigenvalues()[i] * dt));
    Eigen::VectorXd e1_coeffs = es.eigenvectors().row(0).transpose();
    return es.eigenvectors().cast<cplx>() *
           (phases.array() * e1_coeffs.array().cast<cplx>()).matrix();
}

} // namespace

Eigen::VectorXcd krylov_propagate_op(const ApplyFn& apply, long dim, const cvec& psi0,
                                     double t, const KrylovOptions& opts,
                                     PropagateStats* stats) {
    if (dim != psi0.size()) throw DimensionMismatch("krylov_propagate: state size mismatch");
    PropagateStats st;
    st.min_dt = std::abs(t);
    if (t == 0.0 || psi0.norm() == 0.0) {
        if (stats) *stats = st;
        return psi0;
    }
    const double total = t;
    double remaining = t;
    double dt = t;
    cvec psi = psi0;
    while (std::abs(remaining) > 1e-15 * std::abs(total)) {
        if (std::abs(dt) > std::abs(remaining)) dt = remaining;
        const double nrm = psi.norm();
        KrylovBasis kb = build_krylov(apply, psi / nrm, opts.m);
        bool accepted = false;
        while (!accepted) {
            Eigen::VectorXcd u = small_exp(kb, dt);
            const double est = kb.beta_break * std::abs(u[kb.m_used - 1]);
            const double budget = opts.tol * std::abs(dt) / std::abs(total);
            if (est <= budget || kb.beta_break <= 1e-14 * kb.scale) {
                psi = nrm * (kb.v.leftCols(kb.m_used) * u);
                remaining -= dt;
                st.substeps += 1;
                st.min_dt = std::min(st.min_dt, std::abs(dt));
                if (est < 0.1 * budget) dt *= 1.6; // safe growth
                accepted = true;
            } else {
                dt *= 0.5;
                st.rejections += 1;
            }
            if (st.substeps + st.rejections > opts.max_substeps)
                throw StepControlFailure(
                    "krylov propagator exceeded substep budget; interval or "
                    "tolerance likely unreasonable");
        }
    }
    if (stats) *stats = st;
    return psi;
}

Eigen::VectorXcd krylov_propagate(const HamiltonianOperator& h, const cvec& psi0,
                                  double t, const KrylovOptions& opts,
                                  PropagateStats* stats) {
    ApplyFn fn = [&h](const cvec& x, cvec& y) { y = h.apply(x); };
    return krylov_propagate_op(fn, h.dim(), psi0, t, opts, stats);
}

Eigen::VectorXcd cf4_step(const HamiltonianParts& parts, const ScheduleFn& schedule,
                          double t, double dt, const cvec& psi,
                          const KrylovOptions& opts) {
    const double root3_6 = std::sqrt(3.0) / 6.0;
    const double c1 = 0.5 - root3_6, c2 = 0.5 + root3_6;   // Gauss nodes
    const double wp = 0.25 + root3_6, wm = 0.25 - root3_6; // exponent weights
    const ScheduleEval s1 = schedule(t + c1 * dt);
    const ScheduleEval s2 = schedule(t + c2 * dt);

    auto combo = [&](double w_early, double w_late) {
        const double cd = w_early * s1.d + w_late * s2.d;
        const double ch = w_early * s1.h + w_late * s2.h;
        // H_combo = (w_early + w_late) * exchange + cd * onsite - ch * staggered
        const double cx = w_early + w_late;
        return [&, cd, ch, cx](const cvec& x, cvec& y) {
            y = cx * parts.exchange.apply(x);
            y.noalias() += cd * parts.onsite.apply(x);
            y.noalias() -= ch * parts.staggered.apply(x);
        };
    };

    KrylovOptions half = opts;
    half.tol = 0.5 * opts.tol;
    // First exponential weights the early node more; then the late-node one.
    cvec mid = krylov_propagate_op(combo(wp, wm), psi.size(), psi, dt, half);
    return krylov_propagate_op(combo(wm, wp), psi.size(), mid, dt, half);
}

EvolveResult evolve_schedule(const HamiltonianParts& parts, const ScheduleFn& schedule,
                             double t0, double t1, int n_steps, const cvec& psi0,
                             const KrylovOptions& opts,
                             const std::function<void(int, double, const cvec&)>& sampler) {
    if (n_steps < 1) throw ValidationError("evolve_schedule: n_steps must be >= 1");
    EvolveResult out;
    out.psi = psi0;
    const double dt = (t1 - t0) / n_steps;
    if (sampler) sampler(0, t0, out.psi);
    for (int s = 0; s < n_steps; ++s) {
        const double t = t0 + s * dt;
        out.psi = cf4_step(parts, schedule, t, dt, out.psi, opts);
        out.norm_drift = std::max(out.norm_drift, std::abs(out.psi.norm() - 1.0));
        if (sampler) sampler(s + 1, t0 + (s + 1) * dt, out.psi);
    }
    out.steps = n_steps;
    return out;
}

} // namespace ionsim
