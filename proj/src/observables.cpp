#include "ionsim/observables.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ionsim/errors.hpp"
#include "ionsim/spin_model.hpp"

namespace ionsim {

namespace {

using cplx = std::complex<double>;
using Eigen::VectorXcd;

Eigen::Matrix3cd site_op(SpinAxis a) {
    switch (a) {
        case SpinAxis::x: return spin1::sx().cast<cplx>();
        case SpinAxis::y: return spin1::sy();
        case SpinAxis::z: return spin1::sz().cast<cplx>();
    }
    return {};
}

// exp(i pi S^alpha) = 1 - 2 (S^alpha)^2 for spin-1 (eigenvalues 0, +-1).
Eigen::Matrix3cd pi_rotation(SpinAxis a) {
    const Eigen::Matrix3cd s = site_op(a);
    return Eigen::Matrix3cd::Identity() - 2.0 * s * s;
}

void check_state(const VectorXcd& psi, int n_sites) {
    if (n_sites < 1 || psi.size() != pow3(n_sites))
        throw DimensionMismatch("observable: state size does not match site count");
}

} // namespace

char axis_label(SpinAxis a) {
    switch (a) {
        case SpinAxis::x: return 'x';
        case SpinAxis::y: return 'y';
        case SpinAxis::z: return 'z';
    }
    return '?';
}

CorrelationReport correlation_function(const VectorXcd& psi, int n_sites,
                                       SpinAxis axis) {
    check_state(psi, n_sites);
    const Eigen::Matrix3cd op = site_op(axis);

    CorrelationReport rep;
    rep.axis = axis;
    rep.site_mean.resize(n_sites);
    Eigen::MatrixXd raw(n_sites, n_sites);

    VectorXcd phi_i, phi_j;
    for (int i = 0; i < n_sites; ++i) {
        phi_i = apply_site_local(op, psi, i, n_sites);
        rep.site_mean[i] = psi.dot(phi_i).real();
        raw(i, i) = phi_i.squaredNorm();
        for (int j = i + 1; j < n_sites; ++j) {
            phi_j = apply_site_local(op, psi, j, n_sites);
            raw(i, j) = raw(j, i) = phi_i.dot(phi_j).real();
        }
    }
    rep.c = raw - rep.site_mean * rep.site_mean.transpose();
    rep.c = 0.5 * (rep.c + rep.c.transpose()).eval();

    // Distance profile over the middle of the chain to soften edge effects.
    const int lo = n_sites / 4, hi = n_sites - n_sites / 4;
    for (int r = 1; r < hi - lo; ++r) {
        double sum = 0.0;
        int count = 0;
        for (int i = lo; i + r < hi; ++i) {
            sum += rep.c(i, i + r);
            ++count;
        }
        if (count > 0) {
            rep.r.push_back(r);
            rep.c_of_r.push_back(sum / count);
        }
    }
    return rep;
}

CorrelationFit correlation_fit(const std::vector<double>& r,
                               const std::vector<double>& c_of_r) {
    if (r.size() != c_of_r.size())
        throw DimensionMismatch("correlation_fit: r and c lengths differ");
    std::vector<double> xs, ys;
    for (std::size_t k = 0; k < r.size(); ++k) {
        const double y = std::abs(c_of_r[k]);
        if (y > 1e-300 && r[k] > 0.0) {
            xs.push_back(r[k]);
            ys.push_back(y);
        }
    }
    if (xs.size() < 4)
        throw InsufficientData("correlation_fit: need at least 4 nonzero separations");

    const int m = static_cast<int>(xs.size());
    Eigen::VectorXd vr = Eigen::Map<Eigen::VectorXd>(xs.data(), m);
    Eigen::VectorXd vy = Eigen::Map<Eigen::VectorXd>(ys.data(), m);
    Eigen::VectorXd ln_y = vy.array().log();
    Eigen::VectorXd ln_r = vr.array().log();

    // Linear seeds: pure exponential and pure power law.
    const auto le = fitting::fit_line(vr, ln_y);
    const auto lp = fitting::fit_line(ln_r, ln_y);
    const double a_seed = std::exp(le.intercept);
    const double s_seed = std::max(-le.slope, 1e-9);
    const double b_seed = std::exp(lp.intercept);
    const double p_seed = std::max(-lp.slope, 0.1);

    // Model y = A e^{-s r} + B r^{-a}, p = (A, s, B, a). Residuals are
    // relative, (model - y) / y: the data span many decades and an absolute
    // objective would let the large-y head dominate while the tail -- which
    // is what distinguishes the two decay laws -- contributes nothing.
    auto residual = [&](const Eigen::VectorXd& p, Eigen::VectorXd& res,
                        Eigen::MatrixXd& jac) {
        res.resize(m);
        jac.resize(m, 4);
        for (int k = 0; k < m; ++k) {
            const double w = 1.0 / vy[k];
            const double e = std::exp(-p[1] * vr[k]);
            const double pw = std::pow(vr[k], -p[3]);
            res[k] = (p[0] * e + p[2] * pw - vy[k]) * w;
            jac(k, 0) = e * w;
            jac(k, 1) = -p[0] * vr[k] * e * w;
            jac(k, 2) = pw * w;
            jac(k, 3) = -p[2] * pw * std::log(vr[k]) * w;
        }
    };

    Eigen::VectorXd p1(4), p2(4);
    p1 << a_seed, s_seed, 1e-3 * a_seed, 2.0;
    p2 << 1e-3 * b_seed, 1.0 / vr.maxCoeff(), b_seed, p_seed;
    const auto f1 = fitting::levenberg_marquardt(residual, p1);
    const auto f2 = fitting::levenberg_marquardt(residual, p2);
    const auto& best = f1.cost <= f2.cost ? f1 : f2;

    CorrelationFit fit;
    fit.a_exp = best.params[0];
    fit.xi = 1.0 / std::max(best.params[1], 1e-300);
    fit.b_pow = best.params[2];
    fit.a_pow = best.params[3];
    fit.residual = 2.0 * best.cost; // sum of squared relative residuals
    fit.n_points = m;
    fit.b_degenerate = std::abs(fit.b_pow) < 1e-6 * std::abs(fit.a_exp);

    // Weighted R^2 consistent with the 1/y^2-weighted objective.
    const Eigen::ArrayXd w = vy.array().square().inverse();
    const double mean_w = (w * vy.array()).sum() / w.sum();
    const double ss_tot = (w * (vy.array() - mean_w).square()).sum();
    fit.r2 = ss_tot > 0.0 ? 1.0 - fit.residual / ss_tot : 1.0;
    return fit;
}

StringOrderValue string_order(const VectorXcd& psi, int n_sites, SpinAxis axis,
                              int i, int j) {
    check_state(psi, n_sites);
    if (i < 0 || j >= n_sites || i >= j)
        throw ValidationError("string_order: need 0 <= i < j < n_sites");

    const Eigen::Matrix3cd s = site_op(axis);
    const Eigen::Matrix3cd rot = pi_rotation(axis);

    VectorXcd phi = apply_site_local(s, psi, j, n_sites);
    for (int l = i + 1; l < j; ++l) phi = apply_site_local(rot, phi, l, n_sites);
    phi = apply_site_local(s, phi, i, n_sites);

    StringOrderValue out;
    out.axis = axis;
    out.i = i;
    out.j = j;
    out.expectation = -psi.dot(phi);
    out.value = out.expectation.real();
    return out;
}

EntanglementReport entanglement_spectrum(const VectorXcd& psi, int n_sites, int cut,
                                         double group_tol, double weight_floor) {
    check_state(psi, n_sites);
    if (cut < 1 || cut >= n_sites)
        throw ValidationError("entanglement cut must satisfy 1 <= cut <= n_sites-1");

    const long rows = pow3(cut);
    const long cols = pow3(n_sites - cut);
    Eigen::MatrixXcd m(rows, cols);
    for (long a = 0; a < rows; ++a)
        for (long b = 0; b < cols; ++b) m(a, b) = psi[a * cols + b];

    // Diagonalize the reduced density matrix on the smaller side; its nonzero
    // eigenvalues equal the squared Schmidt coefficients of the cut.
    Eigen::MatrixXcd rho = (rows <= cols) ? Eigen::MatrixXcd(m * m.adjoint())
                                          : Eigen::MatrixXcd(m.adjoint() * m);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho);
    if (es.info() != Eigen::Success)
        throw ConvergenceFailure("entanglement_spectrum: eigensolver failed");
    Eigen::VectorXd p = es.eigenvalues().reverse(); // descending
    for (int k = 0; k < p.size(); ++k) p[k] = std::max(0.0, p[k]);

    EntanglementReport rep;
    rep.cut = cut;
    rep.group_tol = group_tol;
    rep.weight_floor = weight_floor;
    rep.spectrum = p;

    double s = 0.0;
    for (int k = 0; k < p.size(); ++k)
        if (p[k] > 0.0) s -= p[k] * std::log(p[k]);
    rep.entropy = std::max(0.0, s);

    // Group adjacent levels within relative tolerance of the group head.
    rep.even_multiplets = true;
    int k = 0;
    while (k < p.size()) {
        const double head = p[k];
        int size = 1;
        while (k + size < p.size() &&
               std::abs(p[k + size] - head) <= group_tol * std::max(head, 1e-300))
            ++size;
        rep.multiplets.push_back(size);
        if (head > weight_floor && size % 2 != 0) rep.even_multiplets = false;
        k += size;
    }
    return rep;
}

double entanglement_entropy(const VectorXcd& psi, int n_sites, int cut) {
    return entanglement_spectrum(psi, n_sites, cut).entropy;
}

RobustnessReport robustness_check(const VectorXcd& psi, int n_sites) {
    check_state(psi, n_sites);
    RobustnessReport rep;

    // Bare F_z conjugated into the dressed basis has zero diagonal.
    const Eigen::Matrix3cd w = DressedBasis::w().cast<cplx>();
    const Eigen::Matrix3cd fz_d =
        w * spin1::sz().cast<cplx>() * w.adjoint();
    for (int s = 0; s < 3; ++s) rep.fz_dressed_diag[s] = fz_d(s, s).real();

    VectorXcd acc_z = VectorXcd::Zero(psi.size());
    VectorXcd acc_x = VectorXcd::Zero(psi.size());
    const Eigen::Matrix3cd sz = spin1::sz().cast<cplx>();
    const Eigen::Matrix3cd sx = spin1::sx().cast<cplx>();
    for (int i = 0; i < n_sites; ++i) {
        acc_z += apply_site_local(sz, psi, i, n_sites);
        acc_x += apply_site_local(sx, psi, i, n_sites);
    }
    rep.total_sz_expectation = psi.dot(acc_z).real();
    rep.total_sz_norm = acc_z.norm();
    rep.total_sx_norm = acc_x.norm();
    rep.in_dfs = rep.total_sz_norm <= 1e-8;
    return rep;
}

} // namespace ionsim
