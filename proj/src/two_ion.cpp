#include "ionsim/two_ion.hpp"

#include <cmath>
#include <complex>
#include <sstream>

#include "ionsim/constants.hpp"
#include "ionsim/errors.hpp"
#include "ionsim/spin_model.hpp"

namespace ionsim {

namespace {

using cplx = std::complex<double>;
using Eigen::MatrixXcd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

// Dressing map, bare {|+1>,|0>,|-1>} -> dressed {u, D, d}.
Eigen::Matrix3d w_matrix() {
    const double r = 1.0 / std::sqrt(2.0);
    Eigen::Matrix3d w;
    w << 0.5, r, 0.5,
        -r, 0.0, r,
        0.5, -r, 0.5;
    return w;
}

// m labels of the dressed levels; the optional fourth level carries none.
int level_m(int s) { return s < 3 ? 1 - s : 0; }

int label_index(char c) {
    switch (c) {
        case 'u': return 0;
        case 'D': return 1;
        case 'd': return 2;
        default: throw ValidationError("two-ion initial labels must be u, D or d");
    }
}

struct BigOps {
    int levels = 3;
    int fock = 4;
    long dim = 0;
    VectorXd e_big;           // diagonal of the picture Hamiltonian (rad/s)
    MatrixXcd vs, vp, vm;     // static part and e^{+-i delta t} parts
    MatrixXcd readout;        // exp(i theta S_x) on both sites
    double delta = 0.0;       // tone detuning (rad/s)
    double precession = 0.0;  // Omega' cos(theta), removed at readout
};

long idx_of(const BigOps& b, int s1, int s2, int n) {
    return (static_cast<long>(s1) * b.levels + s2) * b.fock + n;
}

// kron(site1, site2, fock) under the (s1, s2, n) index layout.
MatrixXcd kron3(const BigOps& b, const MatrixXcd& a1, const MatrixXcd& a2,
                const MatrixXcd& f) {
    MatrixXcd out = MatrixXcd::Zero(b.dim, b.dim);
    for (int s1 = 0; s1 < b.levels; ++s1)
        for (int t1 = 0; t1 < b.levels; ++t1) {
            if (a1(s1, t1) == cplx(0.0)) continue;
            for (int s2 = 0; s2 < b.levels; ++s2)
                for (int t2 = 0; t2 < b.levels; ++t2) {
                    if (a2(s2, t2) == cplx(0.0)) continue;
                    const cplx c12 = a1(s1, t1) * a2(s2, t2);
                    for (int n = 0; n < b.fock; ++n)
                        for (int m = 0; m < b.fock; ++m) {
                            if (f(n, m) == cplx(0.0)) continue;
                            out(idx_of(b, s1, s2, n), idx_of(b, t1, t2, m)) +=
                                c12 * f(n, m);
                        }
                }
        }
    return out;
}

BigOps build_ops(const FullModelParams& p, int n_max) {
    BigOps b;
    b.levels = p.full_level_structure ? 4 : 3;
    b.fock = n_max + 1;
    b.dim = static_cast<long>(b.levels) * b.levels * b.fock;

    const double w0 = p.drive.omega0();
    const double theta = p.drive.theta;
    b.precession = p.drive.omega_prime * std::cos(theta);
    b.delta = w0 - b.precession;

    const int L = b.levels;
    const Eigen::Matrix3d w = w_matrix();

    // Site operators in the dressed basis, embedded into L x L.
    MatrixXcd ident = MatrixXcd::Identity(L, L);
    MatrixXcd sp_d = MatrixXcd::Zero(L, L);
    MatrixXcd sy_d = MatrixXcd::Zero(L, L);
    MatrixXcd p0_d = MatrixXcd::Zero(L, L);
    {
        Eigen::Matrix3d sp_bare;
        sp_bare << 0, std::sqrt(2.0), 0,
                   0, 0, std::sqrt(2.0),
                   0, 0, 0;
        sp_d.topLeftCorner(3, 3) = (w * sp_bare * w.transpose()).cast<cplx>();
        sy_d.topLeftCorner(3, 3) = spin1::sy(); // dressed picture of bare F_y
        Eigen::Matrix3d p0_bare = Eigen::Matrix3d::Zero();
        p0_bare(1, 1) = 1.0;
        p0_d.topLeftCorner(3, 3) = (w * p0_bare * w.transpose()).cast<cplx>();
    }

    // Fock-space pieces.
    MatrixXcd f_id = MatrixXcd::Identity(b.fock, b.fock);
    MatrixXcd force = MatrixXcd::Zero(b.fock, b.fock); // i (b^dag - b)
    for (int n = 0; n + 1 < b.fock; ++n) {
        force(n + 1, n) = cplx(0.0, std::sqrt(n + 1.0));
        force(n, n + 1) = cplx(0.0, -std::sqrt(n + 1.0));
    }

    // Picture diagonal.
    b.e_big.resize(b.dim);
    for (int s1 = 0; s1 < L; ++s1)
        for (int s2 = 0; s2 < L; ++s2)
            for (int n = 0; n < b.fock; ++n) {
                double e = w0 * (level_m(s1) + level_m(s2)) + p.nu * n;
                if (L == 4) {
                    if (s1 == 3) e -= p.drive.delta_r;
                    if (s2 == 3) e -= p.drive.delta_r;
                }
                b.e_big[idx_of(b, s1, s2, n)] = e;
            }

    // Static couplings: residual spin-phonon force plus the optical shift.
    const double g_sp = p.eta * w0;
    b.vs = g_sp * (kron3(b, sy_d, ident, force) + kron3(b, ident, sy_d, force));
    if (p.full_level_structure) {
        MatrixXcd c = MatrixXcd::Zero(L, L); // |0'><0_bare| in dressed labels
        const double r = 1.0 / std::sqrt(2.0);
        c(3, 0) = r;
        c(3, 2) = -r;
        MatrixXcd stark = 0.5 * p.drive.omega_r * (c + c.adjoint());
        b.vs += kron3(b, stark, ident, f_id) + kron3(b, ident, stark, f_id);
    } else {
        const double shift = 2.0 * p.drive.d_prime(); // bare |0> level shift
        b.vs += shift * (kron3(b, p0_d, ident, f_id) + kron3(b, ident, p0_d, f_id));
    }

    // Tilt tones: kappa (i S_+ e^{i delta t} - i S_- e^{-i delta t}) per ion.
    const double kappa = p.drive.omega_prime * std::sin(theta);
    MatrixXcd vp_site = cplx(0.0, kappa) * sp_d;
    b.vp = kron3(b, vp_site, ident, f_id) + kron3(b, ident, vp_site, f_id);
    b.vm = b.vp.adjoint();

    // Readout tilt on the dressed triplet of each site.
    MatrixXcd r_site = MatrixXcd::Identity(L, L);
    r_site.topLeftCorner(3, 3) = spin1::exp_i_theta_sx(theta);
    b.readout = kron3(b, r_site, r_site, f_id);
    return b;
}

// Fastest phase any matrix element of V(t) carries in the picture frame.
double max_phase_rate(const BigOps& b) {
    double w_max = std::abs(b.delta);
    for (long a = 0; a < b.dim; ++a)
        for (long c = 0; c < b.dim; ++c) {
            const double de = std::abs(b.e_big[a] - b.e_big[c]);
            if (b.vs(a, c) != cplx(0.0)) w_max = std::max(w_max, de);
            if (b.vp(a, c) != cplx(0.0) || b.vm(a, c) != cplx(0.0))
                w_max = std::max(w_max, de + std::abs(b.delta));
        }
    return w_max;
}

// out = -i U V(t) U^dag psi given U's diagonal phases and c = e^{i delta t}.
void apply_picture(const BigOps& b, const VectorXcd& phase, cplx c,
                   const VectorXcd& psi, VectorXcd& out, VectorXcd& scratch) {
    scratch = phase.conjugate().cwiseProduct(psi);
    out.noalias() = b.vs * scratch;
    out.noalias() += c * (b.vp * scratch);
    out.noalias() += std::conj(c) * (b.vm * scratch);
    out = cplx(0.0, -1.0) * phase.cwiseProduct(out);
}

struct RawTrace {
    std::vector<double> t;
    Eigen::MatrixXd p;    // samples x 9
    VectorXd leak;
    double norm_drift = 0.0;
};

RawTrace integrate(const FullModelParams& params, int n_max, double t_final,
                   int n_samples) {
    BigOps b = build_ops(params, n_max);

    // Initial state: tilted product state, motional vacuum.
    VectorXcd psi = VectorXcd::Zero(b.dim);
    psi[idx_of(b, label_index(params.initial[0]), label_index(params.initial[1]), 0)] = 1.0;
    psi = b.readout.adjoint() * psi;

    const double t_fast = consts::two_pi / max_phase_rate(b);
    const double span = t_final / n_samples;
    const int n_sub = std::max(1, static_cast<int>(std::ceil(
                          span / (t_fast / params.oversample))));
    const double dt = span / n_sub;

    RawTrace tr;
    tr.t.resize(n_samples + 1);
    tr.p.resize(n_samples + 1, 9);
    tr.leak.resize(n_samples + 1);

    VectorXcd k1(b.dim), k2(b.dim), k3(b.dim), k4(b.dim);
    VectorXcd tmp(b.dim), scratch(b.dim), amp(b.dim);
    VectorXcd u0(b.dim), u_half(b.dim), u_full(b.dim);
    VectorXcd inc_half(b.dim);
    for (long a = 0; a < b.dim; ++a)
        inc_half[a] = std::polar(1.0, b.e_big[a] * 0.5 * dt);
    const cplx c_inc_half = std::polar(1.0, b.delta * 0.5 * dt);

    auto sample = [&](int row, double t) {
        tr.t[row] = t;
        for (long a = 0; a < b.dim; ++a) {
            const int s1 = static_cast<int>(a / (b.levels * b.fock));
            const int s2 = static_cast<int>((a / b.fock) % b.levels);
            const double m_sum = level_m(s1) + level_m(s2);
            amp[a] = psi[a] * std::polar(1.0, -b.precession * m_sum * t);
        }
        amp = b.readout * amp;
        tr.p.row(row).setZero();
        double total3 = 0.0;
        for (long a = 0; a < b.dim; ++a) {
            const int s1 = static_cast<int>(a / (b.levels * b.fock));
            const int s2 = static_cast<int>((a / b.fock) % b.levels);
            if (s1 > 2 || s2 > 2) continue;
            const double w = std::norm(amp[a]);
            tr.p(row, 3 * s1 + s2) += w;
            total3 += w;
        }
        tr.leak[row] = std::max(0.0, psi.squaredNorm() - total3);
        tr.norm_drift = std::max(tr.norm_drift, std::abs(psi.norm() - 1.0));
    };

    sample(0, 0.0);
    for (int s = 0; s < n_samples; ++s) {
        const double t_base = s * span;
        // Exact phases at the interval start; incremental updates inside.
        for (long a = 0; a < b.dim; ++a)
            u0[a] = std::polar(1.0, b.e_big[a] * t_base);
        cplx c0 = std::polar(1.0, b.delta * t_base);
        for (int j = 0; j < n_sub; ++j) {
            u_half = u0.cwiseProduct(inc_half);
            u_full = u_half.cwiseProduct(inc_half);
            const cplx c_half = c0 * c_inc_half;
            const cplx c_full = c_half * c_inc_half;

            apply_picture(b, u0, c0, psi, k1, scratch);
            tmp = psi + (0.5 * dt) * k1;
            apply_picture(b, u_half, c_half, tmp, k2, scratch);
            tmp = psi + (0.5 * dt) * k2;
            apply_picture(b, u_half, c_half, tmp, k3, scratch);
            tmp = psi + dt * k3;
            apply_picture(b, u_full, c_full, tmp, k4, scratch);
            psi += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

            u0.swap(u_full);
            c0 = c_full;
        }
        sample(s + 1, (s + 1) * span);
    }
    return tr;
}

} // namespace

void FullModelParams::validate() const {
    drive.validate();
    if (nu <= 0.0) throw ValidationError("two-ion model: mode frequency must be positive");
    if (eta <= 0.0 || eta > 0.3)
        throw ValidationError("two-ion model: eta must be in (0, 0.3]");
    if (n_max < 1) throw ValidationError("two-ion model: n_max must be >= 1");
    if (oversample < 10)
        throw ValidationError("two-ion model: oversample must be >= 10");
    if (initial.size() != 2) throw ValidationError("two-ion initial needs two labels");
    label_index(initial[0]);
    label_index(initial[1]);
    const double w0 = drive.omega0();
    if (std::abs(w0 - nu) < 0.05 * nu)
        throw ResonanceError("dressing splitting within 5% of the mode frequency");
}

CouplingMatrix single_mode_coupling(double eta, double nu, const DriveParams& drive,
                                    int n_ions) {
    const double w0 = drive.omega0();
    const double pre = 0.25 * drive.omega * drive.omega;
    const double j = pre * eta * eta * 2.0 * nu / (w0 * w0 - nu * nu);
    CouplingMatrix out;
    out.j = Eigen::MatrixXd::Constant(n_ions, n_ions, j);
    return out;
}

TwoIonResult run_two_ion(const FullModelParams& params, double t_final,
                         int n_samples, bool check_truncation) {
    params.validate();
    if (t_final <= 0.0 || n_samples < 2)
        throw ValidationError("two-ion run needs t_final > 0 and n_samples >= 2");

    RawTrace tr = integrate(params, params.n_max, t_final, n_samples);

    TwoIonResult out;
    out.t = tr.t;
    out.labels = {"uu", "uD", "ud", "Du", "DD", "Dd", "du", "dD", "dd"};
    out.p_full = tr.p;
    out.p_leak = tr.leak;
    out.norm_drift = tr.norm_drift;

    if (check_truncation) {
        RawTrace tr2 = integrate(params, 2 * params.n_max, t_final, n_samples);
        out.truncation_dev = (tr2.p - tr.p).cwiseAbs().maxCoeff();
        if (out.truncation_dev > params.trunc_tol) {
            std::ostringstream msg;
            msg << "Fock truncation not converged: doubling n_max moved "
                   "populations by " << out.truncation_dev << " (tol "
                << params.trunc_tol << "); raise n_max";
            throw ConvergenceFailure(msg.str());
        }
    }

    // Independent overlay: closed-form coupling -> 9x9 dense eigensolve.
    CouplingMatrix cm = single_mode_coupling(params.eta, params.nu, params.drive, 2);
    SpinModelParams sp = effective_model_params(cm, params.drive, false);
    out.j_bare = cm.j(0, 1);
    out.j_xy = sp.j_eff;
    out.lambda = sp.lambda;
    out.d_norm = sp.d;

    HamiltonianOperator h9 = build_hamiltonian(sp);
    Eigen::MatrixXd hd = Eigen::MatrixXd(h9.mat);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hd);
    std::vector<int> ms = {level_m(label_index(params.initial[0])),
                           level_m(label_index(params.initial[1]))};
    VectorXcd psi0 = product_state(ms);
    VectorXcd coeff = es.eigenvectors().transpose().cast<cplx>() * psi0;
    out.p_eff.resize(n_samples + 1, 9);
    for (int r = 0; r <= n_samples; ++r) {
        VectorXcd ph(coeff.size());
        for (int i = 0; i < coeff.size(); ++i)
            ph[i] = std::polar(1.0, -es.eigenvalues()[i] * out.t[r]) * coeff[i];
        VectorXcd psi_t = es.eigenvectors().cast<cplx>() * ph;
        for (int col = 0; col < 9; ++col) out.p_eff(r, col) = std::norm(psi_t[col]);
    }
    return out;
}

} // namespace ionsim
