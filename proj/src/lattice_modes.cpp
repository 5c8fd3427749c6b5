#include "ionsim/lattice_modes.hpp"

#include <cmath>
#include <sstream>

namespace ionsim {

void TrapConfig::validate() const {
    if (n_ions < 1) throw ValidationError("trap: n_ions must be >= 1");
    if (omega_x <= 0.0 || omega_y <= 0.0 || omega_z <= 0.0)
        throw ValidationError("trap: all trap frequencies must be positive");
}

namespace {

// Dimensionless force F_i = u_i - sum_{j!=i} sgn(u_i-u_j)/(u_i-u_j)^2.
Eigen::VectorXd chain_force(const Eigen::VectorXd& u) {
    const int n = static_cast<int>(u.size());
    Eigen::VectorXd f = u;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            const double d = u(i) - u(j);
            f(i) -= (d > 0 ? 1.0 : -1.0) / (d * d);
        }
    }
    return f;
}

Eigen::MatrixXd chain_hessian(const Eigen::VectorXd& u) {
    const int n = static_cast<int>(u.size());
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        double diag = 1.0;
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            const double inv3 = 1.0 / std::pow(std::abs(u(i) - u(j)), 3);
            diag += 2.0 * inv3;
            h(i, j) = -2.0 * inv3;
        }
        h(i, i) = diag;
    }
    return h;
}

} // namespace

IonLattice equilibrium_positions(const TrapConfig& trap, const IonSpecies& species,
                                 const EquilibriumOptions& opts) {
    trap.validate();
    const int n = trap.n_ions;

    IonLattice lat;
    lat.species = species;
    lat.trap = trap;
    lat.length_scale = std::cbrt(consts::k_coul /
                                 (species.mass_kg() * trap.omega_x * trap.omega_x));

    if (n == 1) {
        lat.positions = Eigen::VectorXd::Zero(1);
        return lat;
    }

    // Uniform initial spacing from the usual minimum-spacing estimate.
    const double s = 2.018 / std::pow(static_cast<double>(n), 0.559);
    Eigen::VectorXd u(n);
    for (int i = 0; i < n; ++i) u(i) = s * (i - 0.5 * (n - 1));

    Eigen::VectorXd f = chain_force(u);
    double fnorm = f.lpNorm<Eigen::Infinity>();
    int it = 0;
    while (fnorm > opts.tol) {
        if (++it > opts.max_iter)
            throw ConvergenceFailure("equilibrium_positions: iteration budget exhausted");
        Eigen::VectorXd step = chain_hessian(u).ldlt().solve(f);
        // Backtrack on the force norm; ordering of ions must be preserved.
        double alpha = 1.0;
        while (true) {
            Eigen::VectorXd trial = u - alpha * step;
            bool ordered = true;
            for (int i = 0; i + 1 < n; ++i)
                if (trial(i + 1) <= trial(i)) { ordered = false; break; }
            if (ordered) {
                Eigen::VectorXd ft = chain_force(trial);
                const double fn = ft.lpNorm<Eigen::Infinity>();
                if (fn < fnorm || alpha < 1e-6) {
                    u = trial; f = ft; fnorm = fn;
                    break;
                }
            }
            alpha *= 0.5;
            if (alpha < 1e-12)
                throw ConvergenceFailure("equilibrium_positions: line search stalled");
        }
    }

    u.array() -= u.mean(); // center exactly
    lat.positions = u;
    return lat;
}

ModeSet normal_modes(const IonLattice& lattice) {
    const int n = lattice.n();
    const Eigen::VectorXd& u = lattice.positions;
    const double wx = lattice.trap.omega_x;

    // Inverse cubed distances, used by both branches.
    Eigen::MatrixXd inv3 = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (j != i) inv3(i, j) = 1.0 / std::pow(std::abs(u(i) - u(j)), 3);

    ModeSet set;
    set.lattice = lattice;

    for (Axis ax : {Axis::x, Axis::y, Axis::z}) {
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
        if (ax == Axis::x) {
            for (int i = 0; i < n; ++i) {
                a(i, i) = 1.0 + 2.0 * inv3.row(i).sum();
                for (int j = 0; j < n; ++j)
                    if (j != i) a(i, j) = -2.0 * inv3(i, j);
            }
        } else {
            const double r = lattice.trap.omega(ax) / wx;
            for (int i = 0; i < n; ++i) {
                a(i, i) = r * r - inv3.row(i).sum();
                for (int j = 0; j < n; ++j)
                    if (j != i) a(i, j) = inv3(i, j);
            }
        }

        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
        if (es.info() != Eigen::Success)
            throw ConvergenceFailure("normal_modes: eigensolver failed");

        const Eigen::VectorXd ev = es.eigenvalues(); // ascending
        if (ev(0) <= 0.0) {
            std::ostringstream msg;
            msg << "normal_modes: axis " << axis_name(ax)
                << " has a non-positive Hessian eigenvalue (" << ev(0)
                << "); linear chain unstable (zigzag). Increase the " << axis_name(ax)
                << " confinement relative to omega_x.";
            throw UnstableConfiguration(msg.str());
        }

        AxisModes am;
        am.axis = ax;
        am.freq = ev.array().sqrt() * wx;
        am.modes = es.eigenvectors();
        set.axes[static_cast<int>(ax)] = std::move(am);
    }
    return set;
}

double EtaMatrix::max_abs() const {
    double m = 0.0;
    for (const auto& e : eta)
        if (e.size() > 0) m = std::max(m, e.cwiseAbs().maxCoeff());
    return m;
}

EtaMatrix lamb_dicke_matrix(const ModeSet& modes, double gradient, const IonSpecies& species) {
    const int n = modes.n_ions();
    const double m = species.mass_kg();
    EtaMatrix out;
    out.gradient = gradient;
    for (int a = 0; a < 3; ++a) {
        const AxisModes& am = modes.axes[a];
        Eigen::MatrixXd e(n, n);
        for (int k = 0; k < n; ++k) {
            const double nu = am.freq(k);
            const double x0 = std::sqrt(consts::hbar / (2.0 * m * nu)); // zero-point spread
            const double scale = species.g_factor * consts::mu_b * gradient * x0 /
                                 (consts::hbar * nu);
            e.col(k) = am.modes.col(k) * scale;
        }
        out.eta[a] = std::move(e);
    }
    return out;
}

double gradient_for_target_eta(const ModeSet& modes, const IonSpecies& species, double target) {
    if (target <= 0.0) throw ValidationError("gradient_for_target_eta: target must be positive");
    const double per_unit = lamb_dicke_matrix(modes, 1.0, species).max_abs();
    if (per_unit <= 0.0)
        throw ValidationError("gradient_for_target_eta: degenerate mode data");
    return target / per_unit;
}

} // namespace ionsim
