#pragma once

// Ion chain statics: equilibrium positions in a harmonic trap, normal modes
// per principal axis, and magnetic-gradient Lamb-Dicke factors.

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <string>

#include "ionsim/constants.hpp"
#include "ionsim/errors.hpp"

namespace ionsim {

enum class Axis : int { x = 0, y = 1, z = 2 };
inline const char* axis_name(Axis a) { return a == Axis::x ? "x" : (a == Axis::y ? "y" : "z"); }

struct IonSpecies {
    double mass_amu = 171.0; // 171Yb+ by default
    double g_factor = 1.0;
    double mass_kg() const { return mass_amu * consts::amu; }
};

struct TrapConfig {
    int n_ions = 2;
    // Angular trap frequencies, rad/s. x is the chain axis.
    double omega_x = 0.0;
    double omega_y = 0.0;
    double omega_z = 0.0;

    static TrapConfig from_mhz(int n, double fx_mhz, double fy_mhz, double fz_mhz) {
        TrapConfig t;
        t.n_ions = n;
        t.omega_x = consts::mhz_to_rad(fx_mhz);
        t.omega_y = consts::mhz_to_rad(fy_mhz);
        t.omega_z = consts::mhz_to_rad(fz_mhz);
        return t;
    }
    double omega(Axis a) const {
        return a == Axis::x ? omega_x : (a == Axis::y ? omega_y : omega_z);
    }
    void validate() const;
};

// Equilibrium chain. positions are dimensionless (units of the Coulomb length
// scale l = (e^2/(4 pi eps0 m omega_x^2))^(1/3)), strictly ascending, and
// centered so their sum is zero.
struct IonLattice {
    IonSpecies species;
    TrapConfig trap;
    Eigen::VectorXd positions;  // dimensionless
    double length_scale = 0.0;  // meters

    int n() const { return static_cast<int>(positions.size()); }
    Eigen::VectorXd positions_m() const { return positions * length_scale; }
};

struct EquilibriumOptions {
    double tol = 1e-12;      // max-norm of the dimensionless force
    int max_iter = 10000;
};

// Damped Newton on the dimensionless potential
//   V(u) = sum_i u_i^2/2 + sum_{i<j} 1/|u_i-u_j|.
// Throws ConvergenceFailure if the force tolerance is not reached in budget.
IonLattice equilibrium_positions(const TrapConfig& trap, const IonSpecies& species,
                                 const EquilibriumOptions& opts = {});

// Normal modes of one axis. Columns of modes are orthonormal eigenvectors,
// frequencies ascending, and freq[n] pairs with modes.col(n).
struct AxisModes {
    Axis axis = Axis::x;
    Eigen::VectorXd freq;    // angular, rad/s
    Eigen::MatrixXd modes;   // n_ions x n_ions
};

struct ModeSet {
    IonLattice lattice;
    std::array<AxisModes, 3> axes; // x, y, z

    const AxisModes& axis(Axis a) const { return axes[static_cast<int>(a)]; }
    int n_ions() const { return lattice.n(); }
};

// Hessian eigenproblem about the equilibrium. Axial spectrum contains the
// center-of-mass mode at exactly omega_x; radial branches are stable only if
// the trap is anisotropic enough for a linear chain, otherwise
// UnstableConfiguration is thrown (zigzag threshold).
ModeSet normal_modes(const IonLattice& lattice);

// eta[alpha](i, n) for ion i and mode n of axis alpha:
//   eta = g mu_B B' M_{i,n} sqrt(hbar / (2 m nu_n)) / (hbar nu_n),
// the magnetic-gradient analog of the Lamb-Dicke parameter. Linear in the
// gradient B' (T/m); the same scalar gradient is applied to every axis.
struct EtaMatrix {
    double gradient = 0.0; // T/m
    std::array<Eigen::MatrixXd, 3> eta; // per axis, n_ions x n_ions

    const Eigen::MatrixXd& axis(Axis a) const { return eta[static_cast<int>(a)]; }
    double max_abs() const;
};

EtaMatrix lamb_dicke_matrix(const ModeSet& modes, double gradient, const IonSpecies& species);

// Gradient that makes max |eta| equal target (eta is linear in the gradient).
double gradient_for_target_eta(const ModeSet& modes, const IonSpecies& species, double target);

} // namespace ionsim
