#pragma once

// Phonon-mediated effective spin-spin couplings for a gradient-driven dressed
// chain, residual spin-phonon terms, the mapping onto XXZ + single-ion
// anisotropy parameters, and validity diagnostics for the perturbative regime.

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "ionsim/lattice_modes.hpp"

namespace ionsim {

struct DriveParams {
    double omega = 0.0;        // Omega, symmetric dressing Rabi frequency (rad/s)
    double omega_prime = 0.0;  // Omega', anisotropy-control field (rad/s)
    double theta = 0.0;        // mixing angle of the control field (rad)
    double omega_r = 0.0;      // Rabi frequency of the Stark-shift field (rad/s)
    double delta_r = 0.0;      // its detuning (rad/s), sign kept
    std::optional<double> d_prime_override; // direct (S_z)^2 coefficient (rad/s)

    // Dressing splitting Omega/sqrt2: the energy distance between adjacent
    // dressed levels, and the frequency all mode denominators compare against.
    double omega0() const { return omega / std::sqrt(2.0); }

    // Stark-induced (S_z)^2 coefficient in the dressed frame,
    // D' = Omega_r^2 / (8 Delta_r).
    double d_prime() const {
        if (d_prime_override) return *d_prime_override;
        if (omega_r == 0.0) return 0.0;
        if (delta_r == 0.0)
            throw ValidationError("drive: omega_r set but delta_r is zero");
        return omega_r * omega_r / (8.0 * delta_r);
    }
    void validate() const;
};

struct CouplingOptions {
    double resonance_guard = 0.05; // reject |omega0 - nu| < guard * nu
    std::vector<Axis> axes = {Axis::x, Axis::y, Axis::z};
};

// Symmetric matrix of second-order couplings, diagonal included:
//   J_ij = (Omega/2)^2 sum_{n,alpha} eta_in eta_jn * 2 nu_n / (omega0^2 - nu_n^2).
// Diagonal J_ii feeds the on-site (S_z)^2 correction; off-diagonal entries are
// the bare (pre mixing-angle) exchange couplings. Units rad/s.
struct CouplingMatrix {
    Eigen::MatrixXd j;
    int n() const { return static_cast<int>(j.rows()); }
};

CouplingMatrix effective_coupling_matrix(const EtaMatrix& etas, const ModeSet& modes,
                                         const DriveParams& drive,
                                         const CouplingOptions& opts = {});

// Residual spin-phonon coefficients per ion,
//   J^res_{j,nm} = sqrt2 Omega (Omega/4)^2 eta_jn eta_jm
//                  * [1/(omega0^2 - nu_n^2) + 1/(omega0^2 - nu_m^2)],
// over flattened (axis-major) mode pairs. summary = max_j sum_{nm} |J^res|.
struct ResidualReport {
    std::vector<Eigen::MatrixXd> per_ion; // n_modes_total x n_modes_total
    std::vector<std::string> mode_labels; // "x:0", ... aligned with rows/cols
    double max_total = 0.0;               // rad/s
};

ResidualReport residual_coupling(const EtaMatrix& etas, const ModeSet& modes,
                                 const DriveParams& drive,
                                 const CouplingOptions& opts = {});

// Parameters of H = sum_{i<j} Jxy_ij [ (SxSx + SySy) + lambda SzSz ]
//                 + D Jeff sum_i (Sz_i)^2 - h Jeff sum_i (-1)^i Sz_i.
// j_xy carries energy units (rad/s); lambda, d and h are dimensionless.
struct SpinModelParams {
    int n_sites = 0;
    Eigen::MatrixXd j_xy;        // mixing-angle-factored bond couplings, rad/s
    double lambda = 0.0;
    double d = 0.0;              // in units of j_eff
    double h_staggered = 0.0;    // in units of j_eff
    double j_eff = 0.0;          // reference scale: central nearest-neighbor bond, rad/s
    bool nn_truncation = false;
    bool periodic = false;

    double d_abs() const { return d * j_eff; }
    double h_abs() const { return h_staggered * j_eff; }

    // Uniform nearest-neighbor model in units of j (dimensionless workhorse).
    static SpinModelParams uniform_nn(int n, double lambda, double d, double h = 0.0,
                                      double j = 1.0, bool periodic = false);
    void validate() const;
};

// Dressed-frame reduction of the driven model:
//   Jxy_ij = J_ij (1 + cos^2 th)/2,     lambda = sin^2 th / (1 + cos^2 th),
//   on-site = (D' - J_ii/2) ((1 + cos^2 th)/2 - sin^2 th),   D = on-site / Jeff.
// The on-site coefficient uses the mean diagonal J_ii; per-ion spread is
// reported separately by the CLI layer.
SpinModelParams effective_model_params(const CouplingMatrix& coupling, const DriveParams& drive,
                                       bool nn_truncation = false);

// Hierarchy checks for the perturbative derivation. ratio >= 5 passes, 2..5
// warns, < 2 fails; every configured inequality appears exactly once.
struct ValidityCheck {
    std::string name;
    double small = 0.0;   // the side that must be smaller
    double large = 0.0;
    double ratio = 0.0;   // large/small, inf when small == 0
    std::string status;   // "pass" | "warn" | "fail"
};
struct ValidityReport {
    std::vector<ValidityCheck> checks;
    std::string overall;  // worst status
    bool ok() const { return overall != "fail"; }
    std::string render_text() const;
};

// opts.axes restricts eta to the participating branches (a directional
// gradient leaves the other axes uncoupled).
ValidityReport validate_hierarchy(const EtaMatrix& etas, const ModeSet& modes,
                                  const DriveParams& drive,
                                  const CouplingOptions& opts = {});

// Fit |J_ij| ~ |x_i - x_j|^(-alpha) over middle-chain pairs (both sites within
// the central half) via linear LS in log-log space.
struct PowerLawFit {
    double alpha = 0.0;
    double r2 = 0.0;
    int n_pairs = 0;
};
PowerLawFit power_law_fit(const CouplingMatrix& coupling, const IonLattice& lattice);

} // namespace ionsim
