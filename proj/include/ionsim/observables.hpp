#pragma once

// Ground-state diagnostics: connected correlations with an exp-plus-power
// fit, string order, entanglement spectrum/entropy across a cut, and the
// dressed-state noise-robustness report. All operate on full-basis states
// (use embed_full for sector-basis vectors) expressed in the simulation
// (m-label) basis.

#include <Eigen/Dense>
#include <complex>
#include <string>
#include <vector>

#include "ionsim/fitting.hpp"

namespace ionsim {

enum class SpinAxis { x, y, z };
char axis_label(SpinAxis a);

struct CorrelationReport {
    SpinAxis axis = SpinAxis::z;
    Eigen::MatrixXd c;          // connected <Si Sj> - <Si><Sj>
    Eigen::VectorXd site_mean;  // <Si>
    // Distance-resolved magnitude |c| averaged over middle-chain pairs:
    std::vector<double> r;
    std::vector<double> c_of_r;
};

struct CorrelationFit {
    double a_exp = 0.0;   // amplitude of A e^{-r/xi}
    double xi = 0.0;      // correlation length (1/s_rate)
    double b_pow = 0.0;   // amplitude of B r^{-a}
    double a_pow = 0.0;   // power-law exponent
    double residual = 0.0; // sum of squared relative residuals ((fit-y)/y)^2
    double r2 = 0.0;       // weighted R^2 matching the 1/y^2 objective
    bool b_degenerate = false; // |B| < 1e-6 |A|: power tail unresolved
    int n_points = 0;
};

CorrelationReport correlation_function(const Eigen::VectorXcd& psi, int n_sites,
                                       SpinAxis axis = SpinAxis::z);

// Fit of y(r) = A e^{-r/xi} + B r^{-a} to |C|(r), minimizing relative
// residuals so the decaying tail is weighted on par with the head.
// Deterministic: seeded from the pure-exponential and pure-power linear
// fits, best of the two refined starts wins. Throws InsufficientData
// below 4 usable points.
CorrelationFit correlation_fit(const std::vector<double>& r,
                               const std::vector<double>& c_of_r);

struct StringOrderValue {
    SpinAxis axis = SpinAxis::z;
    int i = 0, j = 0;
    std::complex<double> expectation; // of -S_i exp(i pi sum_l S_l) S_j
    double value = 0.0;               // real part
};

// String covers every site strictly between the endpoints; j = i + 1 is the
// legitimate empty-string case and reduces to -<S_i S_j> exactly.
StringOrderValue string_order(const Eigen::VectorXcd& psi, int n_sites,
                              SpinAxis axis, int i, int j);

struct EntanglementReport {
    int cut = 0;                    // sites [0, cut) form the left block
    Eigen::VectorXd spectrum;       // reduced-density eigenvalues, descending
    double entropy = 0.0;           // -sum p ln p (natural log)
    double group_tol = 1e-2;        // relative degeneracy tolerance used
    std::vector<int> multiplets;    // group sizes, in spectrum order
    bool even_multiplets = false;   // all groups above weight_floor even-sized
    double weight_floor = 1e-8;     // levels below this skip the parity check
};

EntanglementReport entanglement_spectrum(const Eigen::VectorXcd& psi, int n_sites,
                                         int cut, double group_tol = 1e-2,
                                         double weight_floor = 1e-8);
double entanglement_entropy(const Eigen::VectorXcd& psi, int n_sites, int cut);

struct RobustnessReport {
    Eigen::Vector3d fz_dressed_diag;  // <s|F_z|s> for s = u, D, d
    double total_sz_expectation = 0.0;
    double total_sz_norm = 0.0;       // || sum_i Sz_i |psi> ||
    double total_sx_norm = 0.0;       // || sum_i Sx_i |psi> ||
    bool in_dfs = false;              // first-order dephasing-free subspace
};

RobustnessReport robustness_check(const Eigen::VectorXcd& psi, int n_sites);

} // namespace ionsim
