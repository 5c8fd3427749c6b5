#pragma once

// Spin-1 chain Hamiltonians. Basis conventions used everywhere:
//  - site-major tensor product, site 0 is the most significant digit;
//  - local order {+1, 0, -1}, so digit d at a site means m = 1 - d;
//  - sector bases keep full-space indices in ascending order.

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <complex>
#include <optional>
#include <vector>

#include "ionsim/coupling_engine.hpp"
#include "ionsim/errors.hpp"

namespace ionsim {

using cplx = std::complex<double>;

inline long pow3(int n) {
    long r = 1;
    while (n-- > 0) r *= 3;
    return r;
}

namespace spin1 {
// 3x3 matrices in the {+1, 0, -1} basis.
Eigen::Matrix3d sx();
Eigen::Matrix3cd sy();
Eigen::Matrix3d sz();
Eigen::Matrix3d sz2();
Eigen::Matrix3d sp();           // S+
Eigen::Matrix3d sm();           // S-
Eigen::Matrix3d exp_i_pi_sx();  // exp(i pi Sx) = 1 - 2 Sx^2 (real)
Eigen::Matrix3d exp_i_pi_sz();  // diag(-1, 1, -1)
Eigen::Matrix3cd exp_i_theta_sx(double theta);
} // namespace spin1

// m value of site `site` in full-space basis state `idx`.
inline int m_of(long idx, int site, int n_sites) {
    return 1 - static_cast<int>((idx / pow3(n_sites - 1 - site)) % 3);
}

struct SectorBasis {
    int n_sites = 0;
    int total_sz = 0;
    std::vector<long> states;      // ascending full-space indices
    std::vector<int> lookup;       // full index -> position, -1 if absent

    long dim() const { return static_cast<long>(states.size()); }
    int position(long full_index) const { return lookup[static_cast<std::size_t>(full_index)]; }
};

SectorBasis sector_basis(int n_sites, int total_sz);

// Dimension guard: full-space builds refuse n_sites beyond this default.
inline constexpr int default_max_sites_full = 12;

// Real symmetric sparse Hamiltonian, optionally restricted to an Sz sector.
struct HamiltonianOperator {
    int n_sites = 0;
    std::optional<int> sector;            // total Sz if sector-restricted
    Eigen::SparseMatrix<double, Eigen::RowMajor> mat;

    long dim() const { return mat.rows(); }
    Eigen::VectorXd apply(const Eigen::VectorXd& v) const { return mat * v; }
    Eigen::VectorXcd apply(const Eigen::VectorXcd& v) const;
    double hermiticity_defect() const;    // max |H - H^T|
};

// H = sum_{i<j} Jxy_ij [ (SxSx + SySy) + lambda SzSz ]
//   + d_abs sum_i (Sz_i)^2 - h_abs sum_i (-1)^i Sz_i,  energies in rad/s when
// params carry units (or plain numbers for the dimensionless model).
HamiltonianOperator build_hamiltonian(const SpinModelParams& params,
                                      std::optional<int> sector = std::nullopt,
                                      int max_sites_full = default_max_sites_full);

// Separate pieces for time-dependent coefficient schedules:
// H(t) = exchange + d(t) * onsite - h(t) * staggered.
struct HamiltonianParts {
    HamiltonianOperator exchange;   // sum Jxy [(XY) + lambda ZZ]
    HamiltonianOperator onsite;     // sum (Sz_i)^2
    HamiltonianOperator staggered;  // sum (-1)^i Sz_i
};
HamiltonianParts build_hamiltonian_parts(const SpinModelParams& params,
                                         std::optional<int> sector = std::nullopt,
                                         int max_sites_full = default_max_sites_full);

// Diagonal staggered-field term sum_i (-1)^i Sz_i on its own.
HamiltonianOperator staggered_field_term(int n_sites, std::optional<int> sector = std::nullopt);

// Dressed basis of the symmetric drive: eigenstates of Fx with eigenvalues
// {+1, 0, -1} mapped to rows {u, D, d}:
//   u = (|1>+|-1>)/2 + |0>/sqrt2, D = (-|1>+|-1>)/sqrt2, d = (|1>+|-1>)/2 - |0>/sqrt2.
// to_simulation additionally applies the mixing-angle rotation exp(i theta Sx)
// that diagonalizes the control field; theta = 0 is the plain dressed basis.
struct DressedBasis {
    // Amplitude map bare -> dressed (rows u, D, d).
    static Eigen::Matrix3d w();
    // Site-local bare -> simulation-frame map: exp(i theta Sx) * W.
    static Eigen::Matrix3cd site_map(double theta);
};

// Apply a 3x3 site-local matrix U on every site of an n-site state.
Eigen::VectorXcd apply_site_local(const Eigen::Matrix3cd& u, const Eigen::VectorXcd& psi,
                                  int n_sites);

// Apply a 3x3 matrix U on a single site of an n-site state.
Eigen::VectorXcd apply_site_local(const Eigen::Matrix3cd& u, const Eigen::VectorXcd& psi,
                                  int site, int n_sites);

// State transforms between bare and simulation (theta-rotated dressed) frames.
Eigen::VectorXcd dressed_transform(const Eigen::VectorXcd& psi_bare, int n_sites,
                                   double theta, bool inverse = false);

// Conjugate a k-site operator into the simulation frame: U op U^dag.
Eigen::MatrixXcd dressed_conjugate(const Eigen::MatrixXcd& op, int k_sites, double theta);

// Product state |m_0 m_1 ...> as a full-space vector.
Eigen::VectorXcd product_state(const std::vector<int>& ms);

// Embed a sector vector into the full space / project back.
Eigen::VectorXcd embed_full(const Eigen::VectorXd& v, const SectorBasis& basis);
Eigen::VectorXcd embed_full(const Eigen::VectorXcd& v, const SectorBasis& basis);
Eigen::VectorXcd project_sector(const Eigen::VectorXcd& full, const SectorBasis& basis);

} // namespace ionsim
