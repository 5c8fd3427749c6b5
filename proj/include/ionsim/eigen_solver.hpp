#pragma once

// Lanczos ground-state machinery with a dense oracle. The iterative path and
// the dense path never share solver code; tests compare them.

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "ionsim/spin_model.hpp"

namespace ionsim {

struct EigenOptions {
    int k = 1;                 // number of lowest eigenpairs
    int max_iter = 500;        // Lanczos basis size budget (per call)
    double tol = 1e-10;        // residual tolerance ||Hx - theta x||
    std::uint64_t seed = 0x5eed1ba5eU; // start-vector seed
    bool require_converged = true;     // throw ConvergenceFailure if not met
};

struct EigenResult {
    Eigen::VectorXd values;     // ascending
    Eigen::MatrixXd vectors;    // columns aligned with values
    Eigen::VectorXd residuals;  // ||Hx - theta x|| per pair
    int iterations = 0;
    bool converged = false;
};

// Full-reorthogonalized Lanczos with deterministic seeded start vectors and
// breakdown restarts (restarts explore invariant-subspace complements, which
// is what recovers degenerate multiplets). Never falls back to a dense solve.
EigenResult lowest_eigenpairs(const HamiltonianOperator& h, const EigenOptions& opts = {});

// Dense route (Eigen::SelfAdjointEigenSolver); oracle for the iterative path.
EigenResult dense_eigenpairs(const HamiltonianOperator& h, int k,
                             long max_dense_dim = 4096);

struct SectorLevel {
    int sector = 0;
    double value = 0.0;
};

struct GapResult {
    double e0 = 0.0;
    double e1 = 0.0;
    double gap = 0.0;          // e1 - e0, degenerate copies of e0 skipped
    int e0_sector = 0;
    // Clustered view: states within cluster_tol of e0 form the low multiplet
    // (edge-state quasi-degeneracy); bulk_gap is the first level above it.
    double bulk_gap = 0.0;
    int multiplet_size = 1;
    double cluster_tol = 0.0;
    std::vector<SectorLevel> levels; // merged, ascending
};

// Scan Sz sectors (default {0, +-1, +-2}), k_per_sector lowest in each.
GapResult energy_gap(const SpinModelParams& params,
                     const std::vector<int>& sectors = {0, 1, -1, 2, -2},
                     int k_per_sector = 4, const EigenOptions& opts = {},
                     double cluster_tol_abs = 0.0);

} // namespace ionsim
