#pragma once

// State propagation: adaptive Lanczos-Krylov exp(-iHt) for static Hamiltonians
// and a fixed-step 4th-order commutator-free integrator for time-dependent
// ones expressed as  H(t) = H_exchange + d(t) * H_onsite - h(t) * H_staggered.

#include <Eigen/Dense>
#include <functional>

#include "ionsim/spin_model.hpp"

namespace ionsim {

struct KrylovOptions {
    int m = 30;               // Krylov dimension per substep
    double tol = 1e-10;       // total phase-accurate error target per call
    int max_substeps = 200000; // guard against runaway step halving
};

struct PropagateStats {
    int substeps = 0;
    int rejections = 0;
    double min_dt = 0.0;
};

// psi(t) = exp(-i H t) psi0. Time in seconds when H is in rad/s.
Eigen::VectorXcd krylov_propagate(const HamiltonianOperator& h,
                                  const Eigen::VectorXcd& psi0, double t,
                                  const KrylovOptions& opts = {},
                                  PropagateStats* stats = nullptr);

// Same propagator over a matrix-free Hermitian apply.
using ApplyFn = std::function<void(const Eigen::VectorXcd&, Eigen::VectorXcd&)>;
Eigen::VectorXcd krylov_propagate_op(const ApplyFn& apply, long dim,
                                     const Eigen::VectorXcd& psi0, double t,
                                     const KrylovOptions& opts = {},
                                     PropagateStats* stats = nullptr);

struct ScheduleEval {
    double d = 0.0; // on-site coefficient at time t
    double h = 0.0; // staggered-field coefficient at time t
};
using ScheduleFn = std::function<ScheduleEval(double)>;

// One commutator-free 4th-order step over [t, t+dt]: two exponentials built
// from the Gauss-Legendre nodes of H(t). Exponentials use krylov_propagate_op.
Eigen::VectorXcd cf4_step(const HamiltonianParts& parts, const ScheduleFn& schedule,
                          double t, double dt, const Eigen::VectorXcd& psi,
                          const KrylovOptions& opts = {});

struct EvolveResult {
    Eigen::VectorXcd psi;
    double norm_drift = 0.0; // max |  ||psi|| - 1  | over the run
    int steps = 0;
};

// Fixed-step drive over [t0, t1]; sampler (optional) sees the state at every
// step boundary including both endpoints. Deterministic for fixed inputs.
EvolveResult evolve_schedule(const HamiltonianParts& parts, const ScheduleFn& schedule,
                             double t0, double t1, int n_steps,
                             const Eigen::VectorXcd& psi0,
                             const KrylovOptions& opts = {},
                             const std::function<void(int step, double t,
                                                      const Eigen::VectorXcd&)>& sampler = {});

} // namespace ionsim
