#pragma once

// Adiabatic state preparation: ramp the staggered field and on-site
// anisotropy along a piecewise-smoothstep path while the exchange part stays
// fixed. The total S_z of the start state is conserved exactly, so the whole
// evolution runs inside one magnetization sector.

#include <Eigen/Dense>
#include <vector>

#include "ionsim/eigen_solver.hpp"
#include "ionsim/time_evolution.hpp"

namespace ionsim {

struct SweepSegment {
    double fraction = 1.0; // share of the total time (> 0)
    double d0 = 0.0, d1 = 0.0; // on-site coefficient, units of the j_eff bond
    double h0 = 0.0, h1 = 0.0; // staggered coefficient, same units
};

struct SweepSchedule {
    std::vector<SweepSegment> segments;
    double total_time = 0.0; // seconds; 0 means a sudden quench

    // Dimensionless (d, h) at fraction x in [0, 1]; smoothstep inside each
    // segment, so the path is C^1 whenever endpoint values agree.
    ScheduleEval at_fraction(double x) const;
    void validate() const;
};

struct SweepOptions {
    int n_steps = 400;   // integrator steps over the full ramp
    int n_samples = 100; // trace rows (plus the initial point)
    bool instantaneous = false; // also track fidelity/gap vs the moving GS
    KrylovOptions krylov;
    EigenOptions eigen;
};

struct SweepResult {
    double fidelity_end = 0.0;  // |<final GS | psi(T)>|^2
    double norm_drift = 0.0;
    double e0_start = 0.0, e0_end = 0.0;
    int sector = 0;             // total S_z of the run
    std::vector<double> t;      // sample times
    std::vector<double> d_path, h_path;
    std::vector<double> fidelity_t, gap_t; // filled when instantaneous
    Eigen::VectorXcd psi_end;   // sector-basis amplitudes
};

// base supplies the exchange network (j_xy, lambda, j_eff) and the site count;
// its d / h_staggered fields are ignored in favor of the schedule.
SweepResult adiabatic_sweep(const SpinModelParams& base, const SweepSchedule& schedule,
                            const SweepOptions& opts = {});

} // namespace ionsim
