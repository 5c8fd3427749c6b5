#include "ionsim/adiabatic.hpp"

#include <algorithm>
#include <cmath>

#include "ionsim/errors.hpp"

namespace ionsim {

namespace {

double smoothstep(double s) { return s * s * (3.0 - 2.0 * s); }

} // namespace

ScheduleEval SweepSchedule::at_fraction(double x) const {
    x = std::clamp(x, 0.0, 1.0);
    double acc = 0.0;
    for (std::size_t i = 0; i < segments.size(); ++i) {
        const SweepSegment& seg = segments[i];
        const bool last = i + 1 == segments.size();
        if (x <= acc + seg.fraction || last) {
            const double s = std::clamp((x - acc) / seg.fraction, 0.0, 1.0);
            const double w = smoothstep(s);
            return {seg.d0 + (seg.d1 - seg.d0) * w, seg.h0 + (seg.h1 - seg.h0) * w};
        }
        acc += seg.fraction;
    }
    return {};
}

void SweepSchedule::validate() const {
    if (segments.empty()) throw ValidationError("sweep schedule has no segments");
    double sum = 0.0;
    for (const SweepSegment& seg : segments) {
        if (seg.fraction <= 0.0)
            throw ValidationError("sweep segment fractions must be positive");
        sum += seg.fraction;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw ValidationError("sweep segment fractions must sum to 1");
    if (total_time < 0.0) throw ValidationError("sweep total_time must be >= 0");
}

SweepResult adiabatic_sweep(const SpinModelParams& base, const SweepSchedule& schedule,
                            const SweepOptions& opts) {
    schedule.validate();
    if (opts.n_samples < 1 || opts.n_steps < 1)
        throw ValidationError("sweep needs n_steps >= 1 and n_samples >= 1");

    auto params_at = [&](double x) {
        SpinModelParams p = base;
        const ScheduleEval e = schedule.at_fraction(x);
        p.d = e.d;
        p.h_staggered = e.h;
        return p;
    };

    // The start ground state fixes the magnetization sector for the whole run.
    SweepResult out;
    {
        EigenOptions eo = opts.eigen;
        eo.k = 1;
        GapResult g0 = energy_gap(params_at(0.0), {0, 1, -1, 2, -2}, 1, eo);
        out.sector = g0.e0_sector;
        out.e0_start = g0.e0;
    }

    const SpinModelParams p0 = params_at(0.0);
    const SpinModelParams p1 = params_at(1.0);
    HamiltonianOperator h0 = build_hamiltonian(p0, out.sector);
    HamiltonianOperator h1 = build_hamiltonian(p1, out.sector);

    EigenOptions eo = opts.eigen;
    eo.k = 1;
    const EigenResult gs0 = lowest_eigenpairs(h0, eo);
    const EigenResult gs1 = lowest_eigenpairs(h1, eo);
    out.e0_end = gs1.values[0];

    Eigen::VectorXcd psi = gs0.vectors.col(0).cast<std::complex<double>>();

    const double t_total = schedule.total_time;
    HamiltonianParts parts = build_hamiltonian_parts(base, out.sector);
    const double scale = base.j_eff != 0.0 ? std::abs(base.j_eff) : 1.0;
    ScheduleFn fn = [&schedule, t_total, scale](double t) {
        const ScheduleEval e = schedule.at_fraction(t_total > 0.0 ? t / t_total : 1.0);
        return ScheduleEval{e.d * scale, e.h * scale};
    };

    const int per = std::max(1, (opts.n_steps + opts.n_samples - 1) / opts.n_samples);

    auto record = [&](double t, const Eigen::VectorXcd& state) {
        out.t.push_back(t);
        const double x = t_total > 0.0 ? t / t_total : 1.0;
        const ScheduleEval e = schedule.at_fraction(x);
        out.d_path.push_back(e.d);
        out.h_path.push_back(e.h);
        if (opts.instantaneous) {
            EigenOptions ei = opts.eigen;
            ei.k = 2;
            HamiltonianOperator ht = build_hamiltonian(params_at(x), out.sector);
            const EigenResult r = lowest_eigenpairs(ht, ei);
            const std::complex<double> ov =
                r.vectors.col(0).cast<std::complex<double>>().dot(state);
            out.fidelity_t.push_back(std::norm(ov) / state.squaredNorm());
            out.gap_t.push_back(r.values.size() > 1 ? r.values[1] - r.values[0] : 0.0);
        }
    };

    record(0.0, psi);
    if (t_total > 0.0) {
        const double span = t_total / opts.n_samples;
        for (int s = 0; s < opts.n_samples; ++s) {
            EvolveResult er = evolve_schedule(parts, fn, s * span, (s + 1) * span,
                                              per, psi, opts.krylov);
            psi = er.psi;
            out.norm_drift = std::max(out.norm_drift, er.norm_drift);
            record((s + 1) * span, psi);
        }
    }

    out.psi_end = psi;
    const std::complex<double> ov =
        gs1.vectors.col(0).cast<std::complex<double>>().dot(psi);
    out.fidelity_end = std::norm(ov) / psi.squaredNorm();
    return out;
}

} // namespace ionsim
