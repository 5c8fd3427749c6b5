#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "ionsim/time_evolution.hpp"

using namespace ionsim;

namespace {

Eigen::VectorXcd random_state(long dim, unsigned seed) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> dist;
    Eigen::VectorXcd v(dim);
    for (long i = 0; i < dim; ++i) v[i] = cplx(dist(rng), dist(rng));
    return v / v.norm();
}

// Dense propagator oracle: exp(-i H t) by spectral decomposition.
Eigen::VectorXcd dense_propagate(const HamiltonianOperator& h, const Eigen::VectorXcd& psi,
                                 double t) {
    const Eigen::MatrixXd hd = Eigen::MatrixXd(h.mat);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hd);
    const Eigen::VectorXcd coeffs = es.eigenvectors().transpose().cast<cplx>() * psi;
    Eigen::VectorXcd rotated(psi.size());
    for (long i = 0; i < psi.size(); ++i)
        rotated[i] = std::exp(cplx(0.0, -es.eigenvalues()[i] * t)) * coeffs[i];
    return es.eigenvectors().cast<cplx>() * rotated;
}

double energy(const HamiltonianOperator& h, const Eigen::VectorXcd& psi) {
    return psi.dot(h.apply(psi)).real();
}

} // namespace

TEST_CASE("Krylov propagation matches the dense exponential") {
    const SpinModelParams p = SpinModelParams::uniform_nn(4, 0.8, 0.4, 0.1);
    const HamiltonianOperator h = build_hamiltonian(p, 0); // dim 19
    const Eigen::VectorXcd psi0 = random_state(h.dim(), 42);

    for (double t : {0.05, 1.3, 12.7}) {
        CAPTURE(t);
        PropagateStats stats;
        const Eigen::VectorXcd k = krylov_propagate(h, psi0, t, {}, &stats);
        const Eigen::VectorXcd d = dense_propagate(h, psi0, t);
        CHECK((k - d).norm() < 1e-8);
        CHECK(std::abs(k.norm() - 1.0) < 1e-12);
        CHECK(stats.substeps >= 1);
    }

    // Energy is conserved under static evolution.
    const Eigen::VectorXcd late = krylov_propagate(h, psi0, 50.0);
    CHECK(energy(h, late) == doctest::Approx(energy(h, psi0)).epsilon(1e-9));

    // Backward evolution inverts forward evolution.
    const Eigen::VectorXcd fwd = krylov_propagate(h, psi0, 7.3);
    const Eigen::VectorXcd back = krylov_propagate(h, fwd, -7.3);
    CHECK((back - psi0).norm() < 1e-8);
}

TEST_CASE("matrix-free propagation matches the operator route") {
    const SpinModelParams p = SpinModelParams::uniform_nn(4, 1.0, -0.3);
    const HamiltonianOperator h = build_hamiltonian(p, 1);
    const Eigen::VectorXcd psi0 = random_state(h.dim(), 7);
    const ApplyFn apply = [&](const Eigen::VectorXcd& x, Eigen::VectorXcd& y) {
        y = h.apply(x);
    };
    const Eigen::VectorXcd via_op = krylov_propagate_op(apply, h.dim(), psi0, 2.1);
    const Eigen::VectorXcd direct = krylov_propagate(h, psi0, 2.1);
    CHECK((via_op - direct).norm() < 1e-10);
}

TEST_CASE("schedule evolution reduces to the static propagator") {
    const SpinModelParams p = SpinModelParams::uniform_nn(4, 0.9, 0.0);
    const HamiltonianParts parts = build_hamiltonian_parts(p, 0);
    const Eigen::VectorXcd psi0 = random_state(parts.exchange.dim(), 9);

    // Constant coefficients: CF4 is exact up to the Krylov tolerance, so the
    // result must match a single static exponential of the assembled H.
    const double d_c = 0.6, h_c = 0.25;
    const ScheduleFn sched = [&](double) { return ScheduleEval{d_c, h_c}; };
    const EvolveResult r = evolve_schedule(parts, sched, 0.0, 3.0, 24, psi0);

    SpinModelParams q = p;
    q.d = d_c;
    q.h_staggered = h_c;
    const HamiltonianOperator h_static = build_hamiltonian(q, 0);
    const Eigen::VectorXcd expect = dense_propagate(h_static, psi0, 3.0);
    CHECK((r.psi - expect).norm() < 1e-8);
    CHECK(r.norm_drift < 1e-10);
    CHECK(r.steps == 24);
}

TEST_CASE("commutator-free integrator shows fourth-order convergence") {
    const SpinModelParams p = SpinModelParams::uniform_nn(4, 1.0, 0.0);
    const HamiltonianParts parts = build_hamiltonian_parts(p, 0);
    const Eigen::VectorXcd psi0 = random_state(parts.exchange.dim(), 13);

    // Strongly time-dependent coefficients so the commutator error dominates.
    const ScheduleFn sched = [](double t) {
        return ScheduleEval{0.8 + 0.7 * std::sin(3.0 * t), 0.5 * std::cos(2.0 * t)};
    };
    const double t1 = 2.0;
    const Eigen::VectorXcd ref = evolve_schedule(parts, sched, 0.0, t1, 512, psi0).psi;
    const double e8 = (evolve_schedule(parts, sched, 0.0, t1, 8, psi0).psi - ref).norm();
    const double e16 = (evolve_schedule(parts, sched, 0.0, t1, 16, psi0).psi - ref).norm();
    const double e32 = (evolve_schedule(parts, sched, 0.0, t1, 32, psi0).psi - ref).norm();
    CAPTURE(e8);
    CAPTURE(e16);
    CAPTURE(e32);
    // Successive halvings of dt shrink the error by ~2^4; accept a generous
    // window around 16 to absorb the higher-order terms.
    CHECK(e8 / e16 > 10.0);
    CHECK(e8 / e16 < 24.0);
    CHECK(e16 / e32 > 10.0);
    CHECK(e16 / e32 < 24.0);
    CHECK(e32 < 1e-5);
}

TEST_CASE("schedule sampler sees every step boundary") {
    const SpinModelParams p = SpinModelParams::uniform_nn(3, 1.0, 0.2);
    const HamiltonianParts parts = build_hamiltonian_parts(p, 0);
    const Eigen::VectorXcd psi0 = random_state(parts.exchange.dim(), 3);
    const ScheduleFn sched = [](double t) { return ScheduleEval{t, 0.0}; };

    std::vector<double> times;
    std::vector<double> norms;
    const int n_steps = 10;
    evolve_schedule(parts, sched, 0.5, 1.5, n_steps, psi0, {},
                    [&](int step, double t, const Eigen::VectorXcd& psi) {
                        CHECK(step == static_cast<int>(times.size()));
                        times.push_back(t);
                        norms.push_back(psi.norm());
                    });
    REQUIRE(times.size() == n_steps + 1);
    CHECK(times.front() == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(times.back() == doctest::Approx(1.5).epsilon(1e-15));
    for (std::size_t i = 1; i < times.size(); ++i)
        CHECK(times[i] - times[i - 1] == doctest::Approx(0.1).epsilon(1e-12));
    for (double n : norms) CHECK(std::abs(n - 1.0) < 1e-10);

    CHECK_THROWS_AS(evolve_schedule(parts, sched, 0.0, 1.0, 0, psi0), ValidationError);
}

TEST_CASE("deterministic repetition of the propagators") {
    const SpinModelParams p = SpinModelParams::uniform_nn(4, 1.1, 0.3);
    const HamiltonianOperator h = build_hamiltonian(p, 0);
    const Eigen::VectorXcd psi0 = random_state(h.dim(), 55);
    const Eigen::VectorXcd a = krylov_propagate(h, psi0, 4.2);
    const Eigen::VectorXcd b = krylov_propagate(h, psi0, 4.2);
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
}
