#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "ionsim/lattice_modes.hpp"

using namespace ionsim;

namespace {

// Independent oracle for the dimensionless chain potential
//   V(u) = sum u_i^2 / 2 + sum_{i<j} 1 / |u_i - u_j|
// and its gradient. Used by a plain first-order descent so the oracle shares
// no solver machinery with the library's damped Newton.
double chain_potential(const Eigen::VectorXd& u) {
    double v = 0.5 * u.squaredNorm();
    for (int i = 0; i < u.size(); ++i)
        for (int j = i + 1; j < u.size(); ++j) v += 1.0 / std::abs(u[i] - u[j]);
    return v;
}

Eigen::VectorXd chain_gradient(const Eigen::VectorXd& u) {
    Eigen::VectorXd g = u;
    for (int i = 0; i < u.size(); ++i)
        for (int j = 0; j < u.size(); ++j) {
            if (i == j) continue;
            const double d = u[i] - u[j];
            g[i] -= 1.0 / (d * d) * (d > 0 ? 1.0 : -1.0);
        }
    return g;
}

// Gradient descent with backtracking line search; independent of the library.
Eigen::VectorXd descend_equilibrium(int n) {
    Eigen::VectorXd u(n);
    for (int i = 0; i < n; ++i) u[i] = (i - 0.5 * (n - 1)) * 1.5;
    for (int it = 0; it < 200000; ++it) {
        const Eigen::VectorXd g = chain_gradient(u);
        if (g.lpNorm<Eigen::Infinity>() < 1e-12) break;
        double step = 0.5;
        const double v0 = chain_potential(u);
        while (step > 1e-18 && chain_potential(u - step * g) >= v0) step *= 0.5;
        u -= step * g;
    }
    return u;
}

// Dimensionless Hessian blocks about an equilibrium, assembled independently.
// Axial: A_ij = delta_ij (1 + 2 S_i) - (1-delta_ij) 2/|u_i-u_j|^3,
// radial (axis a): B_ij = delta_ij ((w_a/w_x)^2 - S_i) + (1-delta_ij)/|u_i-u_j|^3,
// with S_i = sum_{k != i} 1/|u_i-u_k|^3. Frequencies are w_x sqrt(eigenvalue).
Eigen::MatrixXd axial_hessian(const Eigen::VectorXd& u) {
    const int n = static_cast<int>(u.size());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            const double inv3 = 1.0 / std::pow(std::abs(u[i] - u[j]), 3);
            a(i, i) += 2.0 * inv3;
            a(i, j) = -2.0 * inv3;
        }
    a.diagonal().array() += 1.0;
    return a;
}

Eigen::MatrixXd radial_hessian(const Eigen::VectorXd& u, double freq_ratio_sq) {
    const int n = static_cast<int>(u.size());
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            const double inv3 = 1.0 / std::pow(std::abs(u[i] - u[j]), 3);
            b(i, i) -= inv3;
            b(i, j) = inv3;
        }
    b.diagonal().array() += freq_ratio_sq;
    return b;
}

} // namespace

TEST_CASE("two- and three-ion equilibria match closed forms") {
    const IonSpecies yb{};
    // Two ions: u = +-(1/4)^(1/3); three ions: +-(5/4)^(1/3) and 0.
    {
        const auto lat = equilibrium_positions(TrapConfig::from_mhz(2, 1.0, 10.0, 10.0), yb);
        const double u = std::cbrt(0.25);
        REQUIRE(lat.positions.size() == 2);
        CHECK(lat.positions[0] == doctest::Approx(-u).epsilon(1e-10));
        CHECK(lat.positions[1] == doctest::Approx(u).epsilon(1e-10));
    }
    {
        const auto lat = equilibrium_positions(TrapConfig::from_mhz(3, 1.0, 10.0, 10.0), yb);
        const double u = std::cbrt(1.25);
        REQUIRE(lat.positions.size() == 3);
        CHECK(lat.positions[0] == doctest::Approx(-u).epsilon(1e-10));
        CHECK(std::abs(lat.positions[1]) < 1e-10);
        CHECK(lat.positions[2] == doctest::Approx(u).epsilon(1e-10));
    }
}

TEST_CASE("equilibria agree with an independent first-order minimizer") {
    const IonSpecies yb{};
    for (int n : {4, 5, 7}) {
        CAPTURE(n);
        const auto lat = equilibrium_positions(TrapConfig::from_mhz(n, 1.0, 10.0, 10.0), yb);
        const Eigen::VectorXd oracle = descend_equilibrium(n);
        REQUIRE(lat.positions.size() == n);
        for (int i = 0; i < n; ++i)
            CHECK(lat.positions[i] == doctest::Approx(oracle[i]).epsilon(1e-7));
        // Zero net force, ascending order, centered.
        CHECK(chain_gradient(lat.positions).lpNorm<Eigen::Infinity>() < 1e-9);
        for (int i = 1; i < n; ++i) CHECK(lat.positions[i] > lat.positions[i - 1]);
        CHECK(std::abs(lat.positions.sum()) < 1e-9);
    }
}

TEST_CASE("length scale is the Coulomb length for the axial frequency") {
    const IonSpecies yb{};
    const auto lat = equilibrium_positions(TrapConfig::from_mhz(2, 1.0, 10.0, 10.0), yb);
    const double w = consts::mhz_to_rad(1.0);
    const double l = std::cbrt(consts::k_coul / (yb.mass_kg() * w * w));
    CHECK(lat.length_scale == doctest::Approx(l).epsilon(1e-12));
    // ~171Yb+ at 2 pi * 1 MHz: about 5.6 um between two ions.
    CHECK(lat.positions_m()[1] - lat.positions_m()[0] ==
          doctest::Approx(2.0 * std::cbrt(0.25) * l).epsilon(1e-12));
}

TEST_CASE("two-ion normal modes match the analytic spectrum") {
    const IonSpecies yb{};
    const auto trap = TrapConfig::from_mhz(2, 1.0, 10.0, 10.0);
    const auto ms = normal_modes(equilibrium_positions(trap, yb));
    const double wx = trap.omega_x, wy = trap.omega_y;
    // Axial: COM at w_x, stretch at sqrt3 w_x. Radial: rocking at
    // sqrt(w_y^2 - w_x^2) below the COM at w_y. Frequencies ascend.
    REQUIRE(ms.axis(Axis::x).freq.size() == 2);
    CHECK(ms.axis(Axis::x).freq[0] == doctest::Approx(wx).epsilon(1e-12));
    CHECK(ms.axis(Axis::x).freq[1] == doctest::Approx(std::sqrt(3.0) * wx).epsilon(1e-12));
    CHECK(ms.axis(Axis::y).freq[0] ==
          doctest::Approx(std::sqrt(wy * wy - wx * wx)).epsilon(1e-12));
    CHECK(ms.axis(Axis::y).freq[1] == doctest::Approx(wy).epsilon(1e-12));
    CHECK(ms.axis(Axis::z).freq[1] == doctest::Approx(trap.omega_z).epsilon(1e-12));
}

TEST_CASE("mode spectra match an independently assembled Hessian") {
    const IonSpecies yb{};
    const auto trap = TrapConfig::from_mhz(6, 0.8, 9.0, 11.0);
    const auto lat = equilibrium_positions(trap, yb);
    const auto ms = normal_modes(lat);
    const double wx = trap.omega_x;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ax(axial_hessian(lat.positions));
    for (int m = 0; m < 6; ++m)
        CHECK(ms.axis(Axis::x).freq[m] ==
              doctest::Approx(wx * std::sqrt(ax.eigenvalues()[m])).epsilon(1e-10));

    for (Axis a : {Axis::y, Axis::z}) {
        const double r2 = std::pow(trap.omega(a) / wx, 2);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> rad(radial_hessian(lat.positions, r2));
        for (int m = 0; m < 6; ++m)
            CHECK(ms.axis(a).freq[m] ==
                  doctest::Approx(wx * std::sqrt(rad.eigenvalues()[m])).epsilon(1e-10));
    }
}

TEST_CASE("center-of-mass modes are exact for a ten-ion chain") {
    const IonSpecies yb{};
    const auto trap = TrapConfig::from_mhz(10, 1.0, 10.0, 10.0);
    const auto ms = normal_modes(equilibrium_positions(trap, yb));

    // Axial COM is the lowest axial mode at exactly w_x; the radial COM is the
    // highest radial mode at exactly w_y. Both eigenvectors are uniform.
    CHECK(std::abs(ms.axis(Axis::x).freq[0] / trap.omega_x - 1.0) < 1e-10);
    CHECK(std::abs(ms.axis(Axis::y).freq[9] / trap.omega_y - 1.0) < 1e-10);
    const Eigen::VectorXd com = Eigen::VectorXd::Constant(10, 1.0 / std::sqrt(10.0));
    CHECK(std::abs(std::abs(ms.axis(Axis::x).modes.col(0).dot(com)) - 1.0) < 1e-9);
    CHECK(std::abs(std::abs(ms.axis(Axis::y).modes.col(9).dot(com)) - 1.0) < 1e-9);

    for (Axis a : {Axis::x, Axis::y, Axis::z}) {
        const Eigen::MatrixXd& m = ms.axis(a).modes;
        const Eigen::MatrixXd defect = m.transpose() * m - Eigen::MatrixXd::Identity(10, 10);
        CHECK(defect.cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("weak radial confinement triggers the zigzag guard") {
    const IonSpecies yb{};
    // 10 ions need w_y/w_x well above 1; 1.2 is deep in the unstable region.
    const auto lat = equilibrium_positions(TrapConfig::from_mhz(10, 1.0, 1.2, 10.0), yb);
    CHECK_THROWS_AS(normal_modes(lat), UnstableConfiguration);
    // The same ratio is fine for 2 ions (rocking mode at sqrt(1.44 - 1) w_x).
    const auto lat2 = equilibrium_positions(TrapConfig::from_mhz(2, 1.0, 1.2, 10.0), yb);
    CHECK_NOTHROW(normal_modes(lat2));
}

TEST_CASE("trap validation rejects unusable parameters") {
    TrapConfig t = TrapConfig::from_mhz(3, 1.0, 10.0, 10.0);
    t.omega_x = 0.0;
    CHECK_THROWS_AS(t.validate(), ValidationError);
    TrapConfig t2 = TrapConfig::from_mhz(0, 1.0, 10.0, 10.0);
    CHECK_THROWS_AS(t2.validate(), ValidationError);
}

TEST_CASE("gradient factors follow the magnetic-gradient coupling formula") {
    const IonSpecies yb{};
    const auto trap = TrapConfig::from_mhz(3, 1.0, 9.0, 9.0);
    const auto ms = normal_modes(equilibrium_positions(trap, yb));
    const double grad = 150.0; // T/m
    const EtaMatrix etas = lamb_dicke_matrix(ms, grad, yb);
    CHECK(etas.gradient == grad);

    // eta_{i,n} = g mu_B B' M_{i,n} sqrt(hbar/(2 m nu_n)) / (hbar nu_n),
    // recomputed here from the same mode data with independent arithmetic.
    const double m_kg = yb.mass_kg();
    for (Axis a : {Axis::x, Axis::y, Axis::z}) {
        const auto& am = ms.axis(a);
        for (int i = 0; i < 3; ++i)
            for (int n = 0; n < 3; ++n) {
                const double nu = am.freq[n];
                const double expect = yb.g_factor * consts::mu_b * grad * am.modes(i, n) *
                                      std::sqrt(consts::hbar / (2.0 * m_kg * nu)) /
                                      (consts::hbar * nu);
                CHECK(etas.axis(a)(i, n) == doctest::Approx(expect).epsilon(1e-12));
            }
    }

    // Linear in the gradient.
    const EtaMatrix twice = lamb_dicke_matrix(ms, 2.0 * grad, yb);
    CHECK((twice.axis(Axis::y) - 2.0 * etas.axis(Axis::y)).cwiseAbs().maxCoeff() < 1e-15);

    // Targeting: the returned gradient hits max |eta| exactly.
    const double g_t = gradient_for_target_eta(ms, yb, 0.03);
    CHECK(lamb_dicke_matrix(ms, g_t, yb).max_abs() == doctest::Approx(0.03).epsilon(1e-12));
    CHECK_THROWS_AS(gradient_for_target_eta(ms, yb, -1.0), ValidationError);
}
