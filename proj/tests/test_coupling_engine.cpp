#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "ionsim/coupling_engine.hpp"
#include "ionsim/two_ion.hpp"

using namespace ionsim;

namespace {

DriveParams fixture_drive() {
    // Standard two-ion operating point: dressing splitting Omega/sqrt2 at
    // 2 pi * 24 MHz, control field 2.4 MHz at theta = 1.47, direct on-site
    // coefficient -18.5 kHz.
    DriveParams d;
    d.omega = consts::mhz_to_rad(24.0) * std::sqrt(2.0);
    d.omega_prime = consts::mhz_to_rad(2.4);
    d.theta = 1.47;
    d.d_prime_override = consts::hz_to_rad(-18.5e3);
    return d;
}

struct Chain {
    IonSpecies species;
    ModeSet modes;
    EtaMatrix etas;
};

Chain radial_chain(int n, double target_eta = 0.03) {
    Chain c;
    const auto trap = TrapConfig::from_mhz(n, 1.0, 10.0, 10.0);
    c.modes = normal_modes(equilibrium_positions(trap, c.species));
    // Scale the gradient so the largest radial-y factor hits the target;
    // the couplings below participate through the y branch only.
    double worst = 0.0;
    const EtaMatrix unit = lamb_dicke_matrix(c.modes, 1.0, c.species);
    worst = unit.axis(Axis::y).cwiseAbs().maxCoeff();
    c.etas = lamb_dicke_matrix(c.modes, target_eta / worst, c.species);
    return c;
}

} // namespace

TEST_CASE("single-mode coupling reproduces the closed-form value") {
    // One shared mode at nu with uniform eta:
    //   J = (Omega/2)^2 eta^2 2 nu / (omega0^2 - nu^2)
    //     = eta^2 nu / (1 - (nu/omega0)^2),
    // and for omega0/nu = 6 the correction factor is 36/35, so
    // eta^2 nu (36/35) = 0.0009 * 4 MHz * 36/35 = 3702.857142857 Hz.
    DriveParams d = fixture_drive();
    const CouplingMatrix cm = single_mode_coupling(0.03, consts::mhz_to_rad(4.0), d);
    REQUIRE(cm.n() == 2);
    CHECK(consts::rad_to_hz(cm.j(0, 1)) ==
          doctest::Approx(3600.0 * 36.0 / 35.0).epsilon(1e-12));
    CHECK(consts::rad_to_hz(cm.j(0, 1)) == doctest::Approx(3702.857142857).epsilon(1e-9));
    // Uniform eta puts the same value on the diagonal, and the matrix is
    // symmetric.
    CHECK(cm.j(0, 0) == doctest::Approx(cm.j(0, 1)).epsilon(1e-12));
    CHECK(cm.j(1, 0) == doctest::Approx(cm.j(0, 1)).epsilon(1e-12));

    // Above-resonance drive flips the sign of the denominator.
    DriveParams low = d;
    low.omega = consts::mhz_to_rad(2.0) * std::sqrt(2.0); // omega0 = 2 MHz < nu
    const CouplingMatrix cm_low = single_mode_coupling(0.03, consts::mhz_to_rad(4.0), low);
    CHECK(cm_low.j(0, 1) < 0.0);
}

TEST_CASE("chain couplings match an independent mode sum") {
    const Chain c = radial_chain(3);
    DriveParams d = fixture_drive();
    CouplingOptions opts;
    opts.axes = {Axis::y};
    const CouplingMatrix cm = effective_coupling_matrix(c.etas, c.modes, d, opts);
    REQUIRE(cm.n() == 3);

    // J_ij = (Omega/2)^2 sum_n eta_in eta_jn 2 nu_n / (omega0^2 - nu_n^2),
    // recomputed here directly from the eta and mode tables.
    const double w0 = d.omega0();
    const auto& eta = c.etas.axis(Axis::y);
    const auto& freq = c.modes.axis(Axis::y).freq;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double expect = 0.0;
            for (int n = 0; n < 3; ++n)
                expect += eta(i, n) * eta(j, n) * 2.0 * freq[n] /
                          (w0 * w0 - freq[n] * freq[n]);
            expect *= std::pow(d.omega / 2.0, 2);
            CHECK(cm.j(i, j) == doctest::Approx(expect).epsilon(1e-12));
        }
    CHECK((cm.j - cm.j.transpose()).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("near-resonant dressing is rejected for participating axes only") {
    const Chain c = radial_chain(2);
    CouplingOptions opts;
    opts.axes = {Axis::y};

    // Radial modes for this trap sit at ~9.95 and 10 MHz; an omega0 of
    // 10.2 MHz is within the 5% guard of both.
    DriveParams d = fixture_drive();
    d.omega = consts::mhz_to_rad(10.2) * std::sqrt(2.0);
    CHECK_THROWS_AS(effective_coupling_matrix(c.etas, c.modes, d, opts), ResonanceError);

    // The axial branch sits near 1 MHz; with the coupling restricted to y a
    // dressing near the axial modes is legitimate.
    DriveParams ax = fixture_drive();
    ax.omega = consts::mhz_to_rad(1.02) * std::sqrt(2.0);
    CHECK_NOTHROW(effective_coupling_matrix(c.etas, c.modes, ax, opts));
    CouplingOptions all;
    CHECK_THROWS_AS(effective_coupling_matrix(c.etas, c.modes, ax, all), ResonanceError);
}

TEST_CASE("mixing-angle reduction follows the stated closed forms") {
    DriveParams d = fixture_drive();
    const CouplingMatrix cm = single_mode_coupling(0.03, consts::mhz_to_rad(4.0), d);

    const double c2 = std::pow(std::cos(d.theta), 2);
    const double s2 = std::pow(std::sin(d.theta), 2);
    const double a_xy = (1.0 + c2) / 2.0;

    const SpinModelParams p = effective_model_params(cm, d);
    REQUIRE(p.n_sites == 2);
    // Jxy = J (1 + cos^2 th)/2; at theta = 1.47 the fixture bond lands at
    // 1870.1 Hz.
    CHECK(p.j_xy(0, 1) == doctest::Approx(cm.j(0, 1) * a_xy).epsilon(1e-12));
    CHECK(consts::rad_to_hz(p.j_xy(0, 1)) == doctest::Approx(1870.1).epsilon(1e-3));
    CHECK(p.j_eff == doctest::Approx(p.j_xy(0, 1)).epsilon(1e-12));

    // lambda = sin^2 th / (1 + cos^2 th), about 0.98 at theta = 1.47.
    CHECK(p.lambda == doctest::Approx(s2 / (1.0 + c2)).epsilon(1e-12));
    CHECK(p.lambda == doctest::Approx(0.97999).epsilon(1e-4));

    // On-site: (D' - mean J_ii / 2) (a_xy - sin^2 th), normalized by j_eff.
    const double onsite = (d.d_prime() - cm.j(0, 0) / 2.0) * (a_xy - s2);
    CHECK(p.d == doctest::Approx(onsite / p.j_eff).epsilon(1e-12));
    CHECK(p.d == doctest::Approx(5.2767).epsilon(1e-3));

    // Limits of the anisotropy map.
    DriveParams iso = d;
    iso.theta = consts::pi / 2.0;
    CHECK(effective_model_params(cm, iso).lambda == doctest::Approx(1.0).epsilon(1e-12));
    DriveParams ising = d;
    ising.theta = 1e-6;
    CHECK(effective_model_params(cm, ising).lambda < 1e-11);
}

TEST_CASE("nearest-neighbor truncation zeroes long bonds") {
    const Chain c = radial_chain(5);
    DriveParams d = fixture_drive();
    CouplingOptions opts;
    opts.axes = {Axis::y};
    const CouplingMatrix cm = effective_coupling_matrix(c.etas, c.modes, d, opts);
    const SpinModelParams full = effective_model_params(cm, d, false);
    const SpinModelParams nn = effective_model_params(cm, d, true);
    CHECK(std::abs(full.j_xy(0, 2)) > 0.0);
    CHECK(nn.j_xy(0, 2) == 0.0);
    CHECK(nn.j_xy(1, 2) == doctest::Approx(full.j_xy(1, 2)).epsilon(1e-15));
    CHECK(nn.nn_truncation);
    // j_eff is the central nearest-neighbor bond either way.
    CHECK(nn.j_eff == doctest::Approx(full.j_eff).epsilon(1e-15));
}

TEST_CASE("residual spin-phonon couplings match the direct formula") {
    const Chain c = radial_chain(2);
    DriveParams d = fixture_drive();
    CouplingOptions opts;
    opts.axes = {Axis::y};
    const ResidualReport rep = residual_coupling(c.etas, c.modes, d, opts);
    REQUIRE(rep.per_ion.size() == 2);
    REQUIRE(rep.mode_labels.size() == 2);
    CHECK(rep.mode_labels[0] == "y:0");
    CHECK(rep.mode_labels[1] == "y:1");

    // J^res_{j,nm} = sqrt2 Omega (Omega/4)^2 eta_jn eta_jm
    //                [1/(omega0^2-nu_n^2) + 1/(omega0^2-nu_m^2)].
    const double w0 = d.omega0();
    const auto& eta = c.etas.axis(Axis::y);
    const auto& freq = c.modes.axis(Axis::y).freq;
    double worst = 0.0;
    for (int ion = 0; ion < 2; ++ion) {
        double total = 0.0;
        for (int n = 0; n < 2; ++n)
            for (int m = 0; m < 2; ++m) {
                const double expect = std::sqrt(2.0) * d.omega *
                                      std::pow(d.omega / 4.0, 2) * eta(ion, n) *
                                      eta(ion, m) *
                                      (1.0 / (w0 * w0 - freq[n] * freq[n]) +
                                       1.0 / (w0 * w0 - freq[m] * freq[m]));
                CHECK(rep.per_ion[ion](n, m) == doctest::Approx(expect).epsilon(1e-12));
                total += std::abs(expect);
            }
        worst = std::max(worst, total);
    }
    CHECK(rep.max_total == doctest::Approx(worst).epsilon(1e-12));
}

TEST_CASE("hierarchy report grades ratios and respects the coupling axes") {
    const Chain c = radial_chain(4);
    CouplingOptions opts;
    opts.axes = {Axis::y};

    const ValidityReport good = validate_hierarchy(c.etas, c.modes, fixture_drive(), opts);
    CHECK(good.overall == "pass");
    CHECK(good.ok());
    for (const auto& chk : good.checks) {
        CAPTURE(chk.name);
        CHECK(chk.status == "pass");
        CHECK(chk.ratio == doctest::Approx(chk.large / chk.small).epsilon(1e-12));
    }

    // Ratio large/small in [2, 5) warns, below 2 fails; overall is the worst.
    DriveParams warn_d = fixture_drive();
    warn_d.omega_prime = warn_d.omega / 3.0;
    const ValidityReport warned = validate_hierarchy(c.etas, c.modes, warn_d, opts);
    CHECK(warned.overall == "warn");
    CHECK(warned.ok());

    DriveParams fail_d = fixture_drive();
    fail_d.omega_prime = fail_d.omega / 1.5;
    const ValidityReport failed = validate_hierarchy(c.etas, c.modes, fail_d, opts);
    CHECK(failed.overall == "fail");
    CHECK(!failed.ok());

    // With the gradient targeted at the y branch, the axial factors are much
    // larger than 0.03; including them would change the eta_max check.
    CouplingOptions all;
    const ValidityReport wide = validate_hierarchy(c.etas, c.modes, fixture_drive(), all);
    double eta_only_y = 0.0, eta_all = 0.0;
    for (const auto& chk : good.checks)
        if (chk.name == "eta_max << 1") eta_only_y = chk.small;
    for (const auto& chk : wide.checks)
        if (chk.name == "eta_max << 1") eta_all = chk.small;
    CHECK(eta_only_y == doctest::Approx(0.03).epsilon(1e-9));
    CHECK(eta_all > 5.0 * eta_only_y);

    // Stark-field checks appear only when that field is on.
    DriveParams stark = fixture_drive();
    stark.d_prime_override.reset();
    stark.omega_r = consts::mhz_to_rad(1.0);
    stark.delta_r = consts::mhz_to_rad(200.0);
    const ValidityReport with_stark = validate_hierarchy(c.etas, c.modes, stark, opts);
    CHECK(with_stark.checks.size() == good.checks.size() + 2);
}

TEST_CASE("power-law fit recovers a synthetic dipolar decay") {
    const int n = 10;
    IonLattice lat;
    lat.positions = Eigen::VectorXd::LinSpaced(n, -4.5, 4.5);
    lat.length_scale = 1e-6;
    CouplingMatrix cm;
    cm.j.setZero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i != j) cm.j(i, j) = std::pow(std::abs(i - j), -3.0);
    const PowerLawFit fit = power_law_fit(cm, lat);
    CHECK(fit.n_pairs >= 3);
    CHECK(fit.alpha == doctest::Approx(3.0).epsilon(1e-9));
    CHECK(fit.r2 > 1.0 - 1e-12);
}

TEST_CASE("Stark-shift on-site coefficient") {
    DriveParams d;
    d.omega = consts::mhz_to_rad(24.0) * std::sqrt(2.0);
    d.omega_r = consts::mhz_to_rad(2.0);
    d.delta_r = consts::mhz_to_rad(-100.0);
    // D' = Omega_r^2 / (8 Delta_r), sign of the detuning kept.
    CHECK(d.d_prime() ==
          doctest::Approx(d.omega_r * d.omega_r / (8.0 * d.delta_r)).epsilon(1e-12));
    CHECK(d.d_prime() < 0.0);

    d.delta_r = 0.0;
    CHECK_THROWS_AS(d.d_prime(), ValidationError);
    d.d_prime_override = 123.0;
    CHECK(d.d_prime() == 123.0);
}
