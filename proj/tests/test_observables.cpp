#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "ionsim/observables.hpp"
#include "ionsim/spin_model.hpp"

using namespace ionsim;

namespace {

Eigen::VectorXcd random_state(long dim, unsigned seed) {
    std::mt19937 rng(seed);
    std::normal_distribution<double> dist;
    Eigen::VectorXcd v(dim);
    for (long i = 0; i < dim; ++i) v[i] = cplx(dist(rng), dist(rng));
    return v / v.norm();
}

// Dense Kronecker lift of a single-site operator, site-major ordering.
Eigen::MatrixXcd lift(const Eigen::Matrix3cd& op, int site, int n_sites) {
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Identity(1, 1);
    for (int s = 0; s < n_sites; ++s) {
        const Eigen::MatrixXcd& factor =
            (s == site) ? op : Eigen::Matrix3cd::Identity();
        Eigen::MatrixXcd next(out.rows() * 3, out.cols() * 3);
        for (long i = 0; i < out.rows(); ++i)
            for (long j = 0; j < out.cols(); ++j)
                next.block(3 * i, 3 * j, 3, 3) = out(i, j) * factor;
        out = std::move(next);
    }
    return out;
}

cplx expectation(const Eigen::MatrixXcd& op, const Eigen::VectorXcd& psi) {
    return psi.dot(op * psi);
}

// Exact-Schmidt state on 2+2 sites: sum_k sqrt(p_k) |L_k> |R_k> with
// computational left/right basis states, so the mid-cut spectrum is p itself.
Eigen::VectorXcd schmidt_state(const std::vector<double>& p) {
    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(81);
    for (std::size_t k = 0; k < p.size(); ++k)
        psi[static_cast<long>(k) * 9 + static_cast<long>(k)] = std::sqrt(p[k]);
    return psi / psi.norm();
}

// Reverse the site order of a state (site-major base-3 digit reversal).
Eigen::VectorXcd reverse_sites(const Eigen::VectorXcd& psi, int n_sites) {
    Eigen::VectorXcd out(psi.size());
    for (long idx = 0; idx < psi.size(); ++idx) {
        long rev = 0, rest = idx;
        for (int s = 0; s < n_sites; ++s) {
            rev = rev * 3 + rest % 3;
            rest /= 3;
        }
        out[rev] = psi[idx];
    }
    return out;
}

} // namespace

TEST_CASE("string order on definite-m product states") {
    // For |m_0 m_1 ...> the string expectation factorizes:
    // -m_i m_j * prod_l exp(i pi m_l) with phase -1 per interior |m| = 1.
    struct Case {
        std::vector<int> ms;
        int i, j;
        double expect;
    };
    const std::vector<Case> cases = {
        {{1, -1, 1, -1}, 0, 3, 1.0},   // two interior phases cancel
        {{1, 0, 0, -1}, 0, 3, 1.0},    // interior zeros contribute +1
        {{1, 0, 0, 1}, 0, 3, -1.0},    // aligned ends flip the sign
        {{1, 0, -1}, 0, 2, 1.0},
        {{0, 1, -1}, 1, 2, 1.0},       // adjacent: plain -<Si Sj>
        {{1, 1, 0, 0}, 0, 1, -1.0},
    };
    for (const auto& c : cases) {
        CAPTURE(c.i);
        CAPTURE(c.j);
        const Eigen::VectorXcd psi = product_state(c.ms);
        const StringOrderValue v =
            string_order(psi, static_cast<int>(c.ms.size()), SpinAxis::z, c.i, c.j);
        CHECK(v.value == doctest::Approx(c.expect).epsilon(1e-12));
        CHECK(std::abs(v.expectation.imag()) < 1e-12);
    }
}

TEST_CASE("string order against a dense operator oracle") {
    const int n = 4;
    const Eigen::VectorXcd psi = random_state(81, 17);
    const Eigen::Matrix3cd sz = spin1::sz().cast<cplx>();
    const Eigen::Matrix3cd sx = spin1::sx().cast<cplx>();
    const Eigen::Matrix3cd pz = spin1::exp_i_pi_sz().cast<cplx>();
    const Eigen::Matrix3cd px = spin1::exp_i_pi_sx().cast<cplx>();

    for (int i : {0, 1})
        for (int j : {2, 3}) {
            CAPTURE(i);
            CAPTURE(j);
            Eigen::MatrixXcd op_z = -lift(sz, i, n) * lift(sz, j, n);
            Eigen::MatrixXcd op_x = -lift(sx, i, n) * lift(sx, j, n);
            for (int l = i + 1; l < j; ++l) {
                op_z = op_z * lift(pz, l, n);
                op_x = op_x * lift(px, l, n);
            }
            const cplx ez = expectation(op_z, psi);
            const cplx ex = expectation(op_x, psi);
            CHECK(std::abs(string_order(psi, n, SpinAxis::z, i, j).expectation - ez) < 1e-12);
            CHECK(std::abs(string_order(psi, n, SpinAxis::x, i, j).expectation - ex) < 1e-12);
        }

    // j = i + 1 is the empty-string case: exactly -<S_i S_j>.
    const cplx nn = -expectation(lift(sz, 1, n) * lift(sz, 2, n), psi);
    CHECK(std::abs(string_order(psi, n, SpinAxis::z, 1, 2).expectation - nn) < 1e-12);

    CHECK_THROWS_AS(string_order(psi, n, SpinAxis::z, 2, 2), ValidationError);
    CHECK_THROWS_AS(string_order(psi, n, SpinAxis::z, -1, 2), ValidationError);
    CHECK_THROWS_AS(string_order(psi, n, SpinAxis::z, 1, 4), ValidationError);
}

TEST_CASE("entanglement spectrum of hand-built states") {
    // Product state: no entanglement across any cut.
    {
        const Eigen::VectorXcd psi = product_state({1, 0, -1, 0});
        const EntanglementReport r = entanglement_spectrum(psi, 4, 2);
        CHECK(r.entropy < 1e-12);
        CHECK(r.spectrum[0] == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(entanglement_entropy(psi, 4, 2) < 1e-12);
    }
    // Maximally entangled two-site singlet-like state: three equal levels.
    {
        Eigen::VectorXcd psi = (product_state({1, -1}) + product_state({-1, 1}) +
                                product_state({0, 0})) /
                               std::sqrt(3.0);
        const EntanglementReport r = entanglement_spectrum(psi, 2, 1);
        REQUIRE(r.spectrum.size() >= 3);
        for (int k = 0; k < 3; ++k)
            CHECK(r.spectrum[k] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
        CHECK(r.entropy == doctest::Approx(std::log(3.0)).epsilon(1e-12));
        REQUIRE(!r.multiplets.empty());
        CHECK(r.multiplets[0] == 3);
        CHECK(!r.even_multiplets); // odd-sized leading group
    }
    // Two equal levels: the smallest even-degenerate example.
    {
        Eigen::VectorXcd psi =
            (product_state({1, 0}) + product_state({0, 1})) / std::sqrt(2.0);
        const EntanglementReport r = entanglement_spectrum(psi, 2, 1);
        CHECK(r.spectrum[0] == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(r.spectrum[1] == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(r.multiplets[0] == 2);
        CHECK(r.even_multiplets);
        CHECK(r.entropy == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    }
}

TEST_CASE("degeneracy grouping follows the tolerance and the weight floor") {
    // Exact Schmidt spectrum {0.4, 0.4, 0.09, 0.09, 0.01, 0.01}: all pairs.
    const Eigen::VectorXcd paired = schmidt_state({0.4, 0.4, 0.09, 0.09, 0.01, 0.01});
    const EntanglementReport r = entanglement_spectrum(paired, 4, 2, 1e-2, 1e-8);
    REQUIRE(r.multiplets.size() >= 3);
    CHECK(r.multiplets[0] == 2);
    CHECK(r.multiplets[1] == 2);
    CHECK(r.multiplets[2] == 2);
    CHECK(r.even_multiplets);
    CHECK(r.cut == 2);
    CHECK(r.group_tol == 1e-2);

    // Split one pair beyond the relative tolerance: parity breaks.
    const Eigen::VectorXcd split = schmidt_state({0.42, 0.38, 0.09, 0.09, 0.01, 0.01});
    const EntanglementReport rs = entanglement_spectrum(split, 4, 2, 1e-2, 1e-8);
    CHECK(rs.multiplets[0] == 1);
    CHECK(!rs.even_multiplets);
    // The same spectrum passes with a tolerance wider than the split.
    const EntanglementReport rw = entanglement_spectrum(split, 4, 2, 0.2, 1e-8);
    CHECK(rw.multiplets[0] == 2);
    CHECK(rw.even_multiplets);

    // A singleton below the weight floor does not break the parity verdict.
    const Eigen::VectorXcd floored = schmidt_state({0.5, 0.5 - 1e-12, 1e-12});
    const EntanglementReport rf = entanglement_spectrum(floored, 4, 2, 1e-2, 1e-8);
    CHECK(rf.even_multiplets);

    CHECK_THROWS_AS(entanglement_spectrum(paired, 4, 0, 1e-2, 1e-8), ValidationError);
    CHECK_THROWS_AS(entanglement_spectrum(paired, 4, 4, 1e-2, 1e-8), ValidationError);
}

TEST_CASE("left and right blocks give the same spectrum") {
    const int n = 5;
    const Eigen::VectorXcd psi = random_state(pow3(n), 23);
    for (int cut : {1, 2, 3, 4}) {
        CAPTURE(cut);
        const EntanglementReport left = entanglement_spectrum(psi, n, cut);
        const EntanglementReport right =
            entanglement_spectrum(reverse_sites(psi, n), n, n - cut);
        const int k = static_cast<int>(
            std::min(left.spectrum.size(), right.spectrum.size()));
        for (int i = 0; i < k; ++i)
            if (left.spectrum[i] > 1e-12)
                CHECK(left.spectrum[i] == doctest::Approx(right.spectrum[i]).epsilon(1e-10));
        CHECK(left.entropy == doctest::Approx(right.entropy).epsilon(1e-10));
    }
}

TEST_CASE("connected correlations of simple states") {
    // Product state: site means are the m values, connected parts vanish.
    {
        const Eigen::VectorXcd psi = product_state({1, 0, -1, 1});
        const CorrelationReport r = correlation_function(psi, 4, SpinAxis::z);
        CHECK(r.site_mean[0] == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(r.site_mean[1] == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(r.site_mean[2] == doctest::Approx(-1.0).epsilon(1e-12));
        CHECK(r.c.cwiseAbs().maxCoeff() < 1e-12);
    }
    // Correlated two-site state: <Sz Sz> = -1 with zero means.
    {
        Eigen::VectorXcd psi =
            (product_state({1, -1}) + product_state({-1, 1})) / std::sqrt(2.0);
        const CorrelationReport r = correlation_function(psi, 2, SpinAxis::z);
        CHECK(std::abs(r.site_mean[0]) < 1e-12);
        CHECK(r.c(0, 1) == doctest::Approx(-1.0).epsilon(1e-12));
        CHECK(r.c(0, 0) == doctest::Approx(1.0).epsilon(1e-12)); // <Sz^2> - 0
    }
    // Symmetric matrix, x-axis route against the dense oracle.
    {
        const Eigen::VectorXcd psi = random_state(27, 31);
        const CorrelationReport r = correlation_function(psi, 3, SpinAxis::x);
        const Eigen::Matrix3cd sx = spin1::sx().cast<cplx>();
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                const double sij =
                    expectation(lift(sx, i, 3) * lift(sx, j, 3), psi).real();
                const double si = expectation(lift(sx, i, 3), psi).real();
                const double sj = expectation(lift(sx, j, 3), psi).real();
                CHECK(r.c(i, j) == doctest::Approx(sij - si * sj).epsilon(1e-10));
            }
    }
}

TEST_CASE("correlation fits recover synthetic decay laws") {
    std::vector<double> r, y;

    // Pure exponential: A = 0.8, xi = 2.5.
    r.clear();
    y.clear();
    for (int k = 1; k <= 8; ++k) {
        r.push_back(k);
        y.push_back(0.8 * std::exp(-k / 2.5));
    }
    const CorrelationFit fe = correlation_fit(r, y);
    CHECK(fe.xi == doctest::Approx(2.5).epsilon(1e-2));
    CHECK(fe.a_exp == doctest::Approx(0.8).epsilon(1e-2));
    CHECK(fe.r2 > 0.99999);

    // Pure power law: B = 0.9, a = 1.7. The exponential amplitude must not
    // absorb the signal.
    r.clear();
    y.clear();
    for (int k = 1; k <= 8; ++k) {
        r.push_back(k);
        y.push_back(0.9 * std::pow(k, -1.7));
    }
    const CorrelationFit fp = correlation_fit(r, y);
    CHECK(fp.a_pow == doctest::Approx(1.7).epsilon(2e-2));
    CHECK(fp.b_pow == doctest::Approx(0.9).epsilon(2e-2));
    for (int k = 1; k <= 8; ++k) {
        const double model =
            fp.a_exp * std::exp(-k / fp.xi) + fp.b_pow * std::pow(k, -fp.a_pow);
        CHECK(model == doctest::Approx(0.9 * std::pow(k, -1.7)).epsilon(1e-4));
    }

    // Mixed decay: both channels present.
    r.clear();
    y.clear();
    for (int k = 1; k <= 12; ++k) {
        r.push_back(k);
        y.push_back(0.5 * std::exp(-k / 1.2) + 0.3 * std::pow(k, -3.0));
    }
    const CorrelationFit fm = correlation_fit(r, y);
    CHECK(fm.a_exp == doctest::Approx(0.5).epsilon(1e-4));
    CHECK(fm.xi == doctest::Approx(1.2).epsilon(1e-4));
    CHECK(fm.b_pow == doctest::Approx(0.3).epsilon(1e-4));
    CHECK(fm.a_pow == doctest::Approx(3.0).epsilon(1e-4));
    CHECK(fm.r2 > 0.999999);
    for (int k = 1; k <= 12; ++k) {
        const double truth = 0.5 * std::exp(-k / 1.2) + 0.3 * std::pow(k, -3.0);
        const double model =
            fm.a_exp * std::exp(-k / fm.xi) + fm.b_pow * std::pow(k, -fm.a_pow);
        CHECK(model == doctest::Approx(truth).epsilon(1e-3));
    }

    // Fewer than four usable points cannot constrain four parameters.
    CHECK_THROWS_AS(correlation_fit({1.0, 2.0, 3.0}, {0.5, 0.3, 0.2}), InsufficientData);
}

TEST_CASE("dressed-state robustness report") {
    // The dressed states carry no diagonal F_z matrix elements.
    {
        const Eigen::VectorXcd psi = random_state(9, 41);
        const RobustnessReport r = robustness_check(psi, 2);
        CHECK(r.fz_dressed_diag.cwiseAbs().maxCoeff() < 1e-14);
    }
    // A total-Sz eigenstate with eigenvalue zero sits in the protected space.
    {
        const SectorBasis b = sector_basis(3, 0);
        const Eigen::VectorXcd psi = embed_full(random_state(b.dim(), 43), b);
        const RobustnessReport r = robustness_check(psi, 3);
        CHECK(r.total_sz_norm < 1e-12);
        CHECK(std::abs(r.total_sz_expectation) < 1e-12);
        CHECK(r.in_dfs);
    }
    // A polarized product state is not protected.
    {
        const Eigen::VectorXcd psi = product_state({1, 1});
        const RobustnessReport r = robustness_check(psi, 2);
        CHECK(r.total_sz_expectation == doctest::Approx(2.0).epsilon(1e-12));
        CHECK(r.total_sz_norm == doctest::Approx(2.0).epsilon(1e-12));
        CHECK(!r.in_dfs);
        // || (Sx_0 + Sx_1) |+1,+1> || = 1: each term lowers one site to m=0
        // with amplitude 1/sqrt2 and the two results are orthogonal.
        CHECK(r.total_sx_norm == doctest::Approx(1.0).epsilon(1e-12));
    }
}
