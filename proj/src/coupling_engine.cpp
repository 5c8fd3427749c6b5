#include "ionsim/coupling_engine.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "ionsim/fitting.hpp"

namespace ionsim {

void DriveParams::validate() const {
    if (omega <= 0.0) throw ValidationError("drive: omega must be positive");
    if (omega_prime < 0.0) throw ValidationError("drive: omega_prime must be >= 0");
    if (theta < 0.0 || theta > consts::pi)
        throw ValidationError("drive: theta outside [0, pi]");
    if (omega_r < 0.0) throw ValidationError("drive: omega_r must be >= 0");
    (void)d_prime(); // raises on omega_r without delta_r
}

namespace {

void check_resonances(const ModeSet& modes, const DriveParams& drive,
                      const CouplingOptions& opts) {
    const double w0 = drive.omega0();
    for (Axis ax : opts.axes) {
        const AxisModes& am = modes.axis(ax);
        for (int n = 0; n < am.freq.size(); ++n) {
            const double nu = am.freq(n);
            if (std::abs(w0 - nu) < opts.resonance_guard * nu) {
                std::ostringstream msg;
                msg << "dressing splitting Omega/sqrt2 = " << consts::rad_to_mhz(w0)
                    << " MHz is within " << opts.resonance_guard * 100 << "% of mode "
                    << axis_name(ax) << ":" << n << " at " << consts::rad_to_mhz(nu)
                    << " MHz; the perturbative coupling diverges near resonance. "
                       "Detune the drive or adjust the trap.";
                throw ResonanceError(msg.str());
            }
        }
    }
}

} // namespace

CouplingMatrix effective_coupling_matrix(const EtaMatrix& etas, const ModeSet& modes,
                                         const DriveParams& drive,
                                         const CouplingOptions& opts) {
    drive.validate();
    check_resonances(modes, drive, opts);
    const int n = modes.n_ions();
    const double w0 = drive.omega0();
    const double pre = 0.25 * drive.omega * drive.omega; // (Omega/2)^2

    Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n, n);
    for (Axis ax : opts.axes) {
        const AxisModes& am = modes.axis(ax);
        const Eigen::MatrixXd& e = etas.axis(ax);
        for (int k = 0; k < am.freq.size(); ++k) {
            const double nu = am.freq(k);
            const double w = 2.0 * nu / (w0 * w0 - nu * nu);
            j.noalias() += (pre * w) * (e.col(k) * e.col(k).transpose());
        }
    }
    CouplingMatrix out;
    out.j = 0.5 * (j + j.transpose()); // symmetrize away roundoff
    return out;
}

ResidualReport residual_coupling(const EtaMatrix& etas, const ModeSet& modes,
                                 const DriveParams& drive,
                                 const CouplingOptions& opts) {
    drive.validate();
    check_resonances(modes, drive, opts);
    const int n = modes.n_ions();
    const double w0 = drive.omega0();
    const double pre = std::sqrt(2.0) * drive.omega * std::pow(drive.omega / 4.0, 2);

    // Flatten modes axis-major; keep per-mode eta column and denominator.
    std::vector<Eigen::VectorXd> eta_cols;
    std::vector<double> denom;
    ResidualReport rep;
    for (Axis ax : opts.axes) {
        const AxisModes& am = modes.axis(ax);
        const Eigen::MatrixXd& e = etas.axis(ax);
        for (int k = 0; k < am.freq.size(); ++k) {
            eta_cols.push_back(e.col(k));
            const double nu = am.freq(k);
            denom.push_back(1.0 / (w0 * w0 - nu * nu));
            rep.mode_labels.push_back(std::string(axis_name(ax)) + ":" + std::to_string(k));
        }
    }

    const int m = static_cast<int>(eta_cols.size());
    rep.per_ion.resize(n);
    for (int i = 0; i < n; ++i) {
        Eigen::MatrixXd r(m, m);
        for (int a = 0; a < m; ++a)
            for (int b = 0; b < m; ++b)
                r(a, b) = pre * eta_cols[a](i) * eta_cols[b](i) * (denom[a] + denom[b]);
        rep.max_total = std::max(rep.max_total, r.cwiseAbs().sum());
        rep.per_ion[i] = std::move(r);
    }
    return rep;
}

SpinModelParams SpinModelParams::uniform_nn(int n, double lambda, double d, double h,
                                            double j, bool periodic) {
    SpinModelParams p;
    p.n_sites = n;
    p.j_xy = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i + 1 < n; ++i) p.j_xy(i, i + 1) = p.j_xy(i + 1, i) = j;
    if (periodic && n > 2) p.j_xy(0, n - 1) = p.j_xy(n - 1, 0) = j;
    p.lambda = lambda;
    p.d = d;
    p.h_staggered = h;
    p.j_eff = j;
    p.nn_truncation = true;
    p.periodic = periodic;
    return p;
}

void SpinModelParams::validate() const {
    if (n_sites < 1) throw ValidationError("model: n_sites must be >= 1");
    if (j_xy.rows() != n_sites || j_xy.cols() != n_sites)
        throw ValidationError("model: coupling matrix shape mismatch");
    if (j_eff == 0.0 && (d != 0.0 || h_staggered != 0.0))
        throw ValidationError("model: d/h need a nonzero j_eff reference scale");
}

SpinModelParams effective_model_params(const CouplingMatrix& coupling, const DriveParams& drive,
                                       bool nn_truncation) {
    const int n = coupling.n();
    if (n < 2) throw ValidationError("effective_model_params: need at least 2 ions");
    const double c2 = std::cos(drive.theta) * std::cos(drive.theta);
    const double s2 = std::sin(drive.theta) * std::sin(drive.theta);
    const double a_xy = 0.5 * (1.0 + c2);
    const double a_d = a_xy - s2;

    SpinModelParams p;
    p.n_sites = n;
    p.lambda = 0.5 * s2 / a_xy; // sin^2 th / (1 + cos^2 th)
    p.j_xy = a_xy * coupling.j;
    p.j_xy.diagonal().setZero();
    if (nn_truncation) {
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                if (std::abs(i - j) > 1) p.j_xy(i, j) = 0.0;
        p.nn_truncation = true;
    }

    // Reference scale: central nearest-neighbor bond.
    const int c = n / 2;
    p.j_eff = p.j_xy(c - 1, c);
    if (p.j_eff == 0.0)
        throw ValidationError("effective_model_params: vanishing central bond");

    const double jii_mean = coupling.j.diagonal().mean();
    const double onsite = (drive.d_prime() - 0.5 * jii_mean) * a_d;
    p.d = onsite / p.j_eff;
    return p;
}

namespace {

ValidityCheck make_check(const std::string& name, double small, double large) {
    ValidityCheck c;
    c.name = name;
    c.small = small;
    c.large = large;
    c.ratio = small > 0.0 ? large / small : std::numeric_limits<double>::infinity();
    c.status = c.ratio >= 5.0 ? "pass" : (c.ratio >= 2.0 ? "warn" : "fail");
    return c;
}

} // namespace

ValidityReport validate_hierarchy(const EtaMatrix& etas, const ModeSet& modes,
                                  const DriveParams& drive,
                                  const CouplingOptions& opts) {
    (void)modes;
    drive.validate();
    double eta_max = 0.0;
    for (Axis a : opts.axes)
        eta_max = std::max(eta_max, etas.axis(a).cwiseAbs().maxCoeff());
    const double w0 = drive.omega0();

    ValidityReport rep;
    rep.checks.push_back(make_check("eta_max << 1", eta_max, 1.0));
    if (drive.omega_r != 0.0) {
        // Explicit Stark-field checks only apply when the field is given as a
        // (Rabi, detuning) pair; a direct D' override has no field of its own.
        rep.checks.push_back(make_check("omega_r/(2 sqrt2) << omega/sqrt2",
                                        drive.omega_r / (2.0 * std::sqrt(2.0)), w0));
        rep.checks.push_back(
            make_check("omega/sqrt2 << |delta_r|", w0, std::abs(drive.delta_r)));
    }
    const double dp = drive.d_prime();
    if (dp != 0.0)
        rep.checks.push_back(make_check("|D'| << omega/sqrt2", std::abs(dp), w0));
    rep.checks.push_back(make_check("omega_prime << omega", drive.omega_prime, drive.omega));
    rep.checks.push_back(make_check("eta omega/(2 sqrt2) << omega_prime",
                                    eta_max * drive.omega / (2.0 * std::sqrt(2.0)),
                                    drive.omega_prime));

    rep.overall = "pass";
    for (const auto& c : rep.checks) {
        if (c.status == "fail") rep.overall = "fail";
        else if (c.status == "warn" && rep.overall == "pass") rep.overall = "warn";
    }
    return rep;
}

std::string ValidityReport::render_text() const {
    std::ostringstream os;
    std::size_t w = 0;
    for (const auto& c : checks) w = std::max(w, c.name.size());
    for (const auto& c : checks) {
        os << std::left << std::setw(static_cast<int>(w) + 2) << c.name
           << std::right << std::setw(12) << std::setprecision(4) << std::scientific << c.small
           << "  <<" << std::setw(12) << c.large << "   ratio " << std::setw(10)
           << std::fixed << std::setprecision(2) << c.ratio << "   " << c.status << "\n";
    }
    os << "overall: " << overall << "\n";
    return os.str();
}

PowerLawFit power_law_fit(const CouplingMatrix& coupling, const IonLattice& lattice) {
    const int n = coupling.n();
    if (lattice.n() != n) throw DimensionMismatch("power_law_fit: lattice/coupling mismatch");
    const int lo = n / 4, hi = n - n / 4; // middle-chain sites [lo, hi)
    std::vector<double> lx, ly;
    for (int i = lo; i < hi; ++i) {
        for (int j = i + 1; j < hi; ++j) {
            const double d = std::abs(lattice.positions(j) - lattice.positions(i));
            const double jj = std::abs(coupling.j(i, j));
            if (jj <= 0.0 || d <= 0.0) continue;
            lx.push_back(std::log(d));
            ly.push_back(std::log(jj));
        }
    }
    if (lx.size() < 3)
        throw InsufficientData("power_law_fit: need at least 3 middle-chain pairs");
    const Eigen::VectorXd vx = Eigen::Map<Eigen::VectorXd>(lx.data(), lx.size());
    const Eigen::VectorXd vy = Eigen::Map<Eigen::VectorXd>(ly.data(), ly.size());
    const auto line = fitting::fit_line(vx, vy);
    PowerLawFit f;
    f.alpha = -line.slope;
    f.r2 = line.r2;
    f.n_pairs = static_cast<int>(lx.size());
    return f;
}

} // namespace ionsim
