#include "ionsim/eigen_solver.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "ionsim/errors.hpp"

namespace ionsim {

namespace {

// Portable deterministic uniform in [-1, 1): avoids the implementation-defined
// std::normal_distribution so seeded runs are reproducible byte-for-byte.
double unit_draw(std::mt19937_64& rng) {
    return 2.0 * ((rng() >> 11) * (1.0 / 9007199254740992.0)) - 1.0;
}

Eigen::VectorXd random_vector(long dim, std::mt19937_64& rng) {
    Eigen::VectorXd v(dim);
    for (long i = 0; i < dim; ++i) v[i] = unit_draw(rng);
    return v;
}

// Two-pass Gram-Schmidt of w against basis[0..count). Returns post-norm.
double orthogonalize(Eigen::VectorXd& w, const std::vector<Eigen::VectorXd>& basis,
                     std::size_t count) {
    for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t j = 0; j < count; ++j) {
            const double c = basis[j].dot(w);
            if (c != 0.0) w.noalias() -= c * basis[j];
        }
    }
    return w.norm();
}

// Combined Gram-Schmidt against the Krylov basis and the locked (deflated)
// eigenvectors. The locked set must come LAST within each pass: subtracting
// a basis vector re-introduces its own residual locked components scaled by
// the O(||H||) recurrence coefficients, and if nothing cleans that up
// afterwards the contamination obeys the same three-term recurrence as the
// Lanczos polynomials and grows exponentially until the deflated run
// converges onto the locked eigenvector (observed as a stable ghost Ritz
// value below the true deflated spectrum). Ending every pass on the locked
// set resets the contamination to the machine floor. Returns the post-norm.
double orthogonalize_deflated(Eigen::VectorXd& w,
                              const std::vector<Eigen::VectorXd>& basis, std::size_t count,
                              const std::vector<Eigen::VectorXd>& locked) {
    for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t j = 0; j < count; ++j) {
            const double c = basis[j].dot(w);
            if (c != 0.0) w.noalias() -= c * basis[j];
        }
        for (const Eigen::VectorXd& u : locked) {
            const double c = u.dot(w);
            if (c != 0.0) w.noalias() -= c * u;
        }
    }
    return w.norm();
}

struct RitzSet {
    Eigen::VectorXd values;   // ascending, first k
    Eigen::MatrixXd coeffs;   // columns: T-eigenvectors for those values
};

RitzSet ritz_lowest(const Eigen::MatrixXd& t, int m, int k) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t.topLeftCorner(m, m));
    RitzSet r;
    const int kk = std::min(k, m);
    r.values = es.eigenvalues().head(kk);
    r.coeffs = es.eigenvectors().leftCols(kk);
    return r;
}

} // namespace

EigenResult lowest_eigenpairs(const HamiltonianOperator& h, const EigenOptions& opts) {
    const long dim = h.dim();
    if (dim < 1) throw ValidationError("eigen solve on empty Hilbert space");
    const int k = static_cast<int>(std::min<long>(std::max(1, opts.k), dim));
    const int budget = static_cast<int>(std::min<long>(dim, std::max(opts.max_iter, 8)));

    std::mt19937_64 rng(opts.seed);

    EigenResult out;
    out.values.resize(k);
    out.vectors.resize(dim, k);
    out.residuals.resize(k);
    out.iterations = 0;

    // Successive deflation: one Lanczos run per eigenpair, each restricted to
    // the orthogonal complement of the eigenvectors accepted so far. A single
    // Krylov space holds only one vector per distinct eigenvalue, so reading
    // several Ritz values out of one space silently undercounts degenerate
    // multiplets; re-running against locked eigenvectors recovers the true
    // multiplicity (the deflated operator still owns the remaining copies).
    std::vector<Eigen::VectorXd> locked;
    locked.reserve(static_cast<std::size_t>(k));
    int found = 0;

    for (int e = 0; e < k; ++e) {
        std::vector<Eigen::VectorXd> basis;
        basis.reserve(static_cast<std::size_t>(budget));
        Eigen::MatrixXd t = Eigen::MatrixXd::Zero(budget, budget);

        // Random start (or breakdown restart) vector inside the deflated space.
        auto fresh_vector = [&](std::size_t count) -> bool {
            for (int attempt = 0; attempt < 8; ++attempt) {
                Eigen::VectorXd f = random_vector(dim, rng);
                const double nrm = orthogonalize_deflated(f, basis, count, locked);
                if (nrm > 1e-8) {
                    f /= nrm;
                    basis.push_back(f);
                    return true;
                }
            }
            return false;
        };
        if (!fresh_vector(0)) break; // complement numerically exhausted

        double scale = 0.0;      // running estimate of ||H||
        double beta_last = 0.0;  // coupling out of the most recent vector
        double est_factor = 0.1; // push below tol before the costly confirm
        int m = 0;
        double best_val = 0.0, best_res = std::numeric_limits<double>::infinity();
        Eigen::VectorXd best_x;
        bool done = false;

        while (m < budget && !done) {
            Eigen::VectorXd w = h.apply(basis[static_cast<std::size_t>(m)]);
            const double alpha = basis[static_cast<std::size_t>(m)].dot(w);
            t(m, m) = alpha;
            scale = std::max(scale, std::abs(alpha) + beta_last);
            const double beta =
                orthogonalize_deflated(w, basis, static_cast<std::size_t>(m) + 1, locked);
            ++m;

            bool invariant = false;
            // sqrt(machine-eps) breakdown threshold: once the complement is
            // numerically exhausted the remaining residual is pure
            // reorthogonalization noise, and normalizing it injects ghost
            // components along the locked eigenvectors (observed noise floor
            // ~1e-9 relative to ||H||).
            if (m < budget) {
                if (beta > 1e-8 * std::max(scale, 1.0)) {
                    w /= beta;
                    basis.push_back(w);
                    t(m, m - 1) = t(m - 1, m) = beta;
                    beta_last = beta;
                } else {
                    invariant = true; // completed block is H-invariant
                    beta_last = 0.0;
                }
            } else {
                beta_last = beta;
            }

            if (invariant || m == budget || m % 10 == 0) {
                const RitzSet r = ritz_lowest(t, m, 1);
                const double est = beta_last * std::abs(r.coeffs(m - 1, 0));
                if (est <= opts.tol * est_factor || invariant || m == budget) {
                    Eigen::VectorXd x = Eigen::VectorXd::Zero(dim);
                    for (int j = 0; j < m; ++j)
                        x.noalias() += r.coeffs(j, 0) * basis[static_cast<std::size_t>(j)];
                    orthogonalize(x, locked, locked.size());
                    x.normalize();
                    const double res = (h.apply(x) - r.values[0] * x).norm();
                    if (res < best_res) {
                        best_res = res;
                        best_val = r.values[0];
                        best_x = x;
                    }
                    if (res <= opts.tol) done = true;
                    else est_factor *= 0.1; // estimate was optimistic
                }
            }
            if (!done && invariant && !fresh_vector(m)) break;
            // After a restart t(m, m-1) stays zero: blocks stay decoupled.
        }

        out.iterations += m;
        if (!best_x.size()) break;
        out.values[e] = best_val;
        out.vectors.col(e) = best_x;
        out.residuals[e] = best_res;
        locked.push_back(best_x);
        ++found;
    }

    // Runs produce values in ascending order up to numerical noise; sort to
    // guarantee the contract for near-degenerate levels.
    std::vector<int> order(static_cast<std::size_t>(found));
    for (int i = 0; i < found; ++i) order[static_cast<std::size_t>(i)] = i;
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return out.values[a] < out.values[b]; });
    EigenResult sorted;
    sorted.iterations = out.iterations;
    sorted.values.resize(found);
    sorted.vectors.resize(dim, found);
    sorted.residuals.resize(found);
    for (int i = 0; i < found; ++i) {
        sorted.values[i] = out.values[order[static_cast<std::size_t>(i)]];
        sorted.vectors.col(i) = out.vectors.col(order[static_cast<std::size_t>(i)]);
        sorted.residuals[i] = out.residuals[order[static_cast<std::size_t>(i)]];
    }
    sorted.converged =
        found == k && (found == 0 || (sorted.residuals.array() <= opts.tol).all());

    if (!sorted.converged && opts.require_converged) {
        std::ostringstream msg;
        msg << "Lanczos did not reach residual " << opts.tol << " within basis size "
            << budget << " (" << found << "/" << k << " pairs, worst residual "
            << (sorted.residuals.size() > 0 ? sorted.residuals.maxCoeff() : 0.0)
            << "); raise max_iter or loosen tol";
        throw ConvergenceFailure(msg.str());
    }
    return sorted;
}

EigenResult dense_eigenpairs(const HamiltonianOperator& h, int k, long max_dense_dim) {
    const long dim = h.dim();
    if (dim > max_dense_dim) {
        std::ostringstream msg;
        msg << "dense diagonalization limited to dimension " << max_dense_dim
            << ", got " << dim;
        throw ValidationError(msg.str());
    }
    const int kk = static_cast<int>(std::min<long>(std::max(1, k), dim));
    Eigen::MatrixXd hd = Eigen::MatrixXd(h.mat);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hd);
    EigenResult out;
    out.values = es.eigenvalues().head(kk);
    out.vectors = es.eigenvectors().leftCols(kk);
    out.residuals.resize(kk);
    for (int i = 0; i < kk; ++i)
        out.residuals[i] = (hd * out.vectors.col(i) - out.values[i] * out.vectors.col(i)).norm();
    out.iterations = 0;
    out.converged = true;
    return out;
}

GapResult energy_gap(const SpinModelParams& params, const std::vector<int>& sectors,
                     int k_per_sector, const EigenOptions& opts, double cluster_tol_abs) {
    GapResult out;
    std::vector<SectorLevel> levels;
    for (int sz : sectors) {
        if (std::abs(sz) > params.n_sites) continue;
        HamiltonianOperator h = build_hamiltonian(params, sz);
        if (h.dim() == 0) continue;
        EigenOptions per = opts;
        per.k = static_cast<int>(std::min<long>(k_per_sector, h.dim()));
        EigenResult r = lowest_eigenpairs(h, per);
        for (int i = 0; i < r.values.size(); ++i)
            levels.push_back({sz, r.values[i]});
    }
    if (levels.empty()) throw ValidationError("energy_gap: no sectors produced levels");
    std::sort(levels.begin(), levels.end(),
              [](const SectorLevel& a, const SectorLevel& b) { return a.value < b.value; });

    out.levels = levels;
    out.e0 = levels.front().value;
    out.e0_sector = levels.front().sector;

    const double spread = levels.back().value - out.e0;
    const double deg_tol = 1e-9 * std::max({1.0, std::abs(out.e0), spread});
    out.e1 = out.e0;
    bool found = false;
    for (const auto& lv : levels) {
        if (lv.value > out.e0 + deg_tol) { out.e1 = lv.value; found = true; break; }
    }
    out.gap = found ? out.e1 - out.e0 : 0.0;

    double scale_j = std::abs(params.j_eff);
    if (scale_j == 0.0) scale_j = 1.0;
    out.cluster_tol = cluster_tol_abs > 0.0 ? cluster_tol_abs : 1e-3 * scale_j;
    out.multiplet_size = 0;
    out.bulk_gap = 0.0;
    for (const auto& lv : levels) {
        if (lv.value <= out.e0 + out.cluster_tol) ++out.multiplet_size;
        else { out.bulk_gap = lv.value - out.e0; break; }
    }
    return out;
}

} // namespace ionsim
