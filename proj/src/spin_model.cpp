#include "ionsim/spin_model.hpp"

#include <cmath>

namespace ionsim {

namespace spin1 {

Eigen::Matrix3d sx() {
    const double r = 1.0 / std::sqrt(2.0);
    Eigen::Matrix3d m;
    m << 0, r, 0,
         r, 0, r,
         0, r, 0;
    return m;
}

Eigen::Matrix3cd sy() {
    const cplx i(0.0, 1.0);
    const double r = 1.0 / std::sqrt(2.0);
    Eigen::Matrix3cd m;
    m << 0.0, -i * r, 0.0,
         i * r, 0.0, -i * r,
         0.0, i * r, 0.0;
    return m;
}

Eigen::Matrix3d sz() {
    Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
    m(0, 0) = 1.0;
    m(2, 2) = -1.0;
    return m;
}

Eigen::Matrix3d sz2() {
    Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
    m(0, 0) = 1.0;
    m(2, 2) = 1.0;
    return m;
}

Eigen::Matrix3d sp() {
    const double s = std::sqrt(2.0);
    Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
    m(0, 1) = s;
    m(1, 2) = s;
    return m;
}

Eigen::Matrix3d sm() { return sp().transpose(); }

Eigen::Matrix3d exp_i_pi_sx() {
    return Eigen::Matrix3d::Identity() - 2.0 * sx() * sx();
}

Eigen::Matrix3d exp_i_pi_sz() {
    Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
    m(0, 0) = -1.0;
    m(2, 2) = -1.0;
    return m;
}

Eigen::Matrix3cd exp_i_theta_sx(double theta) {
    // Sx^3 = Sx for spin 1, so exp(i th Sx) = 1 + i sin(th) Sx + (cos(th)-1) Sx^2.
    const Eigen::Matrix3d x = sx();
    return Eigen::Matrix3cd(Eigen::Matrix3d::Identity() + (std::cos(theta) - 1.0) * x * x) +
           cplx(0.0, std::sin(theta)) * x;
}

} // namespace spin1

SectorBasis sector_basis(int n_sites, int total_sz) {
    if (n_sites < 1 || n_sites > default_max_sites_full)
        throw BudgetExceeded("sector_basis: n_sites outside supported range");
    if (std::abs(total_sz) > n_sites)
        throw ValidationError("sector_basis: |total_sz| cannot exceed n_sites");
    const long full = pow3(n_sites);
    SectorBasis b;
    b.n_sites = n_sites;
    b.total_sz = total_sz;
    b.lookup.assign(static_cast<std::size_t>(full), -1);
    for (long s = 0; s < full; ++s) {
        int mz = 0;
        long t = s;
        for (int i = 0; i < n_sites; ++i) {
            mz += 1 - static_cast<int>(t % 3);
            t /= 3;
        }
        if (mz == total_sz) {
            b.lookup[static_cast<std::size_t>(s)] = static_cast<int>(b.states.size());
            b.states.push_back(s);
        }
    }
    return b;
}

Eigen::VectorXcd HamiltonianOperator::apply(const Eigen::VectorXcd& v) const {
    if (v.size() != mat.rows()) throw DimensionMismatch("HamiltonianOperator::apply");
    Eigen::VectorXcd out(v.size());
    out.real() = mat * v.real();
    out.imag() = mat * v.imag();
    return out;
}

double HamiltonianOperator::hermiticity_defect() const {
    Eigen::SparseMatrix<double, Eigen::RowMajor> d = mat - Eigen::SparseMatrix<double, Eigen::RowMajor>(mat.transpose());
    double m = 0.0;
    for (int k = 0; k < d.outerSize(); ++k)
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(d, k); it; ++it)
            m = std::max(m, std::abs(it.value()));
    return m;
}

namespace {

struct BasisView {
    int n_sites;
    std::optional<int> sector;
    const SectorBasis* sec = nullptr; // set when sector
    long dim;
    long state(long row) const { return sec ? sec->states[static_cast<std::size_t>(row)] : row; }
    int row_of(long full_index) const {
        if (!sec) return static_cast<int>(full_index);
        return sec->position(full_index);
    }
};

// Shared assembly loop. XY hops all carry amplitude Jxy (the sqrt2 factors of
// S+/S- square against the 1/2 of (S+S- + S-S+)/2).
HamiltonianOperator assemble(const SpinModelParams& p, std::optional<int> sector,
                             int max_sites_full, bool with_exchange, bool with_lambda,
                             double d_abs, double h_abs, double jxy_scale) {
    p.validate();
    const int n = p.n_sites;
    SectorBasis sec;
    BasisView view;
    view.n_sites = n;
    view.sector = sector;
    if (sector) {
        sec = sector_basis(n, *sector);
        view.sec = &sec;
        view.dim = sec.dim();
    } else {
        if (n > max_sites_full)
            throw BudgetExceeded("build_hamiltonian: full-space basis beyond budget; "
                                 "use a sector or raise the limit");
        view.dim = pow3(n);
    }

    std::vector<int> ms(static_cast<std::size_t>(n));
    std::vector<long> place(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) place[static_cast<std::size_t>(i)] = pow3(n - 1 - i);

    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<std::size_t>(view.dim) * (2 + n));

    for (long row = 0; row < view.dim; ++row) {
        const long s = view.state(row);
        long t = s;
        for (int i = n - 1; i >= 0; --i) {
            ms[static_cast<std::size_t>(i)] = 1 - static_cast<int>(t % 3);
            t /= 3;
        }

        double diag = 0.0;
        for (int i = 0; i < n; ++i) {
            const double mi = ms[static_cast<std::size_t>(i)];
            diag += d_abs * mi * mi - h_abs * (i % 2 == 0 ? 1.0 : -1.0) * mi;
            if (with_exchange && with_lambda)
                for (int j = i + 1; j < n; ++j)
                    diag += jxy_scale * p.j_xy(i, j) * p.lambda * mi * ms[static_cast<std::size_t>(j)];
        }
        if (diag != 0.0) trips.emplace_back(static_cast<int>(row), static_cast<int>(row), diag);

        if (!with_exchange) continue;
        for (int i = 0; i < n; ++i) {
            for (int j = i + 1; j < n; ++j) {
                const double jij = jxy_scale * p.j_xy(i, j);
                if (jij == 0.0) continue;
                const int mi = ms[static_cast<std::size_t>(i)];
                const int mj = ms[static_cast<std::size_t>(j)];
                // S+_i S-_j / 2 and S-_i S+_j / 2; amplitude Jxy for every
                // allowed hop. Emit both directions so the matrix is symmetric
                // row by row.
                if (mi < 1 && mj > -1) {
                    const long s2 = s - place[static_cast<std::size_t>(i)] + place[static_cast<std::size_t>(j)];
                    const int col = view.row_of(s2);
                    if (col >= 0) trips.emplace_back(static_cast<int>(row), col, jij);
                }
                if (mi > -1 && mj < 1) {
                    const long s2 = s + place[static_cast<std::size_t>(i)] - place[static_cast<std::size_t>(j)];
                    const int col = view.row_of(s2);
                    if (col >= 0) trips.emplace_back(static_cast<int>(row), col, jij);
                }
            }
        }
    }

    HamiltonianOperator h;
    h.n_sites = n;
    h.sector = sector;
    h.mat.resize(view.dim, view.dim);
    h.mat.setFromTriplets(trips.begin(), trips.end());
    h.mat.makeCompressed();
    return h;
}

} // namespace

HamiltonianOperator build_hamiltonian(const SpinModelParams& params,
                                      std::optional<int> sector, int max_sites_full) {
    return assemble(params, sector, max_sites_full, true, true,
                    params.d_abs(), params.h_abs(), 1.0);
}

HamiltonianParts build_hamiltonian_parts(const SpinModelParams& params,
                                         std::optional<int> sector, int max_sites_full) {
    HamiltonianParts parts;
    parts.exchange = assemble(params, sector, max_sites_full, true, true, 0.0, 0.0, 1.0);
    SpinModelParams unit = params;
    parts.onsite = assemble(unit, sector, max_sites_full, false, false, 1.0, 0.0, 0.0);
    parts.staggered = assemble(unit, sector, max_sites_full, false, false, 0.0, -1.0, 0.0);
    return parts;
}

HamiltonianOperator staggered_field_term(int n_sites, std::optional<int> sector) {
    SpinModelParams p = SpinModelParams::uniform_nn(n_sites, 0.0, 0.0, 0.0, 1.0);
    // h_abs = -1 in assemble gives +sum (-1)^i Sz_i.
    return assemble(p, sector, default_max_sites_full, false, false, 0.0, -1.0, 0.0);
}

Eigen::Matrix3d DressedBasis::w() {
    const double r = 1.0 / std::sqrt(2.0);
    Eigen::Matrix3d m;
    m << 0.5, r, 0.5,
         -r, 0.0, r,
         0.5, -r, 0.5;
    return m;
}

Eigen::Matrix3cd DressedBasis::site_map(double theta) {
    return spin1::exp_i_theta_sx(theta) * w().cast<cplx>();
}

Eigen::VectorXcd apply_site_local(const Eigen::Matrix3cd& u, const Eigen::VectorXcd& psi,
                                  int n_sites) {
    const long dim = pow3(n_sites);
    if (psi.size() != dim) throw DimensionMismatch("apply_site_local: state size");
    Eigen::VectorXcd cur = psi;
    Eigen::VectorXcd next(dim);
    for (int site = 0; site < n_sites; ++site) {
        const long stride = pow3(n_sites - 1 - site);
        const long block = stride * 3;
        for (long base = 0; base < dim; base += block) {
            for (long off = 0; off < stride; ++off) {
                const long i0 = base + off;
                const cplx a0 = cur(i0), a1 = cur(i0 + stride), a2 = cur(i0 + 2 * stride);
                next(i0) = u(0, 0) * a0 + u(0, 1) * a1 + u(0, 2) * a2;
                next(i0 + stride) = u(1, 0) * a0 + u(1, 1) * a1 + u(1, 2) * a2;
                next(i0 + 2 * stride) = u(2, 0) * a0 + u(2, 1) * a1 + u(2, 2) * a2;
            }
        }
        cur.swap(next);
    }
    return cur;
}

Eigen::VectorXcd apply_site_local(const Eigen::Matrix3cd& u, const Eigen::VectorXcd& psi,
                                  int site, int n_sites) {
    const long dim = pow3(n_sites);
    if (psi.size() != dim) throw DimensionMismatch("apply_site_local: state size");
    if (site < 0 || site >= n_sites) throw ValidationError("apply_site_local: site out of range");
    Eigen::VectorXcd out(dim);
    const long stride = pow3(n_sites - 1 - site);
    const long block = stride * 3;
    for (long base = 0; base < dim; base += block) {
        for (long off = 0; off < stride; ++off) {
            const long i0 = base + off;
            const cplx a0 = psi(i0), a1 = psi(i0 + stride), a2 = psi(i0 + 2 * stride);
            out(i0) = u(0, 0) * a0 + u(0, 1) * a1 + u(0, 2) * a2;
            out(i0 + stride) = u(1, 0) * a0 + u(1, 1) * a1 + u(1, 2) * a2;
            out(i0 + 2 * stride) = u(2, 0) * a0 + u(2, 1) * a1 + u(2, 2) * a2;
        }
    }
    return out;
}

Eigen::VectorXcd dressed_transform(const Eigen::VectorXcd& psi, int n_sites, double theta,
                                   bool inverse) {
    const Eigen::Matrix3cd u = DressedBasis::site_map(theta);
    return apply_site_local(inverse ? Eigen::Matrix3cd(u.adjoint()) : u, psi, n_sites);
}

Eigen::MatrixXcd dressed_conjugate(const Eigen::MatrixXcd& op, int k_sites, double theta) {
    const long dim = pow3(k_sites);
    if (op.rows() != dim || op.cols() != dim)
        throw DimensionMismatch("dressed_conjugate: operator size");
    Eigen::MatrixXcd u = Eigen::MatrixXcd::Ones(1, 1);
    const Eigen::Matrix3cd s = DressedBasis::site_map(theta);
    for (int i = 0; i < k_sites; ++i) {
        Eigen::MatrixXcd next(u.rows() * 3, u.cols() * 3);
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b)
                next.block(a * u.rows(), b * u.cols(), u.rows(), u.cols()) = s(a, b) * u;
        u = std::move(next);
    }
    return u * op * u.adjoint();
}

Eigen::VectorXcd product_state(const std::vector<int>& ms) {
    const int n = static_cast<int>(ms.size());
    long idx = 0;
    for (int i = 0; i < n; ++i) {
        if (ms[static_cast<std::size_t>(i)] < -1 || ms[static_cast<std::size_t>(i)] > 1)
            throw ValidationError("product_state: m values must be in {-1,0,1}");
        idx = idx * 3 + (1 - ms[static_cast<std::size_t>(i)]);
    }
    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(pow3(n));
    psi(idx) = 1.0;
    return psi;
}

Eigen::VectorXcd embed_full(const Eigen::VectorXd& v, const SectorBasis& basis) {
    return embed_full(Eigen::VectorXcd(v.cast<cplx>()), basis);
}

Eigen::VectorXcd embed_full(const Eigen::VectorXcd& v, const SectorBasis& basis) {
    if (v.size() != basis.dim()) throw DimensionMismatch("embed_full: size mismatch");
    Eigen::VectorXcd full = Eigen::VectorXcd::Zero(pow3(basis.n_sites));
    for (long k = 0; k < basis.dim(); ++k)
        full(basis.states[static_cast<std::size_t>(k)]) = v(k);
    return full;
}

Eigen::VectorXcd project_sector(const Eigen::VectorXcd& full, const SectorBasis& basis) {
    if (full.size() != pow3(basis.n_sites)) throw DimensionMismatch("project_sector");
    Eigen::VectorXcd v(basis.dim());
    for (long k = 0; k < basis.dim(); ++k)
        v(k) = full(basis.states[static_cast<std::size_t>(k)]);
    return v;
}

} // namespace ionsim
