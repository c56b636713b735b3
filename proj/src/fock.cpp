#include "nrchain/fock.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <functional>
#include <cmath>
#include <stdexcept>

#include "nrchain/analytic.hpp"
#include "nrchain/rng.hpp"

namespace nrchain::fock {

namespace {

inline int parity(std::uint64_t x) { return __builtin_parityll(x); }
inline std::uint64_t below(int i) { return (std::uint64_t(1) << i) - 1; }
inline bool bit(std::uint64_t n, int i) { return (n >> i) & 1; }

}  // namespace

// ---------------------------------------------------------------------------
// SparseOperator
// ---------------------------------------------------------------------------

void SparseOperator::apply_serial(const cplx* x, cplx* y) const {
    for (std::int64_t r = 0; r < dim; ++r) {
        cplx acc = 0.0;
        for (std::int64_t p = row_ptr[r]; p < row_ptr[r + 1]; ++p) acc += val[p] * x[col[p]];
        y[r] = acc;
    }
}

void SparseOperator::apply_omp(const cplx* x, cplx* y) const {
#pragma omp parallel for schedule(static)
    for (std::int64_t r = 0; r < dim; ++r) {
        cplx acc = 0.0;
        for (std::int64_t p = row_ptr[r]; p < row_ptr[r + 1]; ++p) acc += val[p] * x[col[p]];
        y[r] = acc;
    }
}

void SparseOperator::apply(const Vec& x, Vec& y, bool parallel) const {
    y.resize(dim);
    if (parallel) {
        apply_omp(x.data(), y.data());
    } else {
        apply_serial(x.data(), y.data());
    }
}

Eigen::MatrixXcd SparseOperator::to_dense() const {
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(dim, dim);
    for (std::int64_t r = 0; r < dim; ++r)
        for (std::int64_t p = row_ptr[r]; p < row_ptr[r + 1]; ++p) m(r, col[p]) += val[p];
    return m;
}

std::int64_t SparseOperator::max_row_nnz() const {
    std::int64_t best = 0;
    for (std::int64_t r = 0; r < dim; ++r) best = std::max(best, row_ptr[r + 1] - row_ptr[r]);
    return best;
}

// ---------------------------------------------------------------------------
// OperatorBuilder
// ---------------------------------------------------------------------------

OperatorBuilder::OperatorBuilder(int sites) : sites_(sites) {
    if (sites < 1 || sites > 26) throw std::invalid_argument("OperatorBuilder: bad site count");
}

OperatorBuilder& OperatorBuilder::add_constant(cplx a) {
    terms_.push_back({Term::Kind::constant, 0, 0, a});
    return *this;
}
OperatorBuilder& OperatorBuilder::add_number(int i, cplx a) {
    terms_.push_back({Term::Kind::number, i, i, a});
    return *this;
}
OperatorBuilder& OperatorBuilder::add_hop(int i, int j, cplx a) {
    if (i == j) return add_number(i, a);
    terms_.push_back({Term::Kind::hop, i, j, a});
    return *this;
}
OperatorBuilder& OperatorBuilder::add_density_density(int i, int j, double a) {
    terms_.push_back({Term::Kind::nn, i, j, a});
    return *this;
}
OperatorBuilder& OperatorBuilder::add_create(int i, cplx a) {
    terms_.push_back({Term::Kind::create, i, i, a});
    return *this;
}
OperatorBuilder& OperatorBuilder::add_annihilate(int i, cplx a) {
    terms_.push_back({Term::Kind::annihilate, i, i, a});
    return *this;
}

SparseOperator OperatorBuilder::build() const {
    const std::int64_t dim = std::int64_t(1) << sites_;
    SparseOperator op;
    op.dim = dim;
    op.row_ptr.assign(dim + 1, 0);

    // Row-major assembly: for output row m each term has at most one source
    // column, with the Jordan-Wigner sign evaluated on the source state.
    std::vector<std::pair<std::int64_t, cplx>> row;
    std::vector<std::int64_t> cols;
    std::vector<cplx> vals;
    cols.reserve(dim * 4);
    vals.reserve(dim * 4);

    for (std::int64_t m = 0; m < dim; ++m) {
        row.clear();
        cplx diag = 0.0;
        for (const Term& t : terms_) {
            switch (t.kind) {
                case Term::Kind::constant:
                    diag += t.a;
                    break;
                case Term::Kind::number:
                    if (bit(m, t.i)) diag += t.a;
                    break;
                case Term::Kind::nn:
                    if (bit(m, t.i) && bit(m, t.j)) diag += t.a;
                    break;
                case Term::Kind::hop: {
                    // c+_i c_j : source n must have j occupied, i free.
                    if (!bit(m, t.i) || bit(m, t.j)) break;
                    const std::uint64_t n = (std::uint64_t(m) ^ (std::uint64_t(1) << t.i)) |
                                            (std::uint64_t(1) << t.j);
                    double s = parity(n & below(t.j)) ? -1.0 : 1.0;
                    const std::uint64_t n1 = n ^ (std::uint64_t(1) << t.j);
                    if (parity(n1 & below(t.i))) s = -s;
                    row.emplace_back(std::int64_t(n), t.a * s);
                    break;
                }
                case Term::Kind::create: {
                    if (!bit(m, t.i)) break;
                    const std::uint64_t n = std::uint64_t(m) ^ (std::uint64_t(1) << t.i);
                    const double s = parity(n & below(t.i)) ? -1.0 : 1.0;
                    row.emplace_back(std::int64_t(n), t.a * s);
                    break;
                }
                case Term::Kind::annihilate: {
                    if (bit(m, t.i)) break;
                    const std::uint64_t n = std::uint64_t(m) | (std::uint64_t(1) << t.i);
                    const double s = parity(n & below(t.i)) ? -1.0 : 1.0;
                    row.emplace_back(std::int64_t(n), t.a * s);
                    break;
                }
            }
        }
        if (diag != 0.0) row.emplace_back(m, diag);
        std::sort(row.begin(), row.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        // merge duplicate columns
        for (size_t i = 0; i < row.size();) {
            cplx acc = row[i].second;
            size_t j = i + 1;
            while (j < row.size() && row[j].first == row[i].first) acc += row[j++].second;
            if (acc != 0.0) {
                cols.push_back(row[i].first);
                vals.push_back(acc);
            }
            i = j;
        }
        op.row_ptr[m + 1] = std::int64_t(cols.size());
    }
    op.col = std::move(cols);
    op.val = std::move(vals);
    return op;
}

// ---------------------------------------------------------------------------
// Model operators
// ---------------------------------------------------------------------------

FockOperators build_operators(const ModelParams& p, int l_max, cplx peierls) {
    if (p.L > l_max) throw std::domain_error("fock: L exceeds the configured maximum");
    FockOperators out;
    out.params = p;
    out.specs = enumerate_jumps(p);
    const int nbonds = (p.bc == Boundary::periodic) ? p.L : p.L - 1;

    OperatorBuilder hb(p.L);
    for (int j = 0; j < nbonds; ++j) {
        const int a = j, b = (j + 1) % p.L;
        hb.add_hop(a, b, -0.5 * p.J * peierls);
        hb.add_hop(b, a, -0.5 * p.J * std::conj(peierls));
        if (p.delta != 0.0) hb.add_density_density(a, b, p.delta);
    }
    out.H = hb.build();

    OperatorBuilder nb(p.L);
    for (int j = 0; j < nbonds; ++j) {
        const int a = j, b = (j + 1) % p.L;
        nb.add_hop(a, b, -0.5 * p.J * peierls);
        nb.add_hop(b, a, -0.5 * p.J * std::conj(peierls));
        if (p.delta != 0.0) nb.add_density_density(a, b, p.delta);
    }
    const cplx mihalf(0.0, -0.5);
    for (const JumpSpec& js : out.specs) {
        const int a = js.site;
        const int b = (js.site + 1) % p.L;
        OperatorBuilder jb(p.L);
        if (js.is_gain()) {
            jb.add_create(a, js.amp_a);
            if (js.is_bond()) jb.add_create(b, js.amp_b);
            // L+L = sum |a_s|^2 (1 - n_s) - sum_{s != s'} conj(a_s) a_s' c+_s' c_s
            nb.add_constant(mihalf * std::norm(js.amp_a));
            nb.add_number(a, -mihalf * std::norm(js.amp_a));
            if (js.is_bond()) {
                nb.add_constant(mihalf * std::norm(js.amp_b));
                nb.add_number(b, -mihalf * std::norm(js.amp_b));
                nb.add_hop(b, a, -mihalf * std::conj(js.amp_a) * js.amp_b);
                nb.add_hop(a, b, -mihalf * std::conj(js.amp_b) * js.amp_a);
            }
        } else {
            jb.add_annihilate(a, js.amp_a);
            if (js.is_bond()) jb.add_annihilate(b, js.amp_b);
            // L+L = sum |a_s|^2 n_s + sum_{s != s'} conj(a_s) a_s' c+_s c_s'
            nb.add_number(a, mihalf * std::norm(js.amp_a));
            if (js.is_bond()) {
                nb.add_number(b, mihalf * std::norm(js.amp_b));
                nb.add_hop(a, b, mihalf * std::conj(js.amp_a) * js.amp_b);
                nb.add_hop(b, a, mihalf * std::conj(js.amp_b) * js.amp_a);
            }
        }
        out.jumps.push_back(jb.build());
    }
    out.Hnh = nb.build();
    return out;
}

// ---------------------------------------------------------------------------
// Faber propagation
// ---------------------------------------------------------------------------

FaberConfig faber_bounds(const SparseOperator& Hnh, double margin) {
    // Bendixson: real parts of the spectrum lie in the Gershgorin range of
    // the Hermitian part, imaginary parts in that of the anti-Hermitian part.
    // Needs A^T entries, so build the transposed pattern once.
    const std::int64_t dim = Hnh.dim;
    std::vector<std::int64_t> tcount(dim + 1, 0);
    for (std::int64_t p = 0; p < std::int64_t(Hnh.col.size()); ++p) ++tcount[Hnh.col[p] + 1];
    for (std::int64_t r = 0; r < dim; ++r) tcount[r + 1] += tcount[r];
    std::vector<std::int64_t> tcol(Hnh.col.size());
    std::vector<cplx> tval(Hnh.val.size());
    {
        std::vector<std::int64_t> cursor(tcount.begin(), tcount.end() - 1);
        for (std::int64_t r = 0; r < dim; ++r) {
            for (std::int64_t p = Hnh.row_ptr[r]; p < Hnh.row_ptr[r + 1]; ++p) {
                const std::int64_t q = cursor[Hnh.col[p]]++;
                tcol[q] = r;
                tval[q] = Hnh.val[p];
            }
        }
    }
    double re_lo = 0, re_hi = 0, im_lo = 0, im_hi = 0;
    std::vector<cplx> scratch(dim);
    for (std::int64_t r = 0; r < dim; ++r) {
        cplx diag = 0.0;
        // merge row r of A with column r of A (= row r of A^T)
        for (std::int64_t p = Hnh.row_ptr[r]; p < Hnh.row_ptr[r + 1]; ++p) {
            scratch[Hnh.col[p]] += Hnh.val[p];
        }
        double rad_h = 0.0, rad_a = 0.0;
        for (std::int64_t p = tcount[r]; p < tcount[r + 1]; ++p) {
            const std::int64_t c = tcol[p];
            const cplx a_rc = scratch[c];
            const cplx a_cr = tval[p];
            scratch[c] = 0.0;
            if (c == r) {
                diag = a_rc;
                continue;
            }
            rad_h += 0.5 * std::abs(a_rc + std::conj(a_cr));
            rad_a += 0.5 * std::abs(a_rc - std::conj(a_cr));
        }
        // entries of row r with no transposed partner
        for (std::int64_t p = Hnh.row_ptr[r]; p < Hnh.row_ptr[r + 1]; ++p) {
            const std::int64_t c = Hnh.col[p];
            if (scratch[c] != 0.0) {
                if (c == r) {
                    diag = scratch[c];
                } else {
                    rad_h += 0.5 * std::abs(scratch[c]);
                    rad_a += 0.5 * std::abs(scratch[c]);
                }
                scratch[c] = 0.0;
            }
        }
        const double rl = diag.real() - rad_h, rh = diag.real() + rad_h;
        const double il = diag.imag() - rad_a, ih = diag.imag() + rad_a;
        if (r == 0) {
            re_lo = rl; re_hi = rh; im_lo = il; im_hi = ih;
        } else {
            re_lo = std::min(re_lo, rl); re_hi = std::max(re_hi, rh);
            im_lo = std::min(im_lo, il); im_hi = std::max(im_hi, ih);
        }
    }
    FaberConfig cfg;
    const double rc = 0.5 * (re_hi + re_lo), ic = 0.5 * (im_hi + im_lo);
    double a = margin * 0.5 * (re_hi - re_lo);
    double b = margin * 0.5 * (im_hi - im_lo);
    cfg.re_lo = rc - a; cfg.re_hi = rc + a;
    cfg.im_lo = ic - b; cfg.im_hi = ic + b;
    if (a < 1e-14 && b < 1e-14) {
        cfg.lambda = 1.0;
        cfg.gamma0 = cplx(rc, ic);
        cfg.gamma1 = 0.25;
        return cfg;
    }
    // Minimal-area axis-aligned ellipse through the rectangle corners has
    // semi-axes sqrt(2) a and sqrt(2) b; keep it comfortably eccentric so the
    // coefficient scaling 1/sqrt(gamma1) stays tame.
    double A = std::sqrt(2.0) * a, B = std::sqrt(2.0) * b;
    A = std::max(A, B * (1.02 / 0.98));
    B = std::max(B, A / 99.0);
    cfg.lambda = 0.5 * (A + B);
    cfg.gamma1 = (A - B) / (A + B);
    cfg.gamma0 = cplx(rc, ic) / cfg.lambda;
    return cfg;
}

namespace {

// J_n(x) / gamma1^{n/2} for n = 0..nmax by the downward recurrence of the
// scaled functions, normalized with J_0 + 2 sum J_2k = 1. Avoids the
// overflow/underflow of forming the two factors separately.
std::vector<double> scaled_jn(int nmax, double x, double sqrt_g1) {
    std::vector<double> out(nmax + 1, 0.0);
    if (x < 1e-300) {
        out[0] = 1.0;
        return out;
    }
    int start = int(std::max(double(nmax), x)) + 24 + int(14.0 * std::cbrt(x));
    if (start % 2) ++start;
    std::vector<double> g(start + 2, 0.0);
    g[start] = 1e-280;
    double norm = 0.0;
    // The sum rule contribution of even n is gamma1^{n/2} g_n.
    std::vector<double> powcache(start / 2 + 1);
    powcache[0] = 1.0;
    for (int k = 1; k <= start / 2; ++k) powcache[k] = powcache[k - 1] * (sqrt_g1 * sqrt_g1);
    for (int n = start; n >= 1; --n) {
        g[n - 1] = (2.0 * n / x) * sqrt_g1 * g[n] - (sqrt_g1 * sqrt_g1) * g[n + 1];
        if (std::abs(g[n - 1]) > 1e250) {
            for (int m = n - 1; m <= start + 1; ++m) g[m] *= 1e-250;
            norm *= 1e-250;
        }
        if ((n - 1) >= 2 && (n - 1) % 2 == 0) norm += 2.0 * powcache[(n - 1) / 2] * g[n - 1];
    }
    norm += g[0];
    const double inv = 1.0 / norm;
    for (int n = 0; n <= nmax; ++n) out[n] = g[n] * inv;
    return out;
}

}  // namespace

FaberPropagator::FaberPropagator(const SparseOperator& Hnh, FaberConfig cfg)
    : op_(Hnh), cfg_(cfg) {
    p0_.resize(op_.dim);
    p1_.resize(op_.dim);
    p2_.resize(op_.dim);
    acc_.resize(op_.dim);
}

int FaberPropagator::step(Vec& psi, double dt) {
    if (dt == 0.0) return 0;
    if (dt < 0.0) throw std::invalid_argument("faber: dt < 0");
    const double lam = cfg_.lambda;
    const double sqrt_g1 = std::sqrt(cfg_.gamma1);
    const double x = 2.0 * sqrt_g1 * lam * dt;
    const std::vector<double> gj = scaled_jn(cfg_.max_order, x, sqrt_g1);
    // c_n = e^{-i lam gamma0 dt} (-i)^n J_n(x) / gamma1^{n/2}
    const cplx pf = std::exp(cplx(lam * dt * cfg_.gamma0.imag(), -lam * dt * cfg_.gamma0.real()));
    const double norm0 = psi.norm();
    const double cutoff = cfg_.tol * norm0;

    const cplx g0 = cfg_.gamma0;
    const double inv_lam = 1.0 / lam;
    auto recurrence_apply = [&](const Vec& src, Vec& dst) {
        op_.apply_serial(src.data(), dst.data());
        dst = inv_lam * dst - g0 * src;
    };

    p0_ = psi;
    cplx in = 1.0;  // (-i)^n
    acc_ = (pf * in * gj[0]) * p0_;
    recurrence_apply(p0_, p1_);
    in *= cplx(0.0, -1.0);
    acc_ += (pf * in * gj[1]) * p1_;

    int below_count = 0;
    int n = 1;
    while (n + 1 <= cfg_.max_order) {
        ++n;
        if (n == 2) {
            recurrence_apply(p1_, p2_);
            p2_ -= (2.0 * cfg_.gamma1) * p0_;
        } else {
            recurrence_apply(p1_, p2_);
            p2_ -= cfg_.gamma1 * p0_;
        }
        in *= cplx(0.0, -1.0);
        const cplx cn = pf * in * gj[n];
        acc_ += cn * p2_;
        const double tail = std::abs(cn) * p2_.norm();
        p0_.swap(p1_);
        p1_.swap(p2_);
        if (tail < cutoff) {
            if (++below_count >= 3) break;
        } else {
            below_count = 0;
        }
    }
    if (below_count < 3) {
        throw std::runtime_error("faber: series did not converge before max_order; reduce dt");
    }
    psi = acc_;
    return n;
}

// ---------------------------------------------------------------------------
// Pure-state observables
// ---------------------------------------------------------------------------

Eigen::VectorXd density_profile(const Vec& psi, int L) {
    Eigen::VectorXd n = Eigen::VectorXd::Zero(L);
    const std::int64_t dim = psi.size();
    for (std::int64_t s = 0; s < dim; ++s) {
        const double w = std::norm(psi[s]);
        if (w == 0.0) continue;
        std::uint64_t m = std::uint64_t(s);
        while (m) {
            n[__builtin_ctzll(m)] += w;
            m &= m - 1;
        }
    }
    return n;
}

cplx hop_expectation(const Vec& psi, int L, int i, int j) {
    (void)L;
    if (i == j) {
        double acc = 0.0;
        for (std::int64_t s = 0; s < psi.size(); ++s)
            if (bit(std::uint64_t(s), i)) acc += std::norm(psi[s]);
        return acc;
    }
    cplx acc = 0.0;
    for (std::int64_t s = 0; s < psi.size(); ++s) {
        const std::uint64_t n = std::uint64_t(s);
        if (!bit(n, j) || bit(n, i)) continue;
        double sign = parity(n & below(j)) ? -1.0 : 1.0;
        const std::uint64_t n1 = n ^ (std::uint64_t(1) << j);
        if (parity(n1 & below(i))) sign = -sign;
        const std::uint64_t m = n1 | (std::uint64_t(1) << i);
        acc += std::conj(psi[std::int64_t(m)]) * sign * psi[s];
    }
    return acc;
}

Eigen::VectorXd current_profile(const Vec& psi, const ModelParams& p) {
    const int nb = (p.bc == Boundary::periodic) ? p.L : p.L - 1;
    Eigen::VectorXd out(nb);
    for (int j = 0; j < nb; ++j) {
        out[j] = -p.J * hop_expectation(psi, p.L, j, (j + 1) % p.L).imag();
    }
    return out;
}

Eigen::MatrixXcd one_body_matrix(const Vec& psi, int L) {
    Eigen::MatrixXcd G(L, L);
    for (int i = 0; i < L; ++i) {
        G(i, i) = hop_expectation(psi, L, i, i);
        for (int j = i + 1; j < L; ++j) {
            const cplx g = hop_expectation(psi, L, i, j);
            G(i, j) = g;
            G(j, i) = std::conj(g);
        }
    }
    return G;
}

double doublon_count(const Vec& psi, const ModelParams& p) {
    double acc = 0.0;
    const bool pbc = p.bc == Boundary::periodic;
    for (std::int64_t s = 0; s < psi.size(); ++s) {
        const double w = std::norm(psi[s]);
        if (w == 0.0) continue;
        const std::uint64_t n = std::uint64_t(s);
        std::uint64_t pairs = n & (n >> 1) & below(p.L - 1);
        int c = __builtin_popcountll(pairs);
        if (pbc && bit(n, p.L - 1) && bit(n, 0)) ++c;
        acc += w * c;
    }
    return acc;
}

double entanglement_entropy(const Vec& psi, int L, int cut) {
    if (cut < 1 || cut > L - 1) throw std::invalid_argument("entanglement_entropy: bad cut");
    const std::int64_t rows = std::int64_t(1) << cut;
    const std::int64_t cols = std::int64_t(1) << (L - cut);
    Eigen::MatrixXcd m(rows, cols);
    for (std::int64_t c = 0; c < cols; ++c)
        for (std::int64_t r = 0; r < rows; ++r) m(r, c) = psi[r | (c << cut)];
    Eigen::VectorXd sv;
    if (std::min(rows, cols) <= 128) {
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
        sv = svd.singularValues();
    } else {
        Eigen::BDCSVD<Eigen::MatrixXcd> svd(m);
        sv = svd.singularValues();
    }
    double s = 0.0;
    for (int i = 0; i < sv.size(); ++i) {
        const double w = sv[i] * sv[i];
        if (w > 1e-14) s -= w * std::log(w);
    }
    return s;
}

Vec basis_state(const std::vector<int>& bits) {
    const int L = int(bits.size());
    std::uint64_t idx = 0;
    for (int j = 0; j < L; ++j)
        if (bits[j]) idx |= std::uint64_t(1) << j;
    Vec psi = Vec::Zero(std::int64_t(1) << L);
    psi[std::int64_t(idx)] = 1.0;
    return psi;
}

// ---------------------------------------------------------------------------
// Quantum-jump trajectories
// ---------------------------------------------------------------------------

namespace {

struct SampleSink {
    const FockOperators& ops;
    const TrajectoryOptions& opts;
    TrajectoryRecord& rec;

    void operator()(int s, const Vec& psi_raw) const {
        const ModelParams& p = ops.params;
        Vec psi = psi_raw / psi_raw.norm();
        rec.density.row(s) = density_profile(psi, p.L);
        if (opts.record_current) rec.current.row(s) = current_profile(psi, p);
        if (opts.record_doublon) rec.doublon[s] = doublon_count(psi, p);
        if (opts.record_nk) {
            const Eigen::MatrixXcd G = one_body_matrix(psi, p.L);
            const auto ks = analytic::momentum_grid(p.L);
            Eigen::VectorXcd bk(p.L);
            for (int m = 0; m < p.L; ++m) {
                for (int j = 0; j < p.L; ++j) bk[j] = std::polar(1.0, -ks[m] * j);
                rec.nk(s, m) = (bk.adjoint() * G * bk).value().real() / p.L;
            }
        }
        if (opts.record_entropy) {
            for (size_t c = 0; c < rec.cuts.size(); ++c)
                rec.entropy(s, int(c)) = entanglement_entropy(psi, p.L, rec.cuts[c]);
        }
    }
};

}  // namespace

TrajectoryRecord run_trajectory(const FockOperators& ops, const Vec& psi0,
                                const std::vector<double>& t_grid, std::uint64_t seed,
                                const TrajectoryOptions& opts) {
    const ModelParams& p = ops.params;
    if (t_grid.empty() || t_grid.front() != 0.0) {
        throw std::invalid_argument("run_trajectory: t_grid must start at 0");
    }
    if (std::abs(psi0.norm() - 1.0) > 1e-10) {
        throw std::invalid_argument("run_trajectory: psi0 must be normalized");
    }

    TrajectoryRecord rec;
    rec.seed = seed;
    rec.t = t_grid;
    rec.cuts = opts.cuts.empty() ? std::vector<int>{p.L / 2} : opts.cuts;
    const int ns = int(t_grid.size());
    const int nb = (p.bc == Boundary::periodic) ? p.L : p.L - 1;
    rec.density.resize(ns, p.L);
    rec.current.resize(opts.record_current ? ns : 0, nb);
    rec.nk.resize(opts.record_nk ? ns : 0, p.L);
    rec.entropy.resize(opts.record_entropy ? ns : 0, int(rec.cuts.size()));
    rec.doublon.resize(opts.record_doublon ? ns : 0);

    FaberConfig cfg = faber_bounds(ops.Hnh);
    cfg.tol = opts.faber_tol;
    cfg.max_order = opts.max_order;
    FaberPropagator prop(ops.Hnh, cfg);

    const double micro = opts.micro_dt > 0.0
                             ? opts.micro_dt
                             : 0.05 / (p.gamma + p.kappa + p.J);

    SplitMix64 rng(seed);
    SampleSink sink{ops, opts, rec};

    Vec psi = psi0;
    Vec trial(psi.size()), lpsi(psi.size());
    double u = rng.uniform();
    double t_cur = 0.0;
    sink(0, psi);

    // On non-convergence the state is untouched, so the step can be split
    // and retried at a smaller dt.
    std::function<void(Vec&, double, int)> propagate_step = [&](Vec& state, double dt, int depth) {
        try {
            prop.step(state, dt);
        } catch (const std::runtime_error&) {
            if (depth >= 6) throw;
            for (int q = 0; q < 4; ++q) propagate_step(state, 0.25 * dt, depth + 1);
        }
    };

    for (int s = 1; s < ns; ++s) {
        const double t_target = t_grid[s];
        while (t_cur < t_target - 1e-15 * std::max(1.0, t_target)) {
            const double dt = std::min(micro, t_target - t_cur);
            trial = psi;
            propagate_step(trial, dt, 0);
            if (trial.squaredNorm() >= u) {
                psi.swap(trial);
                t_cur += dt;
                continue;
            }
            // Jump inside (t_cur, t_cur + dt]: bisect on the checkpoint.
            double t_lo = t_cur, t_hi = t_cur + dt;
            const double tol_abs = opts.bisect_rel_tol * std::max(1.0, t_hi);
            while (t_hi - t_lo > tol_abs) {
                const double t_mid = 0.5 * (t_lo + t_hi);
                trial = psi;
                propagate_step(trial, t_mid - t_lo, 0);
                if (trial.squaredNorm() >= u) {
                    psi.swap(trial);
                    t_lo = t_mid;
                } else {
                    t_hi = t_mid;
                }
            }
            const double t_jump = 0.5 * (t_lo + t_hi);
            if (t_jump > t_lo) propagate_step(psi, t_jump - t_lo, 0);

            // Channel selection with probability <L+L> / sum <L+L>.
            const int nj = int(ops.jumps.size());
            std::vector<double> rates(nj);
            double total = 0.0;
            for (int a = 0; a < nj; ++a) {
                ops.jumps[a].apply(psi, lpsi);
                rates[a] = lpsi.squaredNorm();
                total += rates[a];
            }
            if (total < 1e-28 * psi.squaredNorm()) {
                // Dark state: no channel can fire. Record, rescale the
                // reference norm and carry on deterministically.
                ++rec.dark_events;
                psi /= psi.norm();
                u = rng.uniform();
                t_cur = t_jump;
                continue;
            }
            const double pick = rng.uniform() * total;
            double run = 0.0;
            int chosen = nj - 1;
            for (int a = 0; a < nj; ++a) {
                run += rates[a];
                if (pick <= run) {
                    chosen = a;
                    break;
                }
            }
            ops.jumps[chosen].apply(psi, lpsi);
            psi = lpsi / lpsi.norm();
            rec.jump_log.emplace_back(t_jump, chosen);
            u = rng.uniform();
            t_cur = t_jump;
        }
        t_cur = t_target;
        sink(s, psi);
    }
    return rec;
}

EnsembleResult ensemble_average(const std::vector<TrajectoryRecord>& records) {
    if (records.size() < 2) throw std::invalid_argument("ensemble_average: need >= 2 records");
    const TrajectoryRecord& r0 = records.front();
    for (const auto& r : records) {
        if (r.t != r0.t) throw std::invalid_argument("ensemble_average: mismatched time grids");
    }
    const int n = int(records.size());
    EnsembleResult out;
    out.t = r0.t;
    out.n_trajectories = n;
    out.cuts = r0.cuts;
    for (const auto& r : records) out.total_jumps += long(r.jump_log.size());

    auto reduce = [&](auto getter, EnsembleField& f) {
        const Eigen::MatrixXd& probe = getter(r0);
        if (probe.size() == 0) return;
        Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(probe.rows(), probe.cols());
        for (const auto& r : records) mean += getter(r);
        mean /= n;
        Eigen::MatrixXd var = Eigen::MatrixXd::Zero(probe.rows(), probe.cols());
        for (const auto& r : records) {
            const Eigen::MatrixXd d = getter(r) - mean;
            var += d.cwiseProduct(d);
        }
        var /= (n - 1);
        f.mean = mean;
        f.sem = (var / n).cwiseSqrt();
    };

    reduce([](const TrajectoryRecord& r) -> const Eigen::MatrixXd& { return r.density; }, out.density);
    reduce([](const TrajectoryRecord& r) -> const Eigen::MatrixXd& { return r.current; }, out.current);
    reduce([](const TrajectoryRecord& r) -> const Eigen::MatrixXd& { return r.nk; }, out.nk);
    reduce([](const TrajectoryRecord& r) -> const Eigen::MatrixXd& { return r.entropy; }, out.entropy);

    if (r0.doublon.size() > 0) {
        const int ns = int(r0.t.size());
        Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(ns, 1), var = Eigen::MatrixXd::Zero(ns, 1);
        for (const auto& r : records) mean.col(0) += r.doublon;
        mean /= n;
        for (const auto& r : records) {
            const Eigen::VectorXd d = r.doublon - mean.col(0);
            var.col(0) += d.cwiseProduct(d);
        }
        var /= (n - 1);
        out.doublon.mean = mean;
        out.doublon.sem = (var / n).cwiseSqrt();
    }
    return out;
}

EnsembleResult run_ensemble(const FockOperators& ops, const Vec& psi0,
                            const std::vector<double>& t_grid, const EnsembleOptions& opts) {
    if (opts.n_trajectories < 2) throw std::invalid_argument("run_ensemble: n_trajectories >= 2");
    std::vector<TrajectoryRecord> records(opts.n_trajectories);
    std::exception_ptr failure = nullptr;
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < opts.n_trajectories; ++i) {
        try {
            records[i] = run_trajectory(ops, psi0, t_grid, stream_seed(opts.master_seed, i), opts);
        } catch (...) {
#pragma omp critical
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
    return ensemble_average(records);
}

}  // namespace nrchain::fock
