#include "nrchain/gaussian.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>

#include "nrchain/analytic.hpp"

namespace nrchain::gaussian {

namespace {

int bond_count(const ModelParams& p) {
    return p.bc == Boundary::periodic ? p.L : p.L - 1;
}

double heff_norm(const Matrix& m) {
    double best = 0.0;
    for (int i = 0; i < m.rows(); ++i) {
        double s = 0.0;
        for (int j = 0; j < m.cols(); ++j) s += std::abs(m(i, j));
        best = std::max(best, s);
    }
    return best;
}

}  // namespace

QuadraticGenerator build_generator(const ModelParams& p, cplx peierls) {
    if (p.delta != 0.0) {
        throw std::domain_error("gaussian: closed correlation-matrix EOM requires delta = 0");
    }
    const int L = p.L;
    Matrix h = Matrix::Zero(L, L);
    for (int j = 0; j < bond_count(p); ++j) {
        const int a = j, b = (j + 1) % L;
        h(a, b) += -0.5 * p.J * peierls;
        h(b, a) += -0.5 * p.J * std::conj(peierls);
    }

    // Gram matrices of the jump amplitudes: M_{jl} = sum_a conj(A_{a,j}) A_{a,l}
    // for loss rows, Q likewise for gain rows.
    Matrix M = Matrix::Zero(L, L);
    Matrix Q = Matrix::Zero(L, L);
    for (const JumpSpec& js : enumerate_jumps(p)) {
        Matrix& target = js.is_gain() ? Q : M;
        const int a = js.site;
        target(a, a) += std::norm(js.amp_a);
        if (js.is_bond()) {
            const int b = (js.site + 1) % L;
            target(a, b) += std::conj(js.amp_a) * js.amp_b;
            target(b, a) += std::conj(js.amp_b) * js.amp_a;
            target(b, b) += std::norm(js.amp_b);
        }
    }

    QuadraticGenerator gen;
    gen.params = p;
    gen.peierls = peierls;
    gen.heff = h.transpose() - cplx(0.0, 0.5) * (M.transpose() + Q);
    gen.noise = Q;
    return gen;
}

Matrix rhs(const QuadraticGenerator& gen, const Matrix& C) {
    Matrix K = cplx(0.0, 1.0) * (gen.heff.adjoint() * C);
    return K + K.adjoint() + gen.noise;
}

void evolve(const QuadraticGenerator& gen, Matrix C, const std::vector<double>& t_grid,
            const EvolveOptions& opts,
            const std::function<void(int, double, const Matrix&)>& sink) {
    if (t_grid.empty() || t_grid.front() != 0.0) {
        throw std::invalid_argument("evolve: t_grid must start at 0");
    }
    for (size_t i = 1; i < t_grid.size(); ++i) {
        if (t_grid[i] <= t_grid[i - 1]) throw std::invalid_argument("evolve: t_grid not ascending");
    }
    const ModelParams& p = gen.params;
    const double scale = std::max({p.J, p.gamma + p.kappa, heff_norm(gen.heff)});
    const double dt_max = opts.dt_scale / scale;

    const int L = p.L;
    // The generator is banded, so dC/dt = W C + (W C)^dag + G costs O(L^2)
    // through a sparse product instead of O(L^3).
    const Eigen::SparseMatrix<cplx> W =
        Matrix(cplx(0.0, 1.0) * gen.heff.adjoint()).sparseView(1.0, 1e-300);
    Matrix K(L, L), k1(L, L), k2(L, L), k3(L, L), k4(L, L), tmp(L, L);
    auto deriv = [&](const Matrix& X, Matrix& out) {
        K.noalias() = W * X;
        out = K + K.adjoint() + gen.noise;
    };
    auto rk4_step = [&](Matrix& X, double h) {
        deriv(X, k1);
        tmp = X + (0.5 * h) * k1;
        deriv(tmp, k2);
        tmp = X + (0.5 * h) * k2;
        deriv(tmp, k3);
        tmp = X + h * k3;
        deriv(tmp, k4);
        X += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        X = 0.5 * (X + X.adjoint()).eval();
    };

    sink(0, 0.0, C);
    long step_counter = 0;
    for (size_t s = 1; s < t_grid.size(); ++s) {
        const double span = t_grid[s] - t_grid[s - 1];
        const int nsub = std::max(1, int(std::ceil(span / dt_max)));
        const double h = span / nsub;
        for (int i = 0; i < nsub; ++i, ++step_counter) {
            const bool check = (step_counter % std::max(1, opts.check_stride)) == 0;
            if (check) {
                Matrix half = C;
                rk4_step(half, 0.5 * h);
                rk4_step(half, 0.5 * h);
                rk4_step(C, h);
                const double err = (C - half).cwiseAbs().maxCoeff();
                if (err > opts.richardson_tol) {
                    throw NumericalError("evolve: half-step comparison " + std::to_string(err) +
                                         " exceeds tolerance; reduce dt_scale");
                }
            } else {
                rk4_step(C, h);
            }
        }
        sink(int(s), t_grid[s], C);
    }
}

std::vector<Matrix> evolve_store(const QuadraticGenerator& gen, const Matrix& C0,
                                 const std::vector<double>& t_grid, const EvolveOptions& opts) {
    std::vector<Matrix> out(t_grid.size());
    evolve(gen, C0, t_grid, opts, [&](int i, double, const Matrix& C) { out[i] = C; });
    return out;
}

Matrix steady_state(const QuadraticGenerator& gen) {
    const ModelParams& p = gen.params;
    const int L = p.L;
    const double rate = p.gamma + p.kappa;
    if (rate <= 0.0) throw std::domain_error("steady_state: no dissipation");

    const bool critical = analytic::dissipative_gap(p) < 1e-12 * std::max(p.J, rate);
    if (critical && p.bc == Boundary::periodic) {
        // Flat momentum distribution; the dark mode keeps whatever weight the
        // initial state gave it, the vacuum-reachable fixed point is flat.
        return (p.gamma / rate) * Matrix::Identity(L, L);
    }

    // Vectorized solve: A vec(C) = -vec(noise) with
    // A = i (I (x) heff^dag - heff^T (x) I), column-major vec, index i + j*L.
    const long N = long(L) * L;
    std::vector<Eigen::Triplet<cplx>> trip;
    trip.reserve(size_t(N) * 8);
    const cplx iu(0.0, 1.0);
    for (int j = 0; j < L; ++j) {
        for (int i = 0; i < L; ++i) {
            const long row = i + long(j) * L;
            for (int ip = 0; ip < L; ++ip) {
                const cplx v = gen.heff(ip, i);
                if (v != 0.0) trip.emplace_back(row, ip + long(j) * L, iu * std::conj(v));
            }
            for (int jp = 0; jp < L; ++jp) {
                const cplx v = gen.heff(jp, j);
                if (v != 0.0) trip.emplace_back(row, i + long(jp) * L, -iu * v);
            }
        }
    }
    Eigen::SparseMatrix<cplx> A(N, N);
    A.setFromTriplets(trip.begin(), trip.end());
    A.makeCompressed();
    Eigen::VectorXcd b(N);
    for (int j = 0; j < L; ++j)
        for (int i = 0; i < L; ++i) b[i + long(j) * L] = -gen.noise(i, j);

    Eigen::SparseLU<Eigen::SparseMatrix<cplx>> lu;
    lu.compute(A);
    bool ok = lu.info() == Eigen::Success;
    Matrix C(L, L);
    if (ok) {
        Eigen::VectorXcd x = lu.solve(b);
        ok = lu.info() == Eigen::Success;
        if (ok) {
            for (int j = 0; j < L; ++j)
                for (int i = 0; i < L; ++i) C(i, j) = x[i + long(j) * L];
            C = 0.5 * (C + C.adjoint()).eval();
            ok = rhs(gen, C).norm() < 1e-10;
        }
    }
    if (ok) return C;

    // Near-singular system: integrate out the slow directions instead.
    C = (p.gamma / rate) * Matrix::Identity(L, L);
    const double chunk = 5.0 / rate;
    const double budget = 4000.0 / rate;
    EvolveOptions opts;
    opts.check_stride = 64;
    for (double t = 0.0; t < budget; t += chunk) {
        std::vector<Matrix> got = evolve_store(gen, C, {0.0, chunk}, opts);
        C = got.back();
        if (rhs(gen, C).norm() < 1e-10) return C;
    }
    throw NumericalError("steady_state: long-time fallback did not converge (near-critical parameters)");
}

SiteObservables observables(const Matrix& C, const ModelParams& p) {
    const int L = p.L;
    SiteObservables out;
    out.density.resize(L);
    for (int j = 0; j < L; ++j) out.density[j] = C(j, j).real();
    const int nb = bond_count(p);
    out.current.resize(nb);
    out.kinetic.resize(nb);
    for (int j = 0; j < nb; ++j) {
        const cplx c = C(j, (j + 1) % L);
        out.current[j] = -p.J * c.imag();
        out.kinetic[j] = 2.0 * c.real();
    }
    out.ks = analytic::momentum_grid(L);
    out.nk.resize(L);
    Eigen::VectorXcd bk(L);
    for (int m = 0; m < L; ++m) {
        const double k = out.ks[m];
        for (int j = 0; j < L; ++j) bk[j] = std::polar(1.0, -k * j);
        out.nk[m] = (bk.adjoint() * C * bk).value().real() / L;
    }
    return out;
}

Vector continuity_residual(const QuadraticGenerator& gen, const Matrix& C) {
    const ModelParams& p = gen.params;
    const int L = p.L;
    const Matrix D = rhs(gen, C);
    const SiteObservables o = observables(C, p);
    const double vp = 1.0 + (p.gamma * std::sin(p.theta) - p.kappa * std::sin(p.phi)) / p.J;
    const double vm = 1.0 - (p.gamma * std::sin(p.theta) - p.kappa * std::sin(p.phi)) / p.J;
    const double br = p.kappa * std::cos(p.phi) + p.gamma * std::cos(p.theta);
    const bool pbc = p.bc == Boundary::periodic;
    auto bond = [&](const Vector& v, int j) -> double {
        if (pbc) return v[(j + L) % L];
        return (j >= 0 && j < L - 1) ? v[j] : 0.0;
    };
    Vector res(L);
    for (int j = 0; j < L; ++j) {
        const double dn = D(j, j).real();
        const double tj = 2.0 * p.gamma - 2.0 * (p.gamma + p.kappa) * o.density[j];
        res[j] = dn - vp * bond(o.current, j) + vm * bond(o.current, j - 1) +
                 0.5 * br * (bond(o.kinetic, j) + bond(o.kinetic, j - 1)) - tj;
    }
    return res;
}

namespace {

struct LineFit {
    double slope, intercept, rms;
};

LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
    const size_t n = x.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < n; ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double det = n * sxx - sx * sx;
    LineFit f;
    f.slope = (n * sxy - sx * sy) / det;
    f.intercept = (sy * sxx - sx * sxy) / det;
    double ss = 0;
    for (size_t i = 0; i < n; ++i) {
        const double r = y[i] - (f.slope * x[i] + f.intercept);
        ss += r * r;
    }
    f.rms = std::sqrt(ss / n);
    return f;
}

}  // namespace

FitResult fit_power_law(const std::vector<double>& t, const std::vector<double>& y, double y_ss,
                        double window_lo, double window_hi) {
    if (window_hi < 10.0 * window_lo * (1.0 - 1e-12)) {
        throw FitError(FitErrorKind::window_too_short, "fit window spans less than a decade");
    }
    std::vector<double> ts, ds;
    for (size_t i = 0; i < t.size(); ++i) {
        if (t[i] < window_lo || t[i] > window_hi) continue;
        const double d = std::abs(y[i] - y_ss);
        // stop once the deviation is exhausted against the representable
        // floor of y_ss (deeply exponential tails underflow to a noise
        // plateau there; the points carry no signal)
        if (!ds.empty() &&
            d < std::max(1e-13 * ds.front(), 8.0 * 2.2e-16 * std::abs(y_ss))) {
            break;
        }
        if (d > 0.0) {
            ts.push_back(t[i]);
            ds.push_back(d);
        }
    }
    if (ts.size() < 4) throw FitError(FitErrorKind::too_few_points, "fewer than 4 points in window");
    for (size_t i = 1; i < ds.size(); ++i) {
        if (ds[i] > ds[i - 1] * (1.0 + 1e-9)) {
            throw FitError(FitErrorKind::non_monotone, "tail is not monotone in the window");
        }
    }
    if (ds.back() > ds.front() * (1.0 - 1e-6)) {
        throw FitError(FitErrorKind::no_decay, "series does not decay over the window");
    }
    std::vector<double> logt(ts.size()), logd(ts.size());
    for (size_t i = 0; i < ts.size(); ++i) {
        logt[i] = std::log(ts[i]);
        logd[i] = std::log(ds[i]);
    }
    const LineFit pow = least_squares(logt, logd);
    const LineFit expo = least_squares(ts, logd);
    FitResult out;
    out.window_lo = window_lo;
    out.window_hi = window_hi;
    if (expo.rms < pow.rms) {
        out.kind = FitResult::Kind::exponential;
        out.value = -expo.slope;
        out.amplitude = std::exp(expo.intercept);
        out.residual = expo.rms;
    } else {
        out.kind = FitResult::Kind::power_law;
        out.value = -pow.slope;
        out.amplitude = std::exp(pow.intercept);
        out.residual = pow.rms;
    }
    return out;
}

FitResult fit_correlation_length(const Matrix& C_ss) {
    const int L = int(C_ss.rows());
    const int rmax = L / 4;
    std::vector<double> rs, logc;
    for (int r = 2; r <= rmax; ++r) {
        cplx acc = 0.0;
        for (int j = 0; j < L; ++j) acc += C_ss(j, (j + r) % L);
        const double c = std::abs(acc) / L;
        if (r == 2 && c < 1e-14) {
            throw FitError(FitErrorKind::delta_correlated, "correlations vanish already at r = 2");
        }
        if (c > 1e-12) {  // points below the steady-solve noise floor carry no signal
            rs.push_back(r);
            logc.push_back(std::log(c));
        }
    }
    if (rs.size() < 4) throw FitError(FitErrorKind::too_few_points, "fewer than 4 usable distances");
    std::vector<double> logr(rs.size());
    for (size_t i = 0; i < rs.size(); ++i) logr[i] = std::log(rs[i]);
    const LineFit lin = least_squares(rs, logc);
    const LineFit pow = least_squares(logr, logc);
    if (pow.rms < lin.rms) {
        throw FitError(FitErrorKind::power_law_tail, "log-log fit wins: tail is not exponential");
    }
    FitResult out;
    out.kind = FitResult::Kind::exponential;
    out.value = -lin.slope;
    out.amplitude = std::exp(lin.intercept);
    out.residual = lin.rms;
    out.window_lo = 2;
    out.window_hi = rmax;
    return out;
}

Matrix product_state(const std::vector<int>& occ) {
    const int L = int(occ.size());
    Matrix C = Matrix::Zero(L, L);
    for (int j = 0; j < L; ++j) C(j, j) = occ[j] ? 1.0 : 0.0;
    return C;
}

}  // namespace nrchain::gaussian
