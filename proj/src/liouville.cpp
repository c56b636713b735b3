#include "nrchain/liouville.hpp"

#include <cmath>
#include <stdexcept>

#include "nrchain/fock.hpp"

namespace nrchain::liouville {

LiouvilleOps build_liouville(const ModelParams& p, int l_max, cplx peierls) {
    if (p.L > l_max) throw std::domain_error("liouville: L exceeds the oracle maximum");
    fock::FockOperators sp = fock::build_operators(p, l_max, peierls);
    LiouvilleOps ops;
    ops.params = p;
    ops.H = sp.H.to_dense();
    for (const auto& j : sp.jumps) {
        ops.jumps.push_back(j.to_dense());
        ops.jump_dag.push_back(ops.jumps.back().adjoint());
        ops.jump_sq.push_back(ops.jump_dag.back() * ops.jumps.back());
    }
    return ops;
}

Matrix lindblad_rhs(const LiouvilleOps& ops, const Matrix& rho) {
    const cplx iu(0.0, 1.0);
    Matrix out = -iu * (ops.H * rho - rho * ops.H);
    for (size_t a = 0; a < ops.jumps.size(); ++a) {
        out += ops.jumps[a] * rho * ops.jump_dag[a];
        out -= 0.5 * (ops.jump_sq[a] * rho + rho * ops.jump_sq[a]);
    }
    return out;
}

void evolve_rho(const LiouvilleOps& ops, Matrix rho, const std::vector<double>& t_grid,
                const RhoEvolveOptions& opts,
                const std::function<void(int, double, const Matrix&)>& sink) {
    if (t_grid.empty() || t_grid.front() != 0.0) {
        throw std::invalid_argument("evolve_rho: t_grid must start at 0");
    }
    const ModelParams& p = ops.params;
    const double scale = std::max({p.J, std::abs(p.delta), p.gamma + p.kappa});
    const double dt_max = opts.dt_scale / scale;

    Matrix k1, k2, k3, k4, tmp;
    auto rk4_step = [&](Matrix& X, double h) {
        k1 = lindblad_rhs(ops, X);
        tmp = X + (0.5 * h) * k1;
        k2 = lindblad_rhs(ops, tmp);
        tmp = X + (0.5 * h) * k2;
        k3 = lindblad_rhs(ops, tmp);
        tmp = X + h * k3;
        k4 = lindblad_rhs(ops, tmp);
        X += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        X = 0.5 * (X + X.adjoint()).eval();
        X /= X.trace().real();
    };

    sink(0, 0.0, rho);
    long counter = 0;
    for (size_t s = 1; s < t_grid.size(); ++s) {
        const double span = t_grid[s] - t_grid[s - 1];
        const int nsub = std::max(1, int(std::ceil(span / dt_max)));
        const double h = span / nsub;
        for (int i = 0; i < nsub; ++i, ++counter) {
            if (counter % std::max(1, opts.check_stride) == 0) {
                Matrix half = rho;
                rk4_step(half, 0.5 * h);
                rk4_step(half, 0.5 * h);
                rk4_step(rho, h);
                const double err = (rho - half).cwiseAbs().maxCoeff();
                if (err > opts.check_tol) {
                    throw std::runtime_error("evolve_rho: half-step check failed; reduce dt_scale");
                }
            } else {
                rk4_step(rho, h);
            }
        }
        sink(int(s), t_grid[s], rho);
    }
}

std::vector<Matrix> evolve_rho_store(const LiouvilleOps& ops, const Matrix& rho0,
                                     const std::vector<double>& t_grid,
                                     const RhoEvolveOptions& opts) {
    std::vector<Matrix> out(t_grid.size());
    evolve_rho(ops, rho0, t_grid, opts, [&](int i, double, const Matrix& r) { out[i] = r; });
    return out;
}

Matrix steady_rho(const LiouvilleOps& ops, double tol, double t_budget) {
    const ModelParams& p = ops.params;
    const long dim = ops.H.rows();
    Matrix rho = Matrix::Identity(dim, dim) / double(dim);
    const double chunk = 2.0 / std::max(1e-3, p.gamma + p.kappa);
    RhoEvolveOptions opts;
    opts.check_stride = 32;
    for (double t = 0.0; t < t_budget; t += chunk) {
        rho = evolve_rho_store(ops, rho, {0.0, chunk}, opts).back();
        if (lindblad_rhs(ops, rho).norm() < tol) return rho;
    }
    throw std::runtime_error("steady_rho: no convergence within the time budget");
}

RhoObservables rho_observables(const Matrix& rho, const ModelParams& p) {
    const int L = p.L;
    RhoObservables out;
    out.one_body.resize(L, L);
    // <c+_i c_j> = Tr(rho c+_i c_j); reuse the sparse builders for the
    // elementary operators (dim <= 64, dense products are cheap).
    for (int i = 0; i < L; ++i) {
        for (int j = 0; j < L; ++j) {
            fock::OperatorBuilder b(L);
            b.add_hop(i, j, 1.0);
            out.one_body(i, j) = (b.build().to_dense() * rho).trace();
        }
    }
    out.density.resize(L);
    for (int j = 0; j < L; ++j) out.density[j] = out.one_body(j, j).real();
    const int nb = (p.bc == Boundary::periodic) ? L : L - 1;
    out.current.resize(nb);
    for (int j = 0; j < nb; ++j) out.current[j] = -p.J * out.one_body(j, (j + 1) % L).imag();
    out.doublon = 0.0;
    for (int j = 0; j < nb; ++j) {
        fock::OperatorBuilder b(L);
        b.add_density_density(j, (j + 1) % L, 1.0);
        out.doublon += (b.build().to_dense() * rho).trace().real();
    }
    return out;
}

Matrix rho_from_bits(const std::vector<int>& bits) {
    const Eigen::VectorXcd psi = fock::basis_state(bits);
    return psi * psi.adjoint();
}

CompareReport compare(const Series& a, const Series& b,
                      const std::map<std::string, double>& tolerances, double default_tol,
                      double k_sigma) {
    if (a.t.size() != b.t.size()) throw std::invalid_argument("compare: time grids differ");
    for (size_t i = 0; i < a.t.size(); ++i) {
        if (std::abs(a.t[i] - b.t[i]) > 1e-12 * std::max(1.0, std::abs(a.t[i]))) {
            throw std::invalid_argument("compare: time grids differ");
        }
    }
    CompareReport rep;
    for (const auto& [name, ta] : a.tracks) {
        auto itb = b.tracks.find(name);
        if (itb == b.tracks.end()) continue;
        const SeriesTrack& tb = itb->second;
        if (ta.values.rows() != tb.values.rows() || ta.values.cols() != tb.values.cols()) {
            throw std::invalid_argument("compare: shape mismatch for track " + name);
        }
        CompareEntry e;
        e.name = name;
        auto tol_it = tolerances.find(name);
        e.tol = tol_it == tolerances.end() ? default_tol : tol_it->second;
        e.pass = true;
        for (int r = 0; r < ta.values.rows(); ++r) {
            for (int c = 0; c < ta.values.cols(); ++c) {
                const double dev = std::abs(ta.values(r, c) - tb.values(r, c));
                double se = 0.0;
                if (ta.sem.size() > 0) se += ta.sem(r, c) * ta.sem(r, c);
                if (tb.sem.size() > 0) se += tb.sem(r, c) * tb.sem(r, c);
                se = std::sqrt(se);
                const double allowed = e.tol + k_sigma * se;
                if (dev > e.max_abs_dev) {
                    e.max_abs_dev = dev;
                    e.argmax_sample = r;
                    e.argmax_component = c;
                }
                if (se > 0.0) e.max_sigma_dev = std::max(e.max_sigma_dev, dev / se);
                if (dev > allowed) e.pass = false;
            }
        }
        rep.entries.push_back(e);
        rep.pass = rep.pass && e.pass;
    }
    return rep;
}

}  // namespace nrchain::liouville
