// Micro-benchmark comparing the serial reference kernels against their
// OpenMP variants: sparse matvec, trajectory ensembles, momentum DFT.

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <vector>

#include "nrchain/analytic.hpp"
#include "nrchain/fock.hpp"
#include "nrchain/gaussian.hpp"

using namespace nrchain;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

ModelParams bench_params(int L, Boundary bc) {
    ModelParams p;
    p.L = L;
    p.J = 1.0;
    p.gamma = 0.1;
    p.kappa = 0.1;
    p.theta = M_PI / 2;
    p.phi = M_PI / 2;
    p.delta = 2.0;
    p.bc = bc;
    return validate(p);
}

void bench_matvec(int L, int reps) {
    const auto ops = fock::build_operators(bench_params(L, Boundary::open));
    const std::int64_t dim = ops.Hnh.dim;
    fock::Vec x = fock::Vec::Random(dim);
    x /= x.norm();
    fock::Vec y(dim), z(dim);

    auto t0 = Clock::now();
    for (int r = 0; r < reps; ++r) ops.Hnh.apply_serial(x.data(), y.data());
    const double ts = seconds_since(t0);

    t0 = Clock::now();
    for (int r = 0; r < reps; ++r) ops.Hnh.apply_omp(x.data(), z.data());
    const double tp = seconds_since(t0);

    const double dev = (y - z).cwiseAbs().maxCoeff();
    std::printf("matvec  L=%2d dim=%8lld  serial %8.3f ms  omp %8.3f ms  speedup %5.2fx  maxdev %.1e\n",
                L, (long long)dim, 1e3 * ts / reps, 1e3 * tp / reps, ts / tp, dev);
}

void bench_ensemble(int L, int ntraj) {
    const auto ops = fock::build_operators(bench_params(L, Boundary::open));
    std::vector<int> bits(L, 0);
    for (int j = 0; j < L; j += 2) bits[j] = 1;
    const fock::Vec psi0 = fock::basis_state(bits);
    const std::vector<double> grid = {0.0, 1.0, 2.0, 3.0, 4.0};

    fock::EnsembleOptions opts;
    opts.n_trajectories = ntraj;
    opts.master_seed = 7;
    opts.record_entropy = false;

    const int saved = omp_get_max_threads();
    omp_set_num_threads(1);
    auto t0 = Clock::now();
    const auto serial = fock::run_ensemble(ops, psi0, grid, opts);
    const double ts = seconds_since(t0);
    omp_set_num_threads(saved);
    t0 = Clock::now();
    const auto parallel = fock::run_ensemble(ops, psi0, grid, opts);
    const double tp = seconds_since(t0);

    const double dev = (serial.density.mean - parallel.density.mean).cwiseAbs().maxCoeff();
    std::printf("ensemble L=%2d n=%4d      1 thread %7.2f s  %d threads %7.2f s  speedup %5.2fx  maxdev %.1e\n",
                L, ntraj, ts, saved, tp, ts / tp, dev);
}

void bench_nk(int L, int reps) {
    ModelParams p = bench_params(L, Boundary::periodic);
    p.delta = 0.0;
    const auto gen = gaussian::build_generator(p);
    const gaussian::Matrix C = gaussian::steady_state(gen);
    const auto ks = analytic::momentum_grid(L);

    Eigen::VectorXd nk_serial(L), nk_omp(L);
    auto t0 = Clock::now();
    for (int r = 0; r < reps; ++r) {
        for (int m = 0; m < L; ++m) {
            Eigen::VectorXcd bk(L);
            for (int j = 0; j < L; ++j) bk[j] = std::polar(1.0, -ks[m] * j);
            nk_serial[m] = (bk.adjoint() * C * bk).value().real() / L;
        }
    }
    const double ts = seconds_since(t0);

    t0 = Clock::now();
    for (int r = 0; r < reps; ++r) {
#pragma omp parallel for schedule(static)
        for (int m = 0; m < L; ++m) {
            Eigen::VectorXcd bk(L);
            for (int j = 0; j < L; ++j) bk[j] = std::polar(1.0, -ks[m] * j);
            nk_omp[m] = (bk.adjoint() * C * bk).value().real() / L;
        }
    }
    const double tp = seconds_since(t0);
    const double dev = (nk_serial - nk_omp).cwiseAbs().maxCoeff();
    std::printf("nk dft  L=%4d            serial %8.3f ms  omp %8.3f ms  speedup %5.2fx  maxdev %.1e\n",
                L, 1e3 * ts / reps, 1e3 * tp / reps, ts / tp, dev);
}

}  // namespace

int main() {
    std::printf("threads available: %d\n", omp_get_max_threads());
    bench_matvec(10, 200);
    bench_matvec(14, 20);
    bench_nk(128, 50);
    bench_nk(256, 10);
    bench_ensemble(8, 64);
    return 0;
}
