#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "nrchain/model.hpp"

namespace nrchain::fock {

using Vec = Eigen::VectorXcd;

/// Compressed-row sparse operator on the 2^L occupation basis (bit j of the
/// index = occupation of site j).
struct SparseOperator {
    std::int64_t dim = 0;
    std::vector<std::int64_t> row_ptr;
    std::vector<std::int64_t> col;
    std::vector<cplx> val;

    void apply_serial(const cplx* x, cplx* y) const;
    void apply_omp(const cplx* x, cplx* y) const;
    void apply(const Vec& x, Vec& y, bool parallel = false) const;
    Eigen::MatrixXcd to_dense() const;
    std::int64_t max_row_nnz() const;
};

/// Second-quantized operator builder with Jordan-Wigner fermion signs
/// (parity of occupied sites below the acted one).
class OperatorBuilder {
  public:
    explicit OperatorBuilder(int sites);

    OperatorBuilder& add_constant(cplx a);
    OperatorBuilder& add_number(int i, cplx a);                // a * n_i
    OperatorBuilder& add_hop(int i, int j, cplx a);            // a * c+_i c_j, i != j
    OperatorBuilder& add_density_density(int i, int j, double a);  // a * n_i n_j
    OperatorBuilder& add_create(int i, cplx a);                // a * c+_i
    OperatorBuilder& add_annihilate(int i, cplx a);            // a * c_i

    SparseOperator build() const;

  private:
    struct Term {
        enum class Kind { constant, number, hop, nn, create, annihilate } kind;
        int i, j;
        cplx a;
    };
    int sites_;
    std::vector<Term> terms_;
};

struct FockOperators {
    ModelParams params;
    SparseOperator H;
    SparseOperator Hnh;  // H - (i/2) sum L+L
    std::vector<SparseOperator> jumps;
    std::vector<JumpSpec> specs;
};

/// Sparse many-body operators of the chain. Throws when L exceeds l_max
/// (memory guard). The Peierls phase dresses the hopping for gauge tests.
FockOperators build_operators(const ModelParams& p, int l_max = 20, cplx peierls = 1.0);

/// Faber expansion parameters: spectrum of Hnh/lambda enclosed in the ellipse
/// gamma0 + e^{ia} + gamma1 e^{-ia}.
struct FaberConfig {
    double lambda = 1.0;
    cplx gamma0 = 0.0;
    double gamma1 = 0.5;
    double tol = 1e-12;
    int max_order = 512;
    // Gershgorin rectangle (with margin) the ellipse was fitted around.
    double re_lo = 0, re_hi = 0, im_lo = 0, im_hi = 0;
};

/// Disc bounds plus a 10% margin; overestimates only slow convergence.
FaberConfig faber_bounds(const SparseOperator& Hnh, double margin = 1.1);

/// Workspace for repeated propagation with one operator.
class FaberPropagator {
  public:
    FaberPropagator(const SparseOperator& Hnh, FaberConfig cfg);

    /// psi <- exp(-i Hnh dt) psi, truncated once |c_n| |F_n psi| stays below
    /// tol * |psi|. Returns the order used; throws NumericalError-style
    /// std::runtime_error when max_order is hit (caller should reduce dt).
    int step(Vec& psi, double dt);

    const FaberConfig& config() const { return cfg_; }

  private:
    const SparseOperator& op_;
    FaberConfig cfg_;
    Vec p0_, p1_, p2_, acc_;
};

// ---- pure-state observables (bit-twiddled, no operator build) ----

Eigen::VectorXd density_profile(const Vec& psi, int L);
cplx hop_expectation(const Vec& psi, int L, int i, int j);  // <c+_i c_j>
Eigen::VectorXd current_profile(const Vec& psi, const ModelParams& p);
Eigen::MatrixXcd one_body_matrix(const Vec& psi, int L);
double doublon_count(const Vec& psi, const ModelParams& p);

/// Von Neumann entropy of the left `cut` sites: reshape, SVD, -sum s^2 ln s^2.
double entanglement_entropy(const Vec& psi, int L, int cut);

/// Occupation-basis product state for a bit pattern (bits[j] = site j).
Vec basis_state(const std::vector<int>& bits);

// ---- quantum-jump unraveling ----

struct TrajectoryOptions {
    double micro_dt = -1.0;        // <= 0: default 0.05 / (Gamma + kappa + J)
    double bisect_rel_tol = 1e-10; // jump-time localization, relative
    double faber_tol = 1e-12;
    int max_order = 512;
    std::vector<int> cuts;         // entanglement cuts; empty = {L/2}
    bool record_current = true;
    bool record_nk = false;
    bool record_entropy = true;
    bool record_doublon = true;
};

struct TrajectoryRecord {
    std::uint64_t seed = 0;
    std::vector<double> t;
    std::vector<std::pair<double, int>> jump_log;  // (time, jump index)
    int dark_events = 0;
    Eigen::MatrixXd density;  // n_samples x L
    Eigen::MatrixXd current;  // n_samples x n_bonds
    Eigen::MatrixXd nk;       // n_samples x L (optional)
    Eigen::MatrixXd entropy;  // n_samples x n_cuts
    Eigen::VectorXd doublon;  // n_samples
    std::vector<int> cuts;
};

/// Waiting-time algorithm: propagate the unnormalized state under
/// exp(-i Hnh t) until |psi|^2 crosses a uniform draw, bisect the crossing
/// time on the stored checkpoint, select the channel with probability
/// <L+L> / sum <L+L>, apply, renormalize, repeat. Fixed seed replays
/// bit-exactly.
TrajectoryRecord run_trajectory(const FockOperators& ops, const Vec& psi0,
                                const std::vector<double>& t_grid, std::uint64_t seed,
                                const TrajectoryOptions& opts = {});

struct EnsembleOptions : TrajectoryOptions {
    int n_trajectories = 0;
    std::uint64_t master_seed = 1;
};

struct EnsembleField {
    Eigen::MatrixXd mean;
    Eigen::MatrixXd sem;
};

struct EnsembleResult {
    std::vector<double> t;
    int n_trajectories = 0;
    EnsembleField density, current, nk, entropy, doublon;
    std::vector<int> cuts;
    long total_jumps = 0;
};

/// Mean and standard error over records on a shared grid. For the entropy
/// this is the trajectory-averaged entropy, not the entropy of the average.
EnsembleResult ensemble_average(const std::vector<TrajectoryRecord>& records);

/// Trajectories are independent work units; the loop is OpenMP-parallel and
/// the result is identical for any thread count (per-trajectory streams).
EnsembleResult run_ensemble(const FockOperators& ops, const Vec& psi0,
                            const std::vector<double>& t_grid, const EnsembleOptions& opts);

}  // namespace nrchain::fock
