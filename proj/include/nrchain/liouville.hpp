#pragma once

#include <Eigen/Dense>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "nrchain/model.hpp"

namespace nrchain::liouville {

using Matrix = Eigen::MatrixXcd;

/// Dense many-body operators for brute-force density-matrix evolution.
struct LiouvilleOps {
    ModelParams params;
    Matrix H;
    std::vector<Matrix> jumps;
    std::vector<Matrix> jump_dag;
    std::vector<Matrix> jump_sq;  // L+ L, precomputed
};

/// L <= l_max (default 6) keeps the 4^L cost honest.
LiouvilleOps build_liouville(const ModelParams& p, int l_max = 6, cplx peierls = 1.0);

/// -i[H, rho] + sum_a (L_a rho L_a+ - 1/2 {L_a+ L_a, rho})
Matrix lindblad_rhs(const LiouvilleOps& ops, const Matrix& rho);

struct RhoEvolveOptions {
    double dt_scale = 0.005;     // dt <= dt_scale / max(J, |delta|, rates)
    double check_tol = 1e-9;     // half-step comparison bound
    int check_stride = 1;
};

/// Fixed-step RK4 over Eq. (2); Hermiticity and unit trace are restored each
/// step. The sink receives (sample index, time, rho).
void evolve_rho(const LiouvilleOps& ops, Matrix rho, const std::vector<double>& t_grid,
                const RhoEvolveOptions& opts,
                const std::function<void(int, double, const Matrix&)>& sink);

std::vector<Matrix> evolve_rho_store(const LiouvilleOps& ops, const Matrix& rho0,
                                     const std::vector<double>& t_grid,
                                     const RhoEvolveOptions& opts = {});

/// Long-time fixed point: evolve until |d rho / dt|_F < tol. Throws when the
/// budget runs out (near-critical parameters).
Matrix steady_rho(const LiouvilleOps& ops, double tol = 1e-10, double t_budget = 1e4);

/// Observables of a density matrix, matching the trajectory conventions.
struct RhoObservables {
    Eigen::VectorXd density;
    Eigen::VectorXd current;
    double doublon;
    Eigen::MatrixXcd one_body;
};
RhoObservables rho_observables(const Matrix& rho, const ModelParams& p);

/// Projector onto an occupation bit pattern.
Matrix rho_from_bits(const std::vector<int>& bits);

// ---------------------------------------------------------------------------
// Cross-solver comparison report
// ---------------------------------------------------------------------------

/// One named observable track: values[sample][component], optional standard
/// errors of the same shape.
struct SeriesTrack {
    Eigen::MatrixXd values;
    Eigen::MatrixXd sem;  // empty when deterministic
};

struct Series {
    std::vector<double> t;
    std::map<std::string, SeriesTrack> tracks;
};

struct CompareEntry {
    std::string name;
    double max_abs_dev = 0.0;
    double max_sigma_dev = 0.0;  // deviation in combined-SEM units (stochastic)
    int argmax_sample = -1;
    int argmax_component = -1;
    double tol;
    bool pass;
};

struct CompareReport {
    std::vector<CompareEntry> entries;
    bool pass = true;
};

/// Compare common tracks. A track passes when |a-b| <= tol everywhere, or,
/// if either side carries standard errors, when |a-b| <= tol + k_sigma * SE
/// with SE the combined standard error.
CompareReport compare(const Series& a, const Series& b,
                      const std::map<std::string, double>& tolerances, double default_tol,
                      double k_sigma = 0.0);

}  // namespace nrchain::liouville
