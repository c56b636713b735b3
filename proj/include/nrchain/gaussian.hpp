#pragma once

#include <Eigen/Dense>
#include <functional>
#include <stdexcept>
#include <vector>

#include "nrchain/model.hpp"

namespace nrchain::gaussian {

using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXd;

/// Single-particle generator of the correlation-matrix equation of motion
///   dC/dt = i (heff^dag C - C heff) + noise.
/// heff = h^T - (i/2)(M^T + Q) where h is the hopping matrix and M, Q are the
/// Gram matrices of the loss and gain jump amplitudes; noise = Q. Built
/// directly from the enumerated jump set so open boundaries (edge
/// dissipators included) come out right by construction.
struct QuadraticGenerator {
    ModelParams params;
    cplx peierls = 1.0;
    Matrix heff;
    Matrix noise;
};

/// Throws std::domain_error when delta != 0 (the closed EOM only exists for
/// the non-interacting model). The optional Peierls phase dresses the hopping
/// (test utility for the gauge map; not a solver path).
QuadraticGenerator build_generator(const ModelParams& p, cplx peierls = 1.0);

/// Right-hand side of the EOM.
Matrix rhs(const QuadraticGenerator& gen, const Matrix& C);

struct EvolveOptions {
    double dt_scale = 0.01;       // dt <= dt_scale / max(J, rates, |heff|_inf)
    double richardson_tol = 1e-8; // half-step comparison bound
    int check_stride = 1;         // Richardson check every n-th step
};

struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Fixed-step RK4 on the linear EOM. t_grid must be ascending from 0; the
/// sink receives (sample index, time, C). Hermiticity is restored after each
/// step; the half-step Richardson comparison must stay below richardson_tol
/// or a NumericalError is thrown.
void evolve(const QuadraticGenerator& gen, Matrix C, const std::vector<double>& t_grid,
            const EvolveOptions& opts,
            const std::function<void(int, double, const Matrix&)>& sink);

std::vector<Matrix> evolve_store(const QuadraticGenerator& gen, const Matrix& C0,
                                 const std::vector<double>& t_grid,
                                 const EvolveOptions& opts = {});

/// Stationary point of the EOM via the vectorized L^2 x L^2 sparse solve.
/// On the critical line (vanishing gap) the PBC steady state is the flat
/// momentum distribution Gamma/(Gamma+kappa); a singular OBC solve falls
/// back to long-time integration until |dC/dt|_F < 1e-10.
Matrix steady_state(const QuadraticGenerator& gen);

struct SiteObservables {
    Vector density;   // n_j = C_jj, length L
    Vector current;   // bond current, length L (PBC) or L-1 (OBC)
    Vector kinetic;   // h_j = 2 Re C_{j,j+1}
    Vector nk;        // momentum distribution on the wrapped uniform grid
    std::vector<double> ks;
};

SiteObservables observables(const Matrix& C, const ModelParams& p);

/// Local continuity relation of the EOM: returns per-site
///   dn_j - v+ I_j + v- I_{j-1} + (kappa cos phi + Gamma cos theta)(h_j + h_{j-1})/2 - T_j
/// with T_j = 2 Gamma - 2 (Gamma + kappa) n_j and v+- = 1 +- (Gamma sin theta
/// - kappa sin phi)/J. Missing bonds at open edges enter as zero.
Vector continuity_residual(const QuadraticGenerator& gen, const Matrix& C);

enum class FitErrorKind {
    window_too_short,
    non_monotone,
    no_decay,
    too_few_points,
    delta_correlated,
    power_law_tail,
};

struct FitError : std::runtime_error {
    FitErrorKind kind;
    FitError(FitErrorKind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
};

struct FitResult {
    enum class Kind { power_law, exponential } kind;
    double value;      // exponent alpha, decay rate, or inverse length
    double amplitude;  // prefactor at t = 1 (or r = 0)
    double residual;   // rms of the winning fit
    double window_lo;
    double window_hi;
};

/// Least squares on log|y - y_ss| against log t (power law) and against t
/// (exponential); returns whichever fits better. The window must span at
/// least one decade and the tail must decrease monotonically.
FitResult fit_power_law(const std::vector<double>& t, const std::vector<double>& y,
                        double y_ss, double window_lo, double window_hi);

/// Exponential fit of the steady-state two-point function over r in [2, L/4]
/// (PBC, translation averaged). Throws delta_correlated when correlations
/// vanish already at r = 2 and power_law_tail when a log-log fit wins.
FitResult fit_correlation_length(const Matrix& C_ss);

/// Correlation matrix of a product state with the given occupations.
Matrix product_state(const std::vector<int>& occupations);

}  // namespace nrchain::gaussian
