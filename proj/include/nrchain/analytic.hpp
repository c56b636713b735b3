#pragma once

#include <complex>
#include <utility>
#include <vector>

#include "nrchain/model.hpp"

namespace nrchain::analytic {

/// Single-mode rates of the periodic non-interacting chain.
struct ModeFunctions {
    double k;         // momentum in (-pi, pi]
    double eps;       // dispersion -J cos k
    double gamma_k;   // pump rate 2*Gamma*(1 + cos(k - theta))
    double kappa_k;   // loss rate 2*kappa*(1 + cos(k + phi))
    double lambda_k;  // decay rate gamma_k + kappa_k
};

ModeFunctions mode_functions(const ModelParams& p, double k);

/// Effective hopping amplitudes J+- of the single-particle generator.
std::pair<cplx, cplx> hopping_amplitudes(const ModelParams& p);

/// Smallest decay rate over the Brillouin zone; zero exactly on theta = -phi.
double dissipative_gap(const ModelParams& p);

struct KStar {
    double k;         // location of the slowest mode, lambda_{k*} = gap
    bool degenerate;  // flat spectrum, k returned from grid minimization
};
KStar k_star(const ModelParams& p);

/// Steady-state occupation gamma_k / lambda_k; on the dark point the limit
/// along theta = -phi, Gamma/(Gamma+kappa), is returned.
double nk_ss(const ModelParams& p, double k);

/// Relaxation of a single mode from occupation n0.
double nk_t(const ModelParams& p, double k, double t, double n0);

struct SteadyObservables {
    double density;
    double current;
    int quadrature_n;  // grid size at which the doubling control converged
};

/// Brillouin-zone averages of the steady state: density = int dk/2pi n_k,
/// current = -J int dk/2pi sin(k) n_k. Trapezoidal quadrature on the uniform
/// grid (spectrally accurate for these periodic integrands), doubled until
/// successive refinements agree below 1e-10.
SteadyObservables steady_observables(const ModelParams& p, int n_min = 64);

/// Closed-form steady current on the line theta = phi with Gamma = kappa.
/// Evaluated in the pole-free form -J sin(theta) / (2 (1 + |sin(theta)|)),
/// algebraically identical to J sin(theta)(|sin(theta)|-1)/(2 cos^2 theta)
/// and finite at theta = +-pi/2 where it reaches -+J/4.
double current_closed_form(const ModelParams& p);

struct CorrLength {
    bool delta_correlated;  // theta = -phi: C(r) = delta_{r,0}, no length scale
    double xi_inv;          // inverse correlation length; +inf when the
                            // denominator of the log closes
};
CorrLength correlation_length(const ModelParams& p);

struct DensityCurrent {
    double density;
    double current;
};

/// Closed-form transients on the critical line theta = -phi (modified /
/// ordinary Bessel functions), starting from the vacuum.
DensityCurrent vacuum_transient(const ModelParams& p, double t);

/// Leading large-t behavior of the vacuum transient (1/sqrt(t) approach).
DensityCurrent vacuum_asymptotics(const ModelParams& p, double t);

/// Closed-form site-resolved transient from the charge-density wave
/// |1010...> on theta = -phi.
DensityCurrent cdw_transient(const ModelParams& p, int site, double t);

/// General-angle PBC transient by quadrature over the mode solutions.
/// Supported initial states: uniform momentum occupation n0 (vacuum 0,
/// full 1, cdw 1/2 plus its staggered part, which is handled in closed form
/// because lambda_k + lambda_{k+pi} = 4(Gamma+kappa) for every angle).
enum class PbcInitial { vacuum, full, cdw };
DensityCurrent transient_series(const ModelParams& p, PbcInitial s, int site, double t);

struct KeldyshFunctions {
    cplx g_retarded;
    cplx g_advanced;
    cplx g_keldysh;
    double spectral;        // A(k,w), Lorentzian of width lambda_k
    bool spectral_delta;    // lambda_k = 0: sharp quasiparticle at w = eps_k
    double f;               // distribution (kappa_k - gamma_k) / lambda_k
    double t_eff;           // solves f = tanh(w / 2 T); +inf when f = 0,
                            // signed zero when |f| saturates
};

KeldyshFunctions keldysh(const ModelParams& p, double k, double omega);

/// Uniform momentum grid k_m = 2 pi m / L wrapped to (-pi, pi], ascending.
std::vector<double> momentum_grid(int L);

}  // namespace nrchain::analytic
