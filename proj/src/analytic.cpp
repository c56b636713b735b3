#include "nrchain/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

#include "nrchain/special.hpp"

namespace nrchain::analytic {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool on_critical_line(const ModelParams& p) {
    return std::abs(wrap_phase(p.theta + p.phi)) < 1e-12;
}

// Trapezoid over the periodic zone, doubling n until converged.
template <typename F>
double periodic_quadrature(F&& f, int n_min, int* n_used = nullptr) {
    int n = std::max(n_min, 64);
    auto eval = [&](int m) {
        double s = 0.0;
        for (int i = 0; i < m; ++i) s += f(-M_PI + 2.0 * M_PI * i / m);
        return s / m;
    };
    double prev = eval(n);
    for (int iter = 0; iter < 16; ++iter) {
        n *= 2;
        const double next = eval(n);
        if (std::abs(next - prev) < 1e-10) {
            if (n_used) *n_used = n;
            return next;
        }
        prev = next;
    }
    if (n_used) *n_used = n;
    return prev;
}

}  // namespace

std::vector<double> momentum_grid(int L) {
    std::vector<double> ks(L);
    for (int m = 0; m < L; ++m) ks[m] = wrap_phase(2.0 * M_PI * m / L);
    std::sort(ks.begin(), ks.end());
    return ks;
}

ModeFunctions mode_functions(const ModelParams& p, double k) {
    ModeFunctions mf;
    mf.k = k;
    mf.eps = -p.J * std::cos(k);
    mf.gamma_k = 2.0 * p.gamma * (1.0 + std::cos(k - p.theta));
    mf.kappa_k = 2.0 * p.kappa * (1.0 + std::cos(k + p.phi));
    mf.lambda_k = mf.gamma_k + mf.kappa_k;
    return mf;
}

std::pair<cplx, cplx> hopping_amplitudes(const ModelParams& p) {
    const double re = p.gamma * std::sin(p.theta) - p.kappa * std::sin(p.phi);
    const double im = p.gamma * std::cos(p.theta) + p.kappa * std::cos(p.phi);
    return {cplx(p.J + re, im), cplx(p.J - re, im)};
}

double dissipative_gap(const ModelParams& p) {
    const double g = p.gamma, k = p.kappa;
    const double root = std::sqrt(g * g + k * k + 2.0 * g * k * std::cos(p.theta + p.phi));
    const double delta = 2.0 * (g + k) - 2.0 * root;
    return std::max(delta, 0.0);  // clip rounding noise; the gap is nonnegative
}

KStar k_star(const ModelParams& p) {
    const double num = p.gamma * std::sin(p.theta) - p.kappa * std::sin(p.phi);
    const double den = p.gamma * std::cos(p.theta) + p.kappa * std::cos(p.phi);
    const double scale = p.gamma + p.kappa;
    if (scale <= 0.0) throw std::domain_error("k_star: no dissipation, spectrum is flat");
    if (std::hypot(num, den) < 1e-14 * scale) {
        // Fully degenerate direction: lambda_k is flat, pick the grid minimum.
        KStar out{0.0, true};
        double best = kInf;
        for (int i = 0; i < 4096; ++i) {
            const double k = -M_PI + 2.0 * M_PI * i / 4096;
            const double lam = mode_functions(p, k).lambda_k;
            if (lam < best) {
                best = lam;
                out.k = k;
            }
        }
        return out;
    }
    // atan2 fixes the slow direction only modulo pi; take the branch that
    // actually minimizes lambda_k so that lambda_{k*} equals the gap.
    const double psi = std::atan2(num, den);
    const double la = mode_functions(p, psi).lambda_k;
    const double lb = mode_functions(p, wrap_phase(psi + M_PI)).lambda_k;
    return {la <= lb ? psi : wrap_phase(psi + M_PI), false};
}

double nk_ss(const ModelParams& p, double k) {
    const ModeFunctions mf = mode_functions(p, k);
    const double scale = p.gamma + p.kappa;
    if (scale <= 0.0) throw std::domain_error("nk_ss: no dissipation");
    if (mf.lambda_k < 1e-14 * scale) return p.gamma / scale;  // dark-point limit
    return mf.gamma_k / mf.lambda_k;
}

double nk_t(const ModelParams& p, double k, double t, double n0) {
    const double nss = nk_ss(p, k);
    return nss + std::exp(-mode_functions(p, k).lambda_k * t) * (n0 - nss);
}

SteadyObservables steady_observables(const ModelParams& p, int n_min) {
    SteadyObservables out;
    out.density = periodic_quadrature([&](double k) { return nk_ss(p, k); }, n_min, &out.quadrature_n);
    out.current = periodic_quadrature(
        [&](double k) { return -p.J * std::sin(k) * nk_ss(p, k); }, n_min, nullptr);
    return out;
}

double current_closed_form(const ModelParams& p) {
    if (std::abs(wrap_phase(p.theta - p.phi)) > 1e-12 || std::abs(p.gamma - p.kappa) > 1e-12) {
        throw std::domain_error("current_closed_form: valid only for theta = phi, Gamma = kappa");
    }
    const double s = std::sin(p.theta);
    return -p.J * s / (2.0 * (1.0 + std::abs(s)));
}

CorrLength correlation_length(const ModelParams& p) {
    if (on_critical_line(p)) return {true, 0.0};
    const double g = p.gamma, k = p.kappa;
    const double s = std::abs(std::sin(0.5 * (p.theta + p.phi)));
    const double num = g + k + 2.0 * std::sqrt(g * k) * s;
    const double den = g + k - 2.0 * std::sqrt(g * k) * s;
    if (den <= 0.0) return {false, kInf};
    return {false, 0.5 * std::log(num / den)};
}

DensityCurrent vacuum_transient(const ModelParams& p, double t) {
    if (!on_critical_line(p)) throw std::domain_error("vacuum_transient: requires theta = -phi");
    if (t < 0.0) throw std::domain_error("vacuum_transient: t < 0");
    const double rate = p.gamma + p.kappa;
    const double nss = p.gamma / rate;
    const double x = 2.0 * rate * t;
    DensityCurrent out;
    out.density = nss * (1.0 - special::bessel_i0e(x));
    // Sign fixed by the k-integral of the mode solution (and by the large-t
    // expansion): the uniform transient current is -J (n0 - nss) e^-x I1 sin(phi)
    // with n0 = 0 here.
    out.current = p.J * nss * special::bessel_i1e(x) * std::sin(p.phi);
    return out;
}

DensityCurrent vacuum_asymptotics(const ModelParams& p, double t) {
    if (!on_critical_line(p)) throw std::domain_error("vacuum_asymptotics: requires theta = -phi");
    const double rate = p.gamma + p.kappa;
    const double nss = p.gamma / rate;
    const double inv_sqrt = 1.0 / std::sqrt(t);
    DensityCurrent out;
    out.density = nss * (1.0 - inv_sqrt / (2.0 * std::sqrt(M_PI) * std::sqrt(rate)));
    out.current = p.J * p.gamma * std::sin(p.phi) / (2.0 * std::sqrt(M_PI) * std::pow(rate, 1.5)) * inv_sqrt;
    return out;
}

DensityCurrent cdw_transient(const ModelParams& p, int site, double t) {
    if (!on_critical_line(p)) throw std::domain_error("cdw_transient: requires theta = -phi");
    if (t < 0.0) throw std::domain_error("cdw_transient: t < 0");
    const double rate = p.gamma + p.kappa;
    const double nss = p.gamma / rate;
    const double x = 2.0 * rate * t;
    const double ex = std::exp(-x);
    const double stag = (site % 2 == 0) ? 0.5 : -0.5;
    DensityCurrent out;
    out.density = nss + (0.5 - nss) * special::bessel_i0e(x) + stag * ex * special::bessel_j0(2.0 * p.J * t);
    out.current = -p.J * (0.5 - nss) * special::bessel_i1e(x) * std::sin(p.phi) -
                  p.J * stag * ex * special::bessel_j1(2.0 * p.J * t);
    return out;
}

DensityCurrent transient_series(const ModelParams& p, PbcInitial s, int site, double t) {
    const double n0 = (s == PbcInitial::vacuum) ? 0.0 : (s == PbcInitial::full ? 1.0 : 0.5);
    DensityCurrent out;
    out.density = periodic_quadrature([&](double k) { return nk_t(p, k, t, n0); }, 256);
    out.current = periodic_quadrature(
        [&](double k) { return -p.J * std::sin(k) * nk_t(p, k, t, n0); }, 256);
    if (s == PbcInitial::cdw) {
        // Staggered part: the (k, k+pi) coherences decay at 2(Gamma+kappa) and
        // rotate with eps_k - eps_{k+pi} = -2J cos k for every angle pair.
        const double ex = std::exp(-2.0 * (p.gamma + p.kappa) * t);
        const double stag = (site % 2 == 0) ? 0.5 : -0.5;
        out.density += stag * ex * special::bessel_j0(2.0 * p.J * t);
        out.current += -p.J * stag * ex * special::bessel_j1(2.0 * p.J * t);
    }
    return out;
}

KeldyshFunctions keldysh(const ModelParams& p, double k, double omega) {
    const ModeFunctions mf = mode_functions(p, k);
    KeldyshFunctions out;
    const double d = omega - mf.eps;
    const double hl = 0.5 * mf.lambda_k;
    out.g_retarded = 1.0 / cplx(d, hl);
    out.g_advanced = 1.0 / cplx(d, -hl);
    out.spectral_delta = mf.lambda_k < 1e-14 * std::max(p.gamma + p.kappa, 1e-300);
    if (out.spectral_delta) {
        out.g_keldysh = 0.0;
        out.spectral = 0.0;  // formally delta(omega - eps_k)
        out.f = 0.0;
        out.t_eff = kInf;
        return out;
    }
    const double lor = d * d + hl * hl;
    out.g_keldysh = cplx(0.0, (mf.gamma_k - mf.kappa_k) / lor);
    out.spectral = (0.5 / M_PI) * mf.lambda_k / lor;
    out.f = (mf.kappa_k - mf.gamma_k) / mf.lambda_k;

    // Effective temperature from f = tanh(w / 2T), bracketed bisection on a
    // log scale in T (the closed form w / 2 atanh(f) serves as a test oracle).
    if (out.f == 0.0 || omega == 0.0) {
        out.t_eff = kInf;
        return out;
    }
    if (std::abs(out.f) >= 1.0 - 1e-12) {
        out.t_eff = std::copysign(0.0, omega * out.f);
        return out;
    }
    const double sign = (omega * out.f > 0.0) ? 1.0 : -1.0;
    const double aw = std::abs(omega);
    const double af = std::abs(out.f);
    double lo = std::log(1e-8 * p.J), hi = std::log(1e8 * p.J);
    // tanh(aw / 2T) decreases with T; find the sign change.
    auto g = [&](double logt) { return std::tanh(0.5 * aw / std::exp(logt)) - af; };
    if (g(lo) < 0.0) {
        out.t_eff = sign * 1e-8 * p.J;  // saturated below the bracket
        return out;
    }
    if (g(hi) > 0.0) {
        out.t_eff = sign * kInf;  // f too small to resolve within the bracket
        return out;
    }
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (g(mid) > 0.0 ? lo : hi) = mid;
        if (hi - lo < 1e-10) break;
    }
    out.t_eff = sign * std::exp(0.5 * (lo + hi));
    return out;
}

}  // namespace nrchain::analytic
