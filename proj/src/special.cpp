#include "nrchain/special.hpp"

#include <cmath>
#include <cstdlib>
#include <stdexcept>

namespace nrchain::special {

namespace {

// Power series around 0; all terms positive, no cancellation.
double i0_series(double x) {
    const double q = 0.25 * x * x;
    double term = 1.0, sum = 1.0;
    for (int m = 1; m < 200; ++m) {
        term *= q / (double(m) * double(m));
        sum += term;
        if (term < 1e-18 * sum) break;
    }
    return sum;
}

double i1_series(double x) {
    const double q = 0.25 * x * x;
    double term = 0.5 * x, sum = term;
    for (int m = 1; m < 200; ++m) {
        term *= q / (double(m) * double(m + 1));
        sum += term;
        if (term < 1e-18 * sum) break;
    }
    return sum;
}

// Asymptotic series for e^{-x} I_nu(x), truncated at the smallest term.
double ie_asymptotic(int nu, double x) {
    const double mu = 4.0 * nu * nu;
    double term = 1.0, sum = 1.0;
    double prev = std::abs(term);
    for (int k = 1; k < 40; ++k) {
        const double odd = 2.0 * k - 1.0;
        term *= (odd * odd - mu) / (8.0 * k * x);
        if (std::abs(term) > prev) break;  // series started diverging
        sum += term;
        prev = std::abs(term);
        if (std::abs(term) < 1e-17 * std::abs(sum)) break;
    }
    return sum / std::sqrt(2.0 * M_PI * x);
}

}  // namespace

double bessel_i0e(double x) {
    x = std::abs(x);
    if (x < 20.0) return i0_series(x) * std::exp(-x);
    return ie_asymptotic(0, x);
}

double bessel_i1e(double x) {
    const double ax = std::abs(x);
    const double sign = (x < 0.0) ? -1.0 : 1.0;
    if (ax < 20.0) return sign * i1_series(ax) * std::exp(-ax);
    return sign * ie_asymptotic(1, ax);
}

std::vector<double> bessel_jn_array(int nmax, double x) {
    if (nmax < 0) throw std::invalid_argument("bessel_jn_array: nmax < 0");
    std::vector<double> out(nmax + 1, 0.0);
    const double ax = std::abs(x);
    if (ax < 1e-300) {
        out[0] = 1.0;
        return out;
    }
    // Start the downward recurrence well above both nmax and the turning
    // point n ~ x; the transition region is O(x^{1/3}) wide.
    int start = int(std::max(double(nmax), ax)) + 24 + int(14.0 * std::cbrt(ax));
    if (start % 2) ++start;

    std::vector<double> j(start + 2, 0.0);
    j[start + 1] = 0.0;
    j[start] = 1e-300;
    double norm = 0.0;  // accumulates J_0 + 2*sum_{k>=1} J_{2k}
    for (int n = start; n >= 1; --n) {
        j[n - 1] = (2.0 * n / ax) * j[n] - j[n + 1];
        if (std::abs(j[n - 1]) > 1e250) {  // rescale to avoid overflow
            const double s = 1e-250;
            for (int m = n - 1; m <= start + 1; ++m) j[m] *= s;
            norm *= s;
        }
        if ((n - 1) >= 2 && (n - 1) % 2 == 0) norm += 2.0 * j[n - 1];
    }
    norm += j[0];
    const double inv = 1.0 / norm;
    for (int n = 0; n <= nmax; ++n) out[n] = j[n] * inv;
    if (x < 0.0) {
        for (int n = 1; n <= nmax; n += 2) out[n] = -out[n];
    }
    return out;
}

double bessel_j0(double x) { return bessel_jn_array(0, x)[0]; }

double bessel_j1(double x) { return bessel_jn_array(1, x)[1]; }

}  // namespace nrchain::special
