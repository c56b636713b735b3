#pragma once

#include <vector>

namespace nrchain::special {

/// Bessel functions of the first kind J_0(x), J_1(x).
double bessel_j0(double x);
double bessel_j1(double x);

/// J_0(x) .. J_nmax(x) in one pass (Miller downward recurrence, normalized by
/// the sum rule J_0 + 2*sum J_2k = 1). Handles any real x.
std::vector<double> bessel_jn_array(int nmax, double x);

/// Exponentially scaled modified Bessel functions e^{-|x|} I_0(x) and
/// e^{-|x|} I_1(x). The scaled forms are what the transient closed forms
/// need; they stay bounded for arbitrarily large arguments.
double bessel_i0e(double x);
double bessel_i1e(double x);

}  // namespace nrchain::special
