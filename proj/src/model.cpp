#include "nrchain/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace nrchain {

double wrap_phase(double x) {
    double w = std::fmod(x + M_PI, 2.0 * M_PI);
    if (w <= 0.0) w += 2.0 * M_PI;
    return w - M_PI;
}

ModelParams validate(ModelParams p) {
    auto finite = [](double v) { return std::isfinite(v); };
    if (!finite(p.J) || !finite(p.delta) || !finite(p.gamma) || !finite(p.kappa) ||
        !finite(p.theta) || !finite(p.phi)) {
        throw std::invalid_argument("model: non-finite parameter");
    }
    if (p.L < 2) throw std::invalid_argument("model: L must be >= 2");
    if (p.J <= 0.0) throw std::invalid_argument("model: J must be > 0");
    if (p.gamma < 0.0) throw std::invalid_argument("model: gain rate must be >= 0");
    if (p.kappa < 0.0) throw std::invalid_argument("model: loss rate must be >= 0");
    p.theta = wrap_phase(p.theta);
    p.phi = wrap_phase(p.phi);
    return p;
}

std::vector<JumpSpec> enumerate_jumps(const ModelParams& p) {
    std::vector<JumpSpec> jumps;
    const double sk = std::sqrt(p.kappa);
    const double sg = std::sqrt(p.gamma);
    const cplx eip = std::polar(1.0, p.phi);
    const cplx eit = std::polar(1.0, p.theta);
    const int nbonds = (p.bc == Boundary::periodic) ? p.L : p.L - 1;
    for (int j = 0; j < nbonds; ++j) {
        jumps.push_back({JumpKind::bond_loss, j, sk, sk * eip});
    }
    for (int j = 0; j < nbonds; ++j) {
        jumps.push_back({JumpKind::bond_gain, j, sg, sg * eit});
    }
    if (p.bc == Boundary::open) {
        jumps.push_back({JumpKind::edge_loss, 0, sk, 0.0});
        jumps.push_back({JumpKind::edge_loss, p.L - 1, sk, 0.0});
        jumps.push_back({JumpKind::edge_gain, 0, sg, 0.0});
        jumps.push_back({JumpKind::edge_gain, p.L - 1, sg, 0.0});
    }
    return jumps;
}

GaugeTransform gauge_transform(const ModelParams& p) {
    if (p.bc != Boundary::periodic) {
        throw std::domain_error("gauge_transform: requires periodic boundary conditions");
    }
    // Single-valuedness on the ring: L*theta must be a multiple of 2pi.
    const double winding = p.L * p.theta / (2.0 * M_PI);
    if (std::abs(winding - std::round(winding)) > 1e-9) {
        throw std::domain_error("gauge_transform: L*theta is not a multiple of 2pi");
    }
    GaugeTransform out;
    out.params = p;
    out.params.theta = 0.0;
    out.params.phi = wrap_phase(p.theta + p.phi);
    out.peierls = std::polar(1.0, p.theta);
    return out;
}

}  // namespace nrchain
