#pragma once

#include <complex>
#include <vector>

namespace nrchain {

using cplx = std::complex<double>;

enum class Boundary { periodic, open };

/// Physical couplings of the chain. Single source of truth for every solver
/// tier; immutable after validate().
struct ModelParams {
    int L = 2;             // site count
    double J = 1.0;        // hopping energy, sets the scale
    double delta = 0.0;    // nearest-neighbor interaction
    double gamma = 0.0;    // gain rate
    double kappa = 0.0;    // loss rate
    double theta = 0.0;    // gain phase, wrapped to (-pi, pi]
    double phi = 0.0;      // loss phase, wrapped to (-pi, pi]
    Boundary bc = Boundary::periodic;
};

/// Wrap an angle into (-pi, pi].
double wrap_phase(double x);

/// Normalize and sanity-check parameters. Throws std::invalid_argument on
/// negative rates, L < 2, J <= 0 or non-finite values.
ModelParams validate(ModelParams raw);

enum class JumpKind { bond_loss, bond_gain, edge_loss, edge_gain };

/// One jump operator. Bond terms act on (site, site+1) with amplitudes
/// (amp_a, amp_b); edge terms are single-site with amplitude amp_a.
struct JumpSpec {
    JumpKind kind;
    int site;
    cplx amp_a;
    cplx amp_b;

    bool is_gain() const { return kind == JumpKind::bond_gain || kind == JumpKind::edge_gain; }
    bool is_bond() const { return kind == JumpKind::bond_loss || kind == JumpKind::bond_gain; }
};

/// Enumerate the dissipator set. PBC: 2L bond jumps. OBC: 2(L-1) bond jumps
/// plus single-site loss and gain at both chain ends, so that every site sees
/// the same total gain and loss rate.
std::vector<JumpSpec> enumerate_jumps(const ModelParams& p);

/// Result of the local gauge map removing the gain phase. The hopping of the
/// transformed model is dressed by the Peierls factor; gauge-invariant
/// observables (densities) agree between the two parameterizations.
struct GaugeTransform {
    ModelParams params;
    cplx peierls;
};

/// Requires periodic bc and L*theta = 0 (mod 2pi) so the site-dependent phase
/// is single-valued on the ring. Throws std::domain_error otherwise.
GaugeTransform gauge_transform(const ModelParams& p);

}  // namespace nrchain
