#pragma once

// Joint density of the basis probabilities p_k = |<E_k|psi>|^2 under the
// Fubini-Study measure: constant pi^n on the open probability simplex.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <algorithm>

#include "qmce/dos.hpp"
#include "qmce/error.hpp"
#include "qmce/spectrum.hpp"

namespace qmce {

/// Step function: -1 for x <= 0, +1 for x > 0.
inline double upsilon(double x) noexcept { return x > 0.0 ? 1.0 : -1.0; }

/// Three-level density over (p, q) = (<Pi_1>, <Pi_2>) written with step
/// functions. Equals pi^2 inside the simplex and 0 outside; on the edges it
/// takes whatever value the step convention produces.
inline double grand_dos(double p, double q) noexcept {
    constexpr double pi2 = std::numbers::pi * std::numbers::pi;
    return 0.25 * pi2 * (upsilon(p) - upsilon(p + q - 1.0)) * (upsilon(q) - upsilon(q - 1.0));
}

/// Constant-on-simplex density for dim levels; `probs` holds the first
/// dim-1 projector expectations. Strict interior only.
inline double grand_dos_general(std::size_t dim, std::span<const double> probs) {
    if (dim < 2) throw InvalidInput("grand density: dim must be >= 2");
    if (probs.size() + 1 != dim)
        throw InvalidInput("grand density: expected " + std::to_string(dim - 1) + " probabilities, got " +
                           std::to_string(probs.size()));
    double total = 0.0;
    for (double p : probs) {
        if (!(p > 0.0)) return 0.0;
        total += p;
    }
    if (!(total < 1.0)) return 0.0;
    return std::pow(std::numbers::pi, static_cast<double>(dim - 1));
}

/// Omega(E) for a nondegenerate three-level spectrum recovered from the
/// joint density: solve p E1 + q E2 + (1-p-q) E3 = E for p and integrate
/// over q. The integrand is an indicator, so the q-integral is the length
/// of the feasible interval, with Jacobian 1/|E1 - E3|.
inline double marginalize_to_energy(const Spectrum& s, double energy) {
    if (s.dim() != 3 || !s.nondegenerate())
        throw InvalidInput("marginalize_to_energy: requires a nondegenerate three-level spectrum");
    const auto& lv = s.levels();
    const double e1 = lv[0].energy, e2 = lv[1].energy, e3 = lv[2].energy;
    if (!(energy > e1 && energy < e3)) return 0.0;
    // p(q) = (E - E3 - q (E2 - E3)) / (E1 - E3) = alpha + gamma q
    const double alpha = (energy - e3) / (e1 - e3);
    const double gamma = -(e2 - e3) / (e1 - e3);
    double qlo = 0.0, qhi = 1.0;
    // Linear constraint c0 + c1 q > 0 clips [qlo, qhi].
    const auto clip = [&](double c0, double c1) {
        if (c1 > 0.0) qlo = std::max(qlo, -c0 / c1);
        else if (c1 < 0.0) qhi = std::min(qhi, -c0 / c1);
        else if (!(c0 > 0.0)) qhi = qlo;
    };
    clip(alpha, gamma);               // p > 0
    clip(1.0 - alpha, -1.0 - gamma);  // 1 - p - q > 0
    const double length = std::max(0.0, qhi - qlo);
    return std::numbers::pi * std::numbers::pi * length / std::abs(e1 - e3);
}

}  // namespace qmce
