#pragma once

// Canonical partition function Z(beta) = int Omega(E) exp(-beta E) dE.
//
// partition_closed evaluates the closed-form sum over eigenvalues; its terms
// grow like (beta * gap)^-n and cancel, so it falls back to the piecewise
// path when the cancellation would cost too many digits. partition_stable
// integrates each polynomial piece against the exponential exactly using
// positive-term incomplete-gamma series.

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include "qmce/dos.hpp"
#include "qmce/error.hpp"
#include "qmce/spectrum.hpp"

namespace qmce {

enum class CanonicalMethod { closed_form, piecewise };

struct CanonicalEval {
    double beta;
    double Z;
    double U;
    CanonicalMethod method;
};

/// Closed-form sum with its cancellation ratio sum|t_k| / |sum t_k|.
struct ClosedFormSum {
    double value;
    double condition;
};

/// sum_k exp(-beta E_k) prod_{l != k} pi / (beta (E_l - E_k)), accumulated
/// in extended precision.
inline ClosedFormSum partition_closed_sum(const Spectrum& s, double beta) {
    if (!s.nondegenerate()) throw InvalidInput("closed-form partition function requires a nondegenerate spectrum");
    if (!(beta > 0.0)) throw InvalidInput("partition function: beta must be positive");
    const auto e = s.eigenvalues();
    const long double b = beta;
    long double sum = 0.0L, abs_sum = 0.0L;
    for (std::size_t k = 0; k < e.size(); ++k) {
        // exp(-beta E_k) relative to the ground term keeps the exponentials bounded.
        long double term = std::exp(-b * (static_cast<long double>(e[k]) - e.front()));
        for (std::size_t l = 0; l < e.size(); ++l)
            if (l != k)
                term *= std::numbers::pi_v<long double> / (b * (static_cast<long double>(e[l]) - e[k]));
        sum += term;
        abs_sum += std::abs(term);
    }
    const long double ground = std::exp(-b * static_cast<long double>(e.front()));
    return {static_cast<double>(sum * ground), static_cast<double>(abs_sum / std::abs(sum))};
}

/// Relative error budget for the closed form before the piecewise path takes over.
inline constexpr double kClosedFormBudget = 1e-13;

inline double partition_stable(const PiecewiseDos& d, double beta);

inline double partition_closed(const Spectrum& s, double beta) {
    const auto r = partition_closed_sum(s, beta);
    if (std::isfinite(r.condition) && r.condition * LDBL_EPSILON <= kClosedFormBudget && r.value > 0.0) return r.value;
    return partition_stable(build_dos(s), beta);
}

/// True when partition_closed would return the closed-form value itself.
inline bool closed_form_reliable(const Spectrum& s, double beta) {
    const auto r = partition_closed_sum(s, beta);
    return std::isfinite(r.condition) && r.condition * LDBL_EPSILON <= kClosedFormBudget && r.value > 0.0;
}

namespace detail {

/// I_j = int_0^h u^j exp(-beta u) du for j = 0..jmax.
inline std::vector<double> exp_moments(double h, double beta, std::size_t jmax) {
    std::vector<double> out(jmax + 1);
    const double x = beta * h;
    for (std::size_t j = 0; j <= jmax; ++j) {
        const double s = static_cast<double>(j + 1);
        if (x < s + 20.0) {
            // h^{j+1} e^{-x} sum_m x^m / ((j+1)...(j+1+m)); all terms positive.
            double t = 1.0 / s, sum = t;
            for (int m = 1; m < 100000; ++m) {
                t *= x / (s + m);
                sum += t;
                if (t < 1e-17 * sum) break;
            }
            out[j] = std::pow(h, s) * std::exp(-x) * sum;
        } else {
            // Complete moment j!/beta^{j+1} minus the tail from h to infinity.
            double full = 1.0 / beta;
            for (std::size_t r = 1; r <= j; ++r) full *= static_cast<double>(r) / beta;
            double tail = 0.0, coef = 1.0;
            for (std::size_t m = 0; m <= j; ++m) {
                // j!/(j-m)! h^{j-m} / beta^{m+1}
                tail += coef * std::pow(h, static_cast<double>(j - m)) / std::pow(beta, static_cast<double>(m + 1));
                coef *= static_cast<double>(j - m);
            }
            out[j] = full - std::exp(-x) * tail;
        }
    }
    return out;
}

struct Moments {
    double log_z;     // ln Z
    double mean;      // <E>
    double variance;  // <E^2> - <E>^2
};

/// Canonical moments, all measured from the support's lower edge.
inline Moments canonical_moments(const PiecewiseDos& d, double beta) {
    if (!(beta > 0.0)) throw InvalidInput("canonical: beta must be positive");
    const auto& p = d.polynomial();
    const double base = d.lower();
    double m0 = 0.0, m1 = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i < p.pieces().size(); ++i) {
        const double a = p.breaks()[i];
        const double h = p.breaks()[i + 1] - a;
        const auto& poly = p.pieces()[i];
        const double shift = a - base;
        const auto I = exp_moments(h, beta, poly.size() + 1);
        double z0 = 0.0, z1 = 0.0, z2 = 0.0;
        for (std::size_t j = 0; j < poly.size(); ++j) {
            const double c = poly.coefficient(j);
            z0 += c * I[j];
            z1 += c * (I[j + 1] + shift * I[j]);
            z2 += c * (I[j + 2] + 2.0 * shift * I[j + 1] + shift * shift * I[j]);
        }
        const double w = std::exp(-beta * shift);
        m0 += w * z0;
        m1 += w * z1;
        m2 += w * z2;
    }
    const double mean = m1 / m0;
    return {std::log(m0) - beta * base, base + mean, std::max(0.0, m2 / m0 - mean * mean)};
}

}  // namespace detail

inline double partition_stable(const PiecewiseDos& d, double beta) {
    return std::exp(detail::canonical_moments(d, beta).log_z);
}

inline double log_partition(const PiecewiseDos& d, double beta) { return detail::canonical_moments(d, beta).log_z; }

/// U(beta) = -d ln Z / d beta.
inline double thermal_energy(const PiecewiseDos& d, double beta) { return detail::canonical_moments(d, beta).mean; }

/// Canonical energy variance, d^2 ln Z / d beta^2.
inline double energy_variance(const PiecewiseDos& d, double beta) {
    return detail::canonical_moments(d, beta).variance;
}

/// Mean of Omega viewed as a distribution (the beta -> 0 limit of U).
inline double infinite_temperature_energy(const PiecewiseDos& d) {
    const auto& p = d.polynomial();
    double m0 = 0.0, m1 = 0.0;
    for (std::size_t i = 0; i < p.pieces().size(); ++i) {
        const double a = p.breaks()[i], h = p.breaks()[i + 1] - a;
        const auto& poly = p.pieces()[i];
        for (std::size_t j = 0; j < poly.size(); ++j) {
            const double c = poly.coefficient(j);
            const double hj1 = std::pow(h, static_cast<double>(j + 1));
            m0 += c * hj1 / static_cast<double>(j + 1);
            m1 += c * (hj1 * h / static_cast<double>(j + 2) + a * hj1 / static_cast<double>(j + 1));
        }
    }
    return m1 / m0;
}

inline CanonicalEval canonical_eval(const PiecewiseDos& d, double beta) {
    const auto m = detail::canonical_moments(d, beta);
    return {beta, std::exp(m.log_z), m.mean, CanonicalMethod::piecewise};
}

inline CanonicalEval canonical_eval(const Spectrum& s, double beta) {
    const auto d = build_dos(s);
    const auto m = detail::canonical_moments(d, beta);
    if (s.nondegenerate() && closed_form_reliable(s, beta))
        return {beta, partition_closed_sum(s, beta).value, m.mean, CanonicalMethod::closed_form};
    return {beta, std::exp(m.log_z), m.mean, CanonicalMethod::piecewise};
}

/// Solves U(beta) = E for beta > 0. U decreases from the mean of Omega
/// (beta -> 0) to the lower edge (beta -> infinity).
inline double canonical_beta_for_energy(const PiecewiseDos& d, double energy) {
    const double top = infinite_temperature_energy(d);
    if (!(energy > d.lower() && energy < top))
        throw NoSolution("U(beta) = E has no positive solution: E must lie in (E_min, mean of Omega)");
    double lo = 1.0 / d.width(), hi = lo;
    while (thermal_energy(d, lo) < energy) {
        lo *= 0.5;
        if (lo < 1e-300) throw NoSolution("U(beta) = E: failed to bracket from below");
    }
    while (thermal_energy(d, hi) > energy) {
        hi *= 2.0;
        if (hi > 1e300) throw NoSolution("U(beta) = E: failed to bracket from above");
    }
    double a = std::log(lo), b = std::log(hi);
    for (int it = 0; it < 200 && b - a > 1e-15 * std::max(1.0, std::abs(a)); ++it) {
        const double m = 0.5 * (a + b);
        (thermal_energy(d, std::exp(m)) > energy ? a : b) = m;
    }
    double beta = std::exp(0.5 * (a + b));
    // Newton polish: dU/dbeta = -Var.
    for (int it = 0; it < 4; ++it) {
        const auto m = detail::canonical_moments(d, beta);
        if (m.variance <= 0.0) break;
        const double next = beta + (m.mean - energy) / m.variance;
        if (!(next > 0.0)) break;
        if (std::abs(thermal_energy(d, next) - energy) >= std::abs(m.mean - energy)) break;
        beta = next;
    }
    return beta;
}

struct BetaConsistency {
    double beta_canonical;
    double beta_micro;
    double gap;  // |beta_canonical - beta_micro| / |beta_micro|
};

inline BetaConsistency beta_temperature_consistency(const PiecewiseDos& d, double energy) {
    if (!(energy > d.lower() && energy < d.upper()))
        throw NoSolution("beta consistency: energy must lie strictly inside the support");
    const double slope = d.polynomial().derivative(energy, 1, Side::right);
    if (slope == 0.0) throw NoSolution("beta consistency: microcanonical beta undefined (Omega' = 0)");
    const double bm = slope / eval_dos(d, energy);
    const double bc = canonical_beta_for_energy(d, energy);
    return {bc, bm, std::abs(bc - bm) / std::abs(bm)};
}

}  // namespace qmce
