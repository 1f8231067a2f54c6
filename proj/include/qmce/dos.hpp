#pragma once

// Exact density of states of a finite spectrum: the Fubini-Study volume of
// the energy level set <psi|H|psi> = E on CP^n.
//
// Omega(E) = pi^n/(n-1)! * [x_0, ..., x_n] (. - E)_+^{n-1}, a B-spline of
// degree n-1 whose knots x_k are the eigenvalues repeated per multiplicity.
// It is built with the Cox-de Boor recursion carried out on polynomial
// coefficients interval by interval, so every combination step is a convex
// blend and repeated knots need no special treatment.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include "qmce/error.hpp"
#include "qmce/polynomial.hpp"
#include "qmce/spectrum.hpp"

namespace qmce {

/// Total Fubini-Study volume of CP^n, pi^n / n!.
inline double fubini_study_volume(std::size_t n) {
    double v = 1.0;
    for (std::size_t k = 1; k <= n; ++k) v *= std::numbers::pi / static_cast<double>(k);
    return v;
}

/// A distinct breakpoint of Omega together with how many eigenvalues sit there.
struct Knot {
    double energy;
    std::size_t multiplicity;
};

class PiecewiseDos {
public:
    /// Wraps an arbitrary nonnegative piecewise polynomial density (used for
    /// composite systems); `knots` lists its breakpoints.
    PiecewiseDos(PiecewisePolynomial poly, std::vector<Knot> knots)
        : poly_(std::move(poly)), knots_(std::move(knots)) {
        normalization_ = poly_.integrate(poly_.lower(), poly_.upper());
    }

    /// Spectrum-backed density: keeps the knot vector and scale so values
    /// can be evaluated by the stable pointwise recursion.
    PiecewiseDos(PiecewisePolynomial poly, std::vector<Knot> knots, std::vector<double> knot_vector, double scale)
        : PiecewiseDos(std::move(poly), std::move(knots)) {
        knot_vector_ = std::move(knot_vector);
        scale_ = scale;
    }

    const PiecewisePolynomial& polynomial() const noexcept { return poly_; }
    const std::vector<Knot>& knots() const noexcept { return knots_; }
    std::size_t degree() const noexcept { return poly_.degree(); }
    double lower() const noexcept { return poly_.lower(); }
    double upper() const noexcept { return poly_.upper(); }
    double width() const noexcept { return upper() - lower(); }
    /// Exact integral over the support.
    double normalization() const noexcept { return normalization_; }

    /// Eigenvalues repeated per multiplicity; empty for composite densities.
    const std::vector<double>& knot_vector() const noexcept { return knot_vector_; }
    /// Factor taking the normalized B-spline on knot_vector() to Omega.
    double bspline_scale() const noexcept { return scale_; }

private:
    PiecewisePolynomial poly_;
    std::vector<Knot> knots_;
    double normalization_ = 0.0;
    std::vector<double> knot_vector_;
    double scale_ = 0.0;
};

namespace detail {

/// Degree-(n-1) normalized B-spline N_{0,n-1} on the knot vector x restricted
/// to [a, next distinct knot), as a polynomial in u = E - a.
inline Polynomial bspline_piece(const std::vector<double>& x, double a) {
    const std::size_t n = x.size() - 1;
    // Degree 0: indicator of [x_i, x_{i+1}) containing the interval.
    std::vector<Polynomial> level(n);
    for (std::size_t i = 0; i < n; ++i)
        level[i] = (x[i] <= a && x[i + 1] > a) ? Polynomial({1.0}) : Polynomial({0.0});

    for (std::size_t d = 1; d < n; ++d) {
        std::vector<Polynomial> next(n - d);
        for (std::size_t i = 0; i + d < n; ++i) {
            Polynomial acc({0.0});
            if (const double den = x[i + d] - x[i]; den > 0.0) {
                auto t = Polynomial::linear((a - x[i]) / den, 1.0 / den) * level[i];
                acc += t;
            }
            if (const double den = x[i + d + 1] - x[i + 1]; den > 0.0) {
                auto t = Polynomial::linear((x[i + d + 1] - a) / den, -1.0 / den) * level[i + 1];
                acc += t;
            }
            next[i] = std::move(acc);
        }
        level = std::move(next);
    }
    return level.front();
}

/// Pointwise Cox-de Boor value of N_{0,n-1} on knot vector x. Every step is
/// a convex blend of nonnegative numbers, so the result is never negative.
inline double bspline_value(const std::vector<double>& x, double e) {
    const std::size_t n = x.size() - 1;
    if (e < x.front() || e > x.back()) return 0.0;
    std::vector<double> v(n, 0.0);
    const bool top = e == x.back();
    for (std::size_t i = 0; i < n; ++i)
        v[i] = top ? (x[i] < e && e <= x[i + 1] ? 1.0 : 0.0) : (x[i] <= e && e < x[i + 1] ? 1.0 : 0.0);
    for (std::size_t d = 1; d < n; ++d) {
        for (std::size_t i = 0; i + d < n; ++i) {
            double acc = 0.0;
            if (const double den = x[i + d] - x[i]; den > 0.0) acc += (e - x[i]) / den * v[i];
            if (const double den = x[i + d + 1] - x[i + 1]; den > 0.0) acc += (x[i + d + 1] - e) / den * v[i + 1];
            v[i] = acc;
        }
    }
    return v.front();
}

}  // namespace detail

/// Exact piecewise-polynomial Omega(E) for any spectrum with at least two
/// distinct levels.
inline PiecewiseDos build_dos(const Spectrum& s) {
    if (s.distinct() < 2)
        throw InvalidInput("density of states: spectrum has a single distinct level; the energy surface is a point");
    const auto x = s.eigenvalues();
    const std::size_t n = s.n();
    // pi^n/n! * n/(x_n - x_0): converts the partition-of-unity B-spline to a density of total mass pi^n/n!.
    const double scale = fubini_study_volume(n) * static_cast<double>(n) / (x.back() - x.front());

    std::vector<double> breaks;
    std::vector<Knot> knots;
    for (const auto& l : s.levels()) {
        breaks.push_back(l.energy);
        knots.push_back({l.energy, l.multiplicity});
    }
    std::vector<Polynomial> pieces;
    pieces.reserve(breaks.size() - 1);
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        auto p = detail::bspline_piece(x, breaks[i]);
        p *= scale;
        pieces.push_back(std::move(p));
    }
    return PiecewiseDos(PiecewisePolynomial(std::move(breaks), std::move(pieces)), std::move(knots), x, scale);
}

/// Omega(E). Zero outside the support; right-continuous at interior knots
/// (continuous there whenever n >= 2 and the knot is simple); the topmost
/// eigenvalue takes the left limit, so the two-level density is pi/(E2-E1)
/// on the closed interval.
inline double eval_dos(const PiecewiseDos& d, double energy) {
    if (!d.knot_vector().empty()) return d.bspline_scale() * detail::bspline_value(d.knot_vector(), energy);
    return d.polynomial()(energy);
}

struct OneSided {
    double left;
    double right;
};

/// Exact one-sided derivatives of Omega, read off the piece coefficients.
inline OneSided eval_dos_derivative(const PiecewiseDos& d, double energy, unsigned order) {
    if (order > d.degree())
        throw InvalidInput("density of states: derivative order " + std::to_string(order) + " exceeds piece degree " +
                           std::to_string(d.degree()));
    return {d.polynomial().derivative(energy, order, Side::left),
            d.polynomial().derivative(energy, order, Side::right)};
}

/// Literal truncated-power sum for nondegenerate spectra:
///   (-pi)^n/(n-1)! sum_k (E_k - E)^{n-1} prod_{l != k} 1{E_k > E} / (E_l - E_k).
/// Loses accuracy for clustered eigenvalues; kept as an independent cross-check.
inline double eval_eq7_direct(const Spectrum& s, double energy) {
    if (!s.nondegenerate()) throw InvalidInput("direct truncated-power sum requires a nondegenerate spectrum");
    const auto e = s.eigenvalues();
    const std::size_t n = s.n();
    double sum = 0.0;
    for (std::size_t k = 0; k < e.size(); ++k) {
        if (!(e[k] > energy)) continue;
        double term = std::pow(e[k] - energy, static_cast<double>(n - 1));
        for (std::size_t l = 0; l < e.size(); ++l)
            if (l != k) term /= (e[l] - e[k]);
        sum += term;
    }
    double pref = 1.0;
    for (std::size_t k = 1; k <= n; ++k) pref *= -std::numbers::pi;
    for (std::size_t k = 2; k < n; ++k) pref /= static_cast<double>(k);
    return pref * sum;
}

inline double integrate_dos(const PiecewiseDos& d, double a, double b) {
    if (b < a) throw InvalidInput("integrate_dos: lower limit exceeds upper limit");
    return d.polynomial().integrate(a, b);
}

/// Density of states of two independent systems sharing their total energy.
inline PiecewiseDos convolve(const PiecewiseDos& a, const PiecewiseDos& b) {
    auto poly = convolve(a.polynomial(), b.polynomial());
    std::vector<Knot> knots;
    for (double x : poly.breaks()) knots.push_back({x, 1});
    return PiecewiseDos(std::move(poly), std::move(knots));
}

/// N-fold self-convolution: the composite of N identical constituents.
inline PiecewiseDos compose(const PiecewiseDos& d, unsigned copies) {
    if (copies == 0) throw InvalidInput("compose: need at least one constituent");
    PiecewiseDos result = d;
    PiecewiseDos power = d;
    bool have = false;
    for (unsigned c = copies; c != 0; c >>= 1) {
        if (c & 1u) {
            result = have ? convolve(result, power) : power;
            have = true;
        }
        if (c > 1) power = convolve(power, power);
    }
    return result;
}

}  // namespace qmce
