#pragma once

// Microcanonical thermodynamics of a piecewise-polynomial density of states:
//   S = k_B ln Omega,  k_B T = Omega / Omega',  C = k_B Omega'^2 / (Omega'^2 - Omega Omega'').
// Functions work in k_B = 1 units; ThermoCurve applies a display scale.
//
// Omega is log-concave (it is a linear image of the uniform measure on the
// probability simplex), so beta(E) = Omega'/Omega is nonincreasing on the
// interior of the support. All root finding below leans on that.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "qmce/dos.hpp"
#include "qmce/error.hpp"

namespace qmce {

inline constexpr double kInfiniteTemperature = std::numeric_limits<double>::infinity();
inline constexpr double kDivergentHeat = std::numeric_limits<double>::infinity();

/// Microcanonical inverse temperature Omega'/Omega from one side of E.
inline double inverse_temperature(const PiecewiseDos& d, double energy, Side side = Side::right) {
    const auto& p = d.polynomial();
    return p.derivative(energy, 1, side) / p.derivative(energy, 0, side);
}

/// k_B T = Omega/Omega'. Returns kInfiniteTemperature where Omega' vanishes.
inline double temperature(const PiecewiseDos& d, double energy, Side side = Side::right) {
    if (!(energy > d.lower() && energy < d.upper()))
        throw InvalidInput("temperature: energy must lie strictly inside the support");
    const auto& p = d.polynomial();
    const double dv = p.derivative(energy, 1, side);
    if (dv == 0.0) return kInfiniteTemperature;
    return p.derivative(energy, 0, side) / dv;
}

/// C in units of k_B. Constant Omega (Omega' = Omega'' = 0) gives 0; a
/// vanishing denominator with nonzero Omega' gives kDivergentHeat.
inline double specific_heat_at_E(const PiecewiseDos& d, double energy, Side side = Side::right) {
    if (!(energy > d.lower() && energy < d.upper()))
        throw InvalidInput("specific heat: energy must lie strictly inside the support");
    const auto& p = d.polynomial();
    const double v = p.derivative(energy, 0, side);
    const double d1 = p.derivative(energy, 1, side);
    const double d2 = p.derivative(energy, 2, side);
    const double num = d1 * d1;
    const double den = num - v * d2;
    if (num == 0.0) return 0.0;
    if (den == 0.0) return kDivergentHeat;
    return num / den;
}

namespace detail {

/// Boundary between a predicate that holds on (lo, x*) and fails on [x*, hi).
template <class Pred>
double bisect_boundary(double lo, double hi, Pred holds) {
    for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (holds(mid) ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace detail

/// Smallest maximizer of Omega.
inline double mode_lower(const PiecewiseDos& d) {
    const auto& p = d.polynomial();
    return detail::bisect_boundary(d.lower(), d.upper(),
                                   [&](double e) { return p.derivative(e, 1, Side::right) > 0.0; });
}

/// Largest maximizer of Omega.
inline double mode_upper(const PiecewiseDos& d) {
    const auto& p = d.polynomial();
    return detail::bisect_boundary(d.lower(), d.upper(),
                                   [&](double e) { return !(p.derivative(e, 1, Side::left) < 0.0); });
}

enum class Branch {
    positive,  // (E_min, smallest mode): T > 0
    negative,  // (largest mode, E_max): T < 0
};

/// Solves Omega(E) = k_B T Omega'(E) on the chosen branch: bisection on the
/// monotone beta(E), then Newton with exact derivatives, kept in the bracket.
/// If beta jumps across 1/T at a knot, that knot is returned.
inline double energy_of_temperature(const PiecewiseDos& d, double T, Branch branch = Branch::positive) {
    const auto& p = d.polynomial();
    double lo, hi;
    if (branch == Branch::positive) {
        lo = d.lower();
        hi = mode_lower(d);
        if (!(T > 0.0)) throw NoSolution("energy_of_temperature: positive branch needs T > 0");
        if (!(hi > lo) || !(p.derivative(0.5 * (lo + hi), 1, Side::right) > 0.0))
            throw NoSolution("energy_of_temperature: positive-temperature branch is empty (Omega nonincreasing)");
        const double bmin = inverse_temperature(d, hi, Side::left);
        if (bmin > 0.0 && T >= 1.0 / bmin) {
            std::ostringstream msg;
            msg.precision(17);
            msg << "energy_of_temperature: T = " << T << " outside attainable range (0, " << 1.0 / bmin << ")";
            throw NoSolution(msg.str());
        }
    } else {
        lo = mode_upper(d);
        hi = d.upper();
        if (!(T < 0.0)) throw NoSolution("energy_of_temperature: negative branch needs T < 0");
        if (!(hi > lo) || !(p.derivative(0.5 * (lo + hi), 1, Side::left) < 0.0))
            throw NoSolution("energy_of_temperature: negative-temperature branch is empty (Omega nondecreasing)");
        const double bmax = inverse_temperature(d, lo, Side::right);
        if (bmax < 0.0 && T <= 1.0 / bmax) {
            std::ostringstream msg;
            msg.precision(17);
            msg << "energy_of_temperature: T = " << T << " outside attainable range (-inf, " << 1.0 / bmax << ")";
            throw NoSolution(msg.str());
        }
    }
    const double target = 1.0 / T;
    // beta decreases with E; beta > target means E is still below the root.
    double e = detail::bisect_boundary(lo, hi, [&](double x) {
        return p.derivative(x, 1, Side::right) > target * p.derivative(x, 0, Side::right);
    });

    for (int it = 0; it < 8; ++it) {
        const double v = p.derivative(e, 0, Side::right);
        const double d1 = p.derivative(e, 1, Side::right);
        const double d2 = p.derivative(e, 2, Side::right);
        const double f = d1 - target * v;
        const double fp = d2 - target * d1;
        if (f == 0.0 || fp == 0.0) break;
        const double next = e - f / fp;
        if (!(next > lo && next < hi)) break;
        const double fn = p.derivative(next, 1, Side::right) - target * p.derivative(next, 0, Side::right);
        if (!(std::abs(fn) < std::abs(f))) break;
        e = next;
    }
    return e;
}

struct ThermoGrid {
    std::size_t points = 1000;
    std::optional<double> e_lo;  // defaults to the open support interval
    std::optional<double> e_hi;
};

struct ThermoCurve {
    std::vector<double> grid;
    std::vector<double> S;
    std::vector<double> T;
    std::vector<double> C;
    std::vector<double> C_numeric;  // 1/(dT/dE) by central differences on the grid
    double kB = 1.0;
};

/// Grid nodes that land on a knot are moved by half a grid step.
inline std::vector<double> thermo_energies(const PiecewiseDos& d, const ThermoGrid& g) {
    if (g.points < 2) throw InvalidInput("thermo grid: need at least 2 points");
    const double lo = g.e_lo.value_or(d.lower());
    const double hi = g.e_hi.value_or(d.upper());
    if (!(lo < hi) || lo < d.lower() || hi > d.upper())
        throw InvalidInput("thermo grid: range must be an increasing interval inside the support");
    const bool open = !g.e_lo && !g.e_hi;
    std::vector<double> out(g.points);
    const double step = open ? (hi - lo) / static_cast<double>(g.points + 1) : (hi - lo) / static_cast<double>(g.points - 1);
    const double tol = 1e-12 * d.width();
    for (std::size_t i = 0; i < g.points; ++i) {
        double e = open ? lo + step * static_cast<double>(i + 1) : lo + step * static_cast<double>(i);
        for (const auto& k : d.knots()) {
            if (std::abs(e - k.energy) <= tol) {
                e += (e + 0.5 * step < hi || e == lo) ? 0.5 * step : -0.5 * step;
                break;
            }
        }
        out[i] = e;
    }
    return out;
}

inline ThermoCurve thermo_curve(const PiecewiseDos& d, const ThermoGrid& g = {}, double kB = 1.0) {
    if (!(kB > 0.0)) throw InvalidInput("thermo: k_B must be positive");
    ThermoCurve c;
    c.kB = kB;
    c.grid = thermo_energies(d, g);
    const std::size_t m = c.grid.size();
    c.S.resize(m);
    c.T.resize(m);
    c.C.resize(m);
    c.C_numeric.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        const double e = c.grid[i];
        c.S[i] = kB * std::log(eval_dos(d, e));
        c.T[i] = temperature(d, e) / kB;
        c.C[i] = kB * specific_heat_at_E(d, e);
    }
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t a = i == 0 ? 0 : i - 1;
        const std::size_t b = i + 1 == m ? i : i + 1;
        const double dT = c.T[b] - c.T[a];
        c.C_numeric[i] = std::isfinite(dT) && dT != 0.0 ? (c.grid[b] - c.grid[a]) / dT
                                                        : std::numeric_limits<double>::quiet_NaN();
    }
    return c;
}

struct CriticalPoint {
    double energy;
    double temperature;        // k_B T approached from below the knot
    double temperature_right;  // from above; differs only when Omega' jumps
    unsigned discontinuity_order;
    OneSided jump;             // one-sided derivatives at that order
};

/// Relative threshold on one-sided derivative mismatch used to call a jump.
inline constexpr double kJumpRelTol = 1e-8;

/// Scale against which a derivative mismatch of the given order is judged:
/// the one-sided values themselves, or Omega's local size over h^order.
inline double local_derivative_scale(const PiecewiseDos& d, double knot, unsigned order, OneSided v) {
    const auto& p = d.polynomial();
    const auto& br = p.breaks();
    const auto it = std::lower_bound(br.begin(), br.end(), knot);
    const std::size_t k = static_cast<std::size_t>(it - br.begin());
    double h = d.width();
    double peak = std::abs(eval_dos(d, knot));
    if (k > 0) {
        h = std::min(h, br[k] - br[k - 1]);
        peak = std::max(peak, std::abs(eval_dos(d, 0.5 * (br[k] + br[k - 1]))));
    }
    if (k + 1 < br.size()) {
        h = std::min(h, br[k + 1] - br[k]);
        peak = std::max(peak, std::abs(eval_dos(d, 0.5 * (br[k] + br[k + 1]))));
    }
    return std::max({std::abs(v.left), std::abs(v.right), peak / std::pow(h, static_cast<double>(order))});
}

/// First discontinuous derivative order of Omega at each interior knot.
inline std::vector<CriticalPoint> critical_points(const PiecewiseDos& d) {
    std::vector<CriticalPoint> out;
    const auto& p = d.polynomial();
    for (const auto& k : d.knots()) {
        const double e = k.energy;
        if (!(e > d.lower() && e < d.upper())) continue;
        for (unsigned order = 0; order <= d.degree(); ++order) {
            const auto v = eval_dos_derivative(d, e, order);
            if (std::abs(v.left - v.right) > kJumpRelTol * local_derivative_scale(d, e, order, v)) {
                const auto ratio = [&](Side s) {
                    const double dv = p.derivative(e, 1, s);
                    return dv == 0.0 ? kInfiniteTemperature : p.derivative(e, 0, s) / dv;
                };
                out.push_back({e, ratio(Side::left), ratio(Side::right), order, v});
                break;
            }
        }
    }
    return out;
}

struct EquilibrationResult {
    double epsilon;
    double T1;
    double T2;
    double total_entropy;
    bool boundary;  // optimum sits on the edge of the feasible exchange interval
};

/// Energy exchange between N1 copies of system 1 (per-copy energy E1) and N2
/// copies of system 2 maximizing N1 ln Omega1(E1 + eps/N1) + N2 ln Omega2(E2 - eps/N2).
/// Golden-section search locates the optimum of the concave objective;
/// a safeguarded Newton iteration on beta1 = beta2 then polishes it.
inline EquilibrationResult equilibrate(const PiecewiseDos& d1, double E1, unsigned N1, const PiecewiseDos& d2,
                                       double E2, unsigned N2) {
    if (N1 == 0 || N2 == 0) throw InvalidInput("equilibrate: constituent counts must be positive");
    if (E1 < d1.lower() || E1 > d1.upper() || E2 < d2.lower() || E2 > d2.upper())
        throw InvalidInput("equilibrate: initial energies must lie inside the supports");
    const double n1 = N1, n2 = N2;
    const double lo = std::max(n1 * (d1.lower() - E1), n2 * (E2 - d2.upper()));
    const double hi = std::min(n1 * (d1.upper() - E1), n2 * (E2 - d2.lower()));

    const auto e1 = [&](double eps) { return std::clamp(E1 + eps / n1, d1.lower(), d1.upper()); };
    const auto e2 = [&](double eps) { return std::clamp(E2 - eps / n2, d2.lower(), d2.upper()); };
    const auto entropy = [&](double eps) {
        return n1 * std::log(eval_dos(d1, e1(eps))) + n2 * std::log(eval_dos(d2, e2(eps)));
    };
    // dF/deps = beta1 - beta2; decreasing in eps.
    const auto slope = [&](double eps) {
        const auto b = [](const PiecewiseDos& d, double e) {
            const double v = eval_dos(d, e);
            return v > 0.0 ? d.polynomial().derivative(e, 1, Side::right) / v : 0.0;
        };
        return b(d1, e1(eps)) - b(d2, e2(eps));
    };
    const auto curvature = [&](double eps) {
        const auto db = [](const PiecewiseDos& d, double e) {
            const auto& p = d.polynomial();
            const double v = p.derivative(e, 0, Side::right), g = p.derivative(e, 1, Side::right);
            return (p.derivative(e, 2, Side::right) * v - g * g) / (v * v);
        };
        return db(d1, e1(eps)) / n1 + db(d2, e2(eps)) / n2;
    };

    double a = lo, b = hi;
    if (!(b > a)) {
        const double eps = a;
        return {eps, temperature(d1, e1(eps)), temperature(d2, e2(eps)), entropy(eps), true};
    }
    const double scale = std::max(n1 * d1.width(), n2 * d2.width());
    constexpr double invphi = 0.6180339887498949;
    double c = b - invphi * (b - a), dd = a + invphi * (b - a);
    double fc = entropy(c), fd = entropy(dd);
    while (b - a > 1e-6 * scale) {
        if (fc >= fd) {
            b = dd;
            dd = c;
            fd = fc;
            c = b - invphi * (b - a);
            fc = entropy(c);
        } else {
            a = c;
            c = dd;
            fc = fd;
            dd = a + invphi * (b - a);
            fd = entropy(dd);
        }
    }

    // Widen by one golden step so the stationary point is inside [a, b].
    const double pad = b - a;
    a = std::max(lo, a - pad);
    b = std::min(hi, b + pad);
    bool boundary = false;
    double eps;
    if (a == lo && !(slope(std::nextafter(lo, hi)) > 0.0) && slope(0.5 * (a + b)) < 0.0) {
        eps = lo;
        boundary = true;
    } else if (b == hi && !(slope(std::nextafter(hi, lo)) < 0.0) && slope(0.5 * (a + b)) > 0.0) {
        eps = hi;
        boundary = true;
    } else {
        eps = 0.5 * (a + b);
        for (int it = 0; it < 200 && b - a > 1e-15 * scale; ++it) {
            const double s = slope(eps);
            if (s == 0.0) break;
            (s > 0.0 ? a : b) = eps;
            const double k = curvature(eps);
            double next = k < 0.0 ? eps - s / k : 0.5 * (a + b);
            if (!(next > a && next < b)) next = 0.5 * (a + b);
            if (next == eps) break;
            eps = next;
        }
    }
    const auto safe_T = [](const PiecewiseDos& d, double e) {
        return (e > d.lower() && e < d.upper()) ? temperature(d, e) : std::numeric_limits<double>::quiet_NaN();
    };
    return {eps, safe_T(d1, e1(eps)), safe_T(d2, e2(eps)), entropy(eps), boundary};
}

}  // namespace qmce
