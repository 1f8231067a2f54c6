#pragma once

// Dense polynomials and piecewise polynomials stored in a per-piece shifted
// variable u = x - breaks[i], which keeps coefficients well scaled when the
// support sits far from the origin.

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace qmce {

class Polynomial {
public:
    Polynomial() = default;
    explicit Polynomial(std::vector<double> coeffs) : c_(std::move(coeffs)) {}

    /// Ascending-power coefficients.
    const std::vector<double>& coefficients() const noexcept { return c_; }
    std::size_t size() const noexcept { return c_.size(); }
    std::size_t degree() const noexcept { return c_.empty() ? 0 : c_.size() - 1; }
    double coefficient(std::size_t j) const noexcept { return j < c_.size() ? c_[j] : 0.0; }

    double operator()(double u) const noexcept {
        double acc = 0.0;
        for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * u + *it;
        return acc;
    }

    /// d^order/du^order evaluated at u.
    double derivative(double u, unsigned order) const noexcept {
        if (order >= c_.size()) return 0.0;
        double acc = 0.0;
        for (std::size_t j = c_.size(); j-- > order;) {
            double f = 1.0;
            for (std::size_t r = 0; r < order; ++r) f *= static_cast<double>(j - r);
            acc = acc * u + f * c_[j];
        }
        return acc;
    }

    /// Exact integral over [0, h].
    double integral(double h) const noexcept {
        double acc = 0.0;
        for (std::size_t j = c_.size(); j-- > 0;) acc = acc * h + c_[j] / static_cast<double>(j + 1);
        return acc * h;
    }

    /// Coefficients of p(u + shift).
    Polynomial shifted(double shift) const {
        std::vector<double> out(c_);
        // Repeated synthetic division (Taylor shift).
        const std::size_t m = out.size();
        for (std::size_t i = 0; i + 1 < m; ++i)
            for (std::size_t j = m - 1; j > i; --j) out[j - 1] += shift * out[j];
        return Polynomial(std::move(out));
    }

    Polynomial& operator+=(const Polynomial& o) {
        if (o.c_.size() > c_.size()) c_.resize(o.c_.size(), 0.0);
        for (std::size_t j = 0; j < o.c_.size(); ++j) c_[j] += o.c_[j];
        return *this;
    }

    Polynomial& operator*=(double s) noexcept {
        for (auto& v : c_) v *= s;
        return *this;
    }

    friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
        if (a.c_.empty() || b.c_.empty()) return {};
        std::vector<double> out(a.c_.size() + b.c_.size() - 1, 0.0);
        for (std::size_t i = 0; i < a.c_.size(); ++i)
            for (std::size_t j = 0; j < b.c_.size(); ++j) out[i + j] += a.c_[i] * b.c_[j];
        return Polynomial(std::move(out));
    }

    /// c0 + c1 * u
    static Polynomial linear(double c0, double c1) { return Polynomial({c0, c1}); }

private:
    std::vector<double> c_;
};

enum class Side { left, right };

/// Piecewise polynomial on [breaks.front(), breaks.back()], zero outside.
/// Piece i covers [breaks[i], breaks[i+1]) except the last, which is closed.
class PiecewisePolynomial {
public:
    PiecewisePolynomial() = default;
    PiecewisePolynomial(std::vector<double> breaks, std::vector<Polynomial> pieces)
        : breaks_(std::move(breaks)), pieces_(std::move(pieces)) {
        if (breaks_.size() != pieces_.size() + 1 || pieces_.empty())
            throw std::invalid_argument("PiecewisePolynomial: need pieces.size() + 1 breakpoints");
        if (!std::is_sorted(breaks_.begin(), breaks_.end()) ||
            std::adjacent_find(breaks_.begin(), breaks_.end()) != breaks_.end())
            throw std::invalid_argument("PiecewisePolynomial: breakpoints must be strictly increasing");
    }

    const std::vector<double>& breaks() const noexcept { return breaks_; }
    const std::vector<Polynomial>& pieces() const noexcept { return pieces_; }
    double lower() const noexcept { return breaks_.front(); }
    double upper() const noexcept { return breaks_.back(); }

    std::size_t degree() const noexcept {
        std::size_t d = 0;
        for (const auto& p : pieces_) d = std::max(d, p.degree());
        return d;
    }

    double operator()(double x) const noexcept {
        if (x < lower() || x > upper()) return 0.0;
        if (x == upper()) return derivative(x, 0, Side::left);
        return derivative(x, 0, Side::right);
    }

    /// One-sided derivative of the function extended by zero outside its support.
    double derivative(double x, unsigned order, Side side) const noexcept {
        const auto i = piece_index(x, side);
        if (i >= pieces_.size()) return 0.0;
        return pieces_[i].derivative(x - breaks_[i], order);
    }

    double integrate(double a, double b) const noexcept {
        double sign = 1.0;
        if (b < a) {
            std::swap(a, b);
            sign = -1.0;
        }
        a = std::max(a, lower());
        b = std::min(b, upper());
        if (!(a < b)) return 0.0;
        double acc = 0.0;
        for (std::size_t i = 0; i < pieces_.size(); ++i) {
            const double lo = std::max(a, breaks_[i]);
            const double hi = std::min(b, breaks_[i + 1]);
            if (!(lo < hi)) continue;
            const auto& p = pieces_[i];
            acc += p.integral(hi - breaks_[i]) - p.integral(lo - breaks_[i]);
        }
        return sign * acc;
    }

    /// Index of the piece seen from the given side of x, or pieces().size()
    /// when that side lies outside the support.
    std::size_t piece_index(double x, Side side) const noexcept {
        if (side == Side::right) {
            if (x < lower() || x >= upper()) return pieces_.size();
            auto it = std::upper_bound(breaks_.begin(), breaks_.end(), x);
            return static_cast<std::size_t>(it - breaks_.begin()) - 1;
        }
        if (x <= lower() || x > upper()) return pieces_.size();
        auto it = std::lower_bound(breaks_.begin(), breaks_.end(), x);
        return static_cast<std::size_t>(it - breaks_.begin()) - 1;
    }

private:
    std::vector<double> breaks_;
    std::vector<Polynomial> pieces_;
};

namespace detail {

/// Bivariate coefficients a[alpha][gamma] of z^alpha sigma^gamma.
using Bivariate = std::vector<std::vector<double>>;

inline std::vector<double> binomial_row(std::size_t n) {
    std::vector<double> row(n + 1, 1.0);
    for (std::size_t k = 1; k < n; ++k) row[k] = row[k - 1] * static_cast<double>(n - k + 1) / static_cast<double>(k);
    return row;
}

/// z -> sum_{alpha,gamma} a[alpha][gamma] z^alpha (c0 + c1 z)^gamma
inline Polynomial substitute(const Bivariate& a, double c0, double c1) {
    std::size_t max_gamma = 0;
    for (const auto& row : a) max_gamma = std::max(max_gamma, row.size());
    std::vector<Polynomial> powers{Polynomial({1.0})};
    const auto lin = Polynomial::linear(c0, c1);
    for (std::size_t g = 1; g < max_gamma; ++g) powers.push_back(powers.back() * lin);

    Polynomial out;
    for (std::size_t alpha = 0; alpha < a.size(); ++alpha) {
        for (std::size_t gamma = 0; gamma < a[alpha].size(); ++gamma) {
            const double coef = a[alpha][gamma];
            if (coef == 0.0) continue;
            std::vector<double> term(alpha + powers[gamma].size(), 0.0);
            for (std::size_t j = 0; j < powers[gamma].size(); ++j) term[alpha + j] = coef * powers[gamma].coefficient(j);
            out += Polynomial(std::move(term));
        }
    }
    return out;
}

/// Contribution of (P on [0,h)) * (Q on [0,k)) to the convolution, as a
/// polynomial in z = w - w0 where w is the offset from the sum of the two
/// piece origins. Valid on a z-range that does not straddle 0, h, k or h+k.
inline Polynomial convolve_pieces(const Polynomial& P, double h, const Polynomial& Q, double k, double w0, double wmid) {
    const bool lower_zero = wmid <= k;  // sigma_lo = 0, else w - k
    const bool upper_w = wmid <= h;     // sigma_hi = w, else h
    const double lo_mid = lower_zero ? 0.0 : wmid - k;
    const double hi_mid = upper_w ? wmid : h;
    if (!(hi_mid > lo_mid)) return {};

    // Q(w0 + z - sigma) expanded in z and sigma.
    const Polynomial Qs = Q.shifted(w0);
    const std::size_t dq = Qs.size();
    const std::size_t dp = P.size();
    Bivariate integrand(dq, std::vector<double>(dq + dp, 0.0));
    for (std::size_t j = 0; j < dq; ++j) {
        const double qj = Qs.coefficient(j);
        if (qj == 0.0) continue;
        const auto binom = binomial_row(j);
        for (std::size_t r = 0; r <= j; ++r) {
            const double base = qj * binom[r] * ((r & 1u) ? -1.0 : 1.0);
            for (std::size_t i = 0; i < dp; ++i) integrand[j - r][r + i] += base * P.coefficient(i);
        }
    }
    // Antiderivative in sigma.
    Bivariate anti(dq, std::vector<double>(dq + dp + 1, 0.0));
    for (std::size_t alpha = 0; alpha < dq; ++alpha)
        for (std::size_t gamma = 0; gamma < dq + dp; ++gamma)
            anti[alpha][gamma + 1] = integrand[alpha][gamma] / static_cast<double>(gamma + 1);

    Polynomial hi = upper_w ? substitute(anti, w0, 1.0) : substitute(anti, h, 0.0);
    Polynomial lo = lower_zero ? substitute(anti, 0.0, 0.0) : substitute(anti, w0 - k, 1.0);
    lo *= -1.0;
    hi += lo;
    return hi;
}

}  // namespace detail

/// Exact convolution (f * g)(x) = int f(s) g(x - s) ds.
inline PiecewisePolynomial convolve(const PiecewisePolynomial& f, const PiecewisePolynomial& g) {
    std::vector<double> sums;
    for (double a : f.breaks())
        for (double b : g.breaks()) sums.push_back(a + b);
    std::sort(sums.begin(), sums.end());
    const double scale = std::max({std::abs(sums.front()), std::abs(sums.back()), sums.back() - sums.front()});
    std::vector<double> breaks;
    for (double s : sums)
        if (breaks.empty() || s - breaks.back() > 1e-12 * scale) breaks.push_back(s);

    std::vector<Polynomial> pieces(breaks.size() - 1);
    const auto& fb = f.breaks();
    const auto& gb = g.breaks();
    for (std::size_t o = 0; o + 1 < breaks.size(); ++o) {
        const double x0 = breaks[o];
        const double xm = 0.5 * (breaks[o] + breaks[o + 1]);
        for (std::size_t i = 0; i < f.pieces().size(); ++i) {
            const double a = fb[i], h = fb[i + 1] - fb[i];
            for (std::size_t j = 0; j < g.pieces().size(); ++j) {
                const double b = gb[j], k = gb[j + 1] - gb[j];
                const double wmid = xm - a - b;
                if (wmid <= 0.0 || wmid >= h + k) continue;
                pieces[o] += detail::convolve_pieces(f.pieces()[i], h, g.pieces()[j], k, x0 - a - b, wmid);
            }
        }
    }
    return PiecewisePolynomial(std::move(breaks), std::move(pieces));
}

}  // namespace qmce
