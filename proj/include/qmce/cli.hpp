#pragma once

// Command implementations behind the qmce tool. Each writes CSV to a stream
// so the same code serves the binary and the tests; argument parsing lives
// in tools/qmce.cpp.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "qmce/canonical.hpp"
#include "qmce/dos.hpp"
#include "qmce/error.hpp"
#include "qmce/grand.hpp"
#include "qmce/montecarlo.hpp"
#include "qmce/spectrum.hpp"
#include "qmce/thermo.hpp"

namespace qmce::cli {

enum ExitCode : int {
    kSuccess = 0,
    kUsage = 1,
    kNumerical = 2,
    kVerification = 3,
};

class UsageError : public InvalidInput {
public:
    using InvalidInput::InvalidInput;
};

/// 17 significant digits: enough to round-trip any double.
inline std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline std::vector<double> parse_reals(std::string_view csv, std::string_view what) {
    std::vector<double> out;
    std::size_t start = 0;
    while (start <= csv.size()) {
        const auto end = std::min(csv.find(',', start), csv.size());
        const std::string item(detail::trim(csv.substr(start, end - start)));
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (item.empty() || used != item.size() || !std::isfinite(v))
            throw UsageError(std::string(what) + ": cannot parse '" + item + "' as a real number");
        out.push_back(v);
        start = end + 1;
    }
    return out;
}

/// Exactly one of --levels, --spectrum or --ising names the system.
struct SpectrumSource {
    std::string levels;
    std::string degeneracy;
    std::string file;
    bool ising = false;
    IsingChainSpec chain{3, 0.25, 1.0};

    bool given() const noexcept { return !levels.empty() || !file.empty() || ising; }
};

inline Spectrum resolve(const SpectrumSource& src, std::string_view label = "spectrum") {
    const int count = int(!src.levels.empty()) + int(!src.file.empty()) + int(src.ising);
    if (count == 0)
        throw UsageError(std::string(label) + ": no source given; use --levels, --spectrum or --ising");
    if (count > 1)
        throw UsageError(std::string(label) + ": conflicting sources; give exactly one of --levels, --spectrum, --ising");
    if (!src.degeneracy.empty() && src.levels.empty()) throw UsageError("--degeneracy requires --levels");
    if (src.ising) return ising_spectrum(src.chain);
    if (!src.file.empty()) return load_spectrum(src.file);

    const auto energies = parse_reals(src.levels, "--levels");
    std::vector<Level> raw;
    if (src.degeneracy.empty()) {
        for (double e : energies) raw.push_back({e, 1});
    } else {
        const auto mult = parse_reals(src.degeneracy, "--degeneracy");
        if (mult.size() != energies.size())
            throw UsageError("--degeneracy must list one multiplicity per level (" + std::to_string(energies.size()) +
                             " expected, got " + std::to_string(mult.size()) + ")");
        for (std::size_t i = 0; i < energies.size(); ++i) {
            if (!(mult[i] >= 1.0) || mult[i] != std::floor(mult[i]))
                throw UsageError("--degeneracy entries must be positive integers");
            raw.push_back({energies[i], static_cast<std::size_t>(mult[i])});
        }
    }
    return make_spectrum(raw);
}

// ---- dos ------------------------------------------------------------------

/// Uniform grid over the closed support with every knot added as its own row.
inline void write_dos(std::ostream& out, const Spectrum& s, std::size_t grid = 1000) {
    if (grid < 2) throw UsageError("--grid must be at least 2");
    const auto d = build_dos(s);
    std::vector<double> e;
    e.reserve(grid + s.distinct());
    for (std::size_t i = 0; i < grid; ++i)
        e.push_back(d.lower() + d.width() * static_cast<double>(i) / static_cast<double>(grid - 1));
    e.back() = d.upper();
    for (const auto& k : d.knots()) e.push_back(k.energy);
    std::sort(e.begin(), e.end());
    e.erase(std::unique(e.begin(), e.end()), e.end());
    out << "E,Omega\n";
    for (double x : e) out << fmt(x) << ',' << fmt(eval_dos(d, x)) << '\n';
}

// ---- thermo ---------------------------------------------------------------

struct ThermoOptions {
    std::size_t grid = 1000;
    double kb = 1.0;
    std::optional<double> e_min, e_max;
    std::optional<double> t_min, t_max;
};

inline void write_criticals(std::ostream& out, const PiecewiseDos& d, double kb = 1.0) {
    out << "E_c,T_c,order\n";
    for (const auto& cp : critical_points(d))
        out << fmt(cp.energy) << ',' << fmt(cp.temperature / kb) << ',' << cp.discontinuity_order << '\n';
}

inline void write_thermo(std::ostream& curve, std::ostream& criticals, const Spectrum& s, const ThermoOptions& o) {
    if (!(o.kb > 0.0)) throw UsageError("--kb must be positive");
    const bool e_range = o.e_min || o.e_max;
    const bool t_range = o.t_min || o.t_max;
    if (e_range && t_range) throw UsageError("thermo: give an energy range or a temperature range, not both");
    if (t_range && !(o.t_min && o.t_max)) throw UsageError("thermo: --t-min and --t-max go together");
    const auto d = build_dos(s);

    if (t_range) {
        const double a = *o.t_min, b = *o.t_max;
        if (!(a < b)) throw UsageError("thermo: need --t-min < --t-max");
        if ((a < 0.0) != (b < 0.0) || a == 0.0 || b == 0.0)
            throw UsageError("thermo: temperature range must not include or cross zero");
        if (o.grid < 2) throw UsageError("--grid must be at least 2");
        const Branch branch = a > 0.0 ? Branch::positive : Branch::negative;
        // Solve every row first so an unattainable T leaves no partial file.
        std::vector<double> energies(o.grid);
        for (std::size_t i = 0; i < o.grid; ++i) {
            const double T = i + 1 == o.grid ? b : a + (b - a) * static_cast<double>(i) / static_cast<double>(o.grid - 1);
            energies[i] = energy_of_temperature(d, T * o.kb, branch);
        }
        curve << "E,S,T,C\n";
        for (double e : energies)
            curve << fmt(e) << ',' << fmt(o.kb * std::log(eval_dos(d, e))) << ',' << fmt(temperature(d, e) / o.kb)
                  << ',' << fmt(o.kb * specific_heat_at_E(d, e)) << '\n';
    } else {
        ThermoGrid g{o.grid, o.e_min, o.e_max};
        if (e_range) {
            // One-sided ranges keep the open support edge on the other side.
            const double step = d.width() / static_cast<double>(o.grid + 1);
            if (!g.e_lo) g.e_lo = d.lower() + step;
            if (!g.e_hi) g.e_hi = d.upper() - step;
        }
        const auto c = thermo_curve(d, g, o.kb);
        curve << "E,S,T,C\n";
        for (std::size_t i = 0; i < c.grid.size(); ++i)
            curve << fmt(c.grid[i]) << ',' << fmt(c.S[i]) << ',' << fmt(c.T[i]) << ',' << fmt(c.C[i]) << '\n';
    }
    write_criticals(criticals, d, o.kb);
}

// ---- canonical ------------------------------------------------------------

struct CanonicalOptions {
    std::optional<double> beta;
    std::optional<double> beta_min, beta_max;
    std::size_t grid = 1000;
};

/// Rows of (beta, Z, U). A range is log-spaced and hits both endpoints exactly.
inline void write_canonical(std::ostream& out, const Spectrum& s, const CanonicalOptions& o) {
    std::vector<double> betas;
    if (o.beta) {
        if (o.beta_min || o.beta_max) throw UsageError("canonical: --beta excludes --beta-min/--beta-max");
        betas.push_back(*o.beta);
    } else {
        const double a = o.beta_min.value_or(0.1), b = o.beta_max.value_or(10.0);
        if (!(a > 0.0) || !(b > 0.0)) throw UsageError("canonical: beta must be positive");
        if (!(a <= b)) throw UsageError("canonical: need --beta-min <= --beta-max");
        const std::size_t n = a == b ? 1 : o.grid;
        if (n < 2 && a != b) throw UsageError("--grid must be at least 2");
        for (std::size_t i = 0; i < n; ++i)
            betas.push_back(n == 1 ? a : a * std::pow(b / a, static_cast<double>(i) / static_cast<double>(n - 1)));
        betas.front() = a;
        betas.back() = b;
    }
    for (double b : betas)
        if (!(b > 0.0)) throw UsageError("canonical: beta must be positive");
    out << "beta,Z,U\n";
    for (double b : betas) {
        const auto r = canonical_eval(s, b);
        out << fmt(r.beta) << ',' << fmt(r.Z) << ',' << fmt(r.U) << '\n';
    }
}

// ---- mc-verify ------------------------------------------------------------

struct McVerifyOptions {
    McConfig config{};
    SamplingMethod method = SamplingMethod::gaussian;
    unsigned threads = 0;
    double sigmas = 4.0;
    double required_fraction = 0.99;
};

inline McComparison write_mc_verify(std::ostream& out, const Spectrum& s, const McVerifyOptions& o) {
    const auto est = estimate_dos(s, o.config, o.method, o.threads);
    const auto cmp = compare_to_exact(est, build_dos(s), o.sigmas);
    out << "E_lo,E_hi,Omega_hat,stderr,Omega_exact,z\n";
    for (const auto& r : cmp.rows)
        out << fmt(r.lo) << ',' << fmt(r.hi) << ',' << fmt(r.estimate) << ',' << fmt(r.std_error) << ','
            << fmt(r.exact) << ',' << fmt(r.z) << '\n';
    return cmp;
}

inline bool mc_passed(const McComparison& cmp, const McVerifyOptions& o) {
    return cmp.fraction_within() >= o.required_fraction;
}

inline std::string mc_summary(const McComparison& cmp, const McVerifyOptions& o) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "bins within %g sigma: %zu/%zu (%.4f), required %.2f: %s", o.sigmas, cmp.within,
                  cmp.rows.size(), cmp.fraction_within(), o.required_fraction, mc_passed(cmp, o) ? "PASS" : "FAIL");
    return buf;
}

// ---- grand ----------------------------------------------------------------

/// Joint density on a grid x grid lattice of cell centres in the unit square.
inline void write_grand(std::ostream& out, const Spectrum& s, std::size_t grid) {
    if (s.dim() != 3) throw InvalidInput("grand: requires a three-level system, got dim " + std::to_string(s.dim()));
    if (grid < 1) throw UsageError("--grid must be positive");
    out << "p,q,Omega\n";
    for (std::size_t i = 0; i < grid; ++i) {
        const double p = (static_cast<double>(i) + 0.5) / static_cast<double>(grid);
        for (std::size_t j = 0; j < grid; ++j) {
            const double q = (static_cast<double>(j) + 0.5) / static_cast<double>(grid);
            out << fmt(p) << ',' << fmt(q) << ',' << fmt(grand_dos(p, q)) << '\n';
        }
    }
}

inline void write_marginal(std::ostream& out, const Spectrum& s, std::size_t grid) {
    if (grid < 2) throw UsageError("--grid must be at least 2");
    out << "E,Omega\n";
    const double lo = s.min_energy(), hi = s.max_energy();
    for (std::size_t i = 0; i < grid; ++i) {
        const double e = i + 1 == grid ? hi : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(grid - 1);
        out << fmt(e) << ',' << fmt(marginalize_to_energy(s, e)) << '\n';
    }
}

// ---- equilibrate ----------------------------------------------------------

struct EquilibrateOptions {
    double E1 = 0.0, E2 = 0.0;
    unsigned N1 = 1, N2 = 1;
    double kb = 1.0;
};

inline EquilibrationResult write_equilibrate(std::ostream& out, const Spectrum& s1, const Spectrum& s2,
                                             const EquilibrateOptions& o) {
    if (!(o.kb > 0.0)) throw UsageError("--kb must be positive");
    const auto r = equilibrate(build_dos(s1), o.E1, o.N1, build_dos(s2), o.E2, o.N2);
    out << "epsilon,T1,T2,S_total\n"
        << fmt(r.epsilon) << ',' << fmt(r.T1 / o.kb) << ',' << fmt(r.T2 / o.kb) << ',' << fmt(o.kb * r.total_entropy)
        << '\n';
    return r;
}

// ---- ising ----------------------------------------------------------------

/// Spectrum file that --spectrum reads back unchanged.
inline void write_spectrum(std::ostream& out, const Spectrum& s, std::string_view comment = {}) {
    if (!comment.empty()) out << "# " << comment << '\n';
    out << "# energy multiplicity\n";
    for (const auto& l : s.levels()) out << fmt(l.energy) << ' ' << l.multiplicity << '\n';
}

// ---- gnuplot --------------------------------------------------------------

inline std::string gnuplot_script(std::string_view command, const std::string& csv) {
    std::string head = "set datafile separator ','\nset key autotitle columnhead\n";
    const std::string f = "'" + csv + "'";
    if (command == "dos") return head + "set xlabel 'E'\nset ylabel 'Omega(E)'\nplot " + f + " using 1:2 with lines\n";
    if (command == "thermo")
        return head + "set xlabel 'T'\nset ylabel 'C'\nplot " + f + " using 3:4 with lines\n";
    if (command == "canonical")
        return head + "set logscale x\nset xlabel 'beta'\nplot " + f + " using 1:2 with lines, " + f +
               " using 1:3 with lines axes x1y2\n";
    if (command == "mc-verify")
        return head + "set xlabel 'E'\nplot " + f + " using (($1+$2)/2):3:4 with yerrorbars, " + f +
               " using (($1+$2)/2):5 with lines\n";
    if (command == "grand") return head + "set xlabel 'p'\nset ylabel 'q'\nsplot " + f + " using 1:2:3 with points\n";
    throw UsageError("--gnuplot is not available for '" + std::string(command) + "'");
}

}  // namespace qmce::cli
