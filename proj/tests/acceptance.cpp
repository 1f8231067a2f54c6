// Acceptance suite: one PASS/FAIL line per criterion, exit status nonzero if
// any numbered criterion fails. Reference values come from independent
// formulas or high-precision arithmetic written here, not from the library.

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include "oracles.hpp"
#include "qmce/canonical.hpp"
#include "qmce/dos.hpp"
#include "qmce/grand.hpp"
#include "qmce/montecarlo.hpp"
#include "qmce/spectrum.hpp"
#include "qmce/thermo.hpp"

using namespace qmce;
namespace fs = std::filesystem;
using Big = boost::multiprecision::cpp_bin_float_50;
constexpr double pi = std::numbers::pi;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

int failures = 0;

void report(int id, const std::string& title, const std::function<Outcome()>& body, double budget_s = 0.0) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome r;
    try {
        r = body();
    } catch (const std::exception& e) {
        r = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (budget_s > 0.0 && secs > budget_s) {
        r.pass = false;
        r.detail += "; over time budget";
    }
    if (!r.pass) ++failures;
    char timing[64];
    std::snprintf(timing, sizeof timing, "%.2fs", secs);
    std::cout << (r.pass ? "PASS" : "FAIL") << "  [" << id << "] " << title << ": " << r.detail << " (" << timing
              << (budget_s > 0.0 ? ", budget " + std::to_string(static_cast<int>(budget_s)) + "s" : std::string())
              << ")" << std::endl;
}

std::string sci(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", x);
    return buf;
}

double rel(double a, double b) { return a == b ? 0.0 : std::abs(a - b) / std::max(std::abs(a), std::abs(b)); }

/// Truncated-power sum in 50-digit arithmetic.
double truncated_power_exact(const std::vector<double>& e, double energy) {
    const std::size_t n = e.size() - 1;
    Big sum = 0, x = energy;
    for (std::size_t k = 0; k < e.size(); ++k) {
        if (!(e[k] > energy)) continue;
        Big term = boost::multiprecision::pow(Big(e[k]) - x, static_cast<int>(n - 1));
        for (std::size_t l = 0; l < e.size(); ++l)
            if (l != k) term /= Big(e[l]) - Big(e[k]);
        sum += term;
    }
    Big pref = 1;
    const Big bpi = boost::math::constants::pi<Big>();
    for (std::size_t k = 1; k <= n; ++k) pref *= -bpi;
    for (std::size_t k = 2; k < n; ++k) pref /= static_cast<int>(k);
    return static_cast<double>(pref * sum);
}

/// Closed-form three-level density (linear up to the middle level, linear down after).
double three_level_exact(double e1, double e2, double e3, double x) {
    if (x < e1 || x > e3) return 0.0;
    if (x <= e2) return pi * pi * (x - e1) / ((e2 - e1) * (e3 - e1));
    return pi * pi * (e3 - x) / ((e3 - e2) * (e3 - e1));
}

int run_cli(const std::string& args, const std::string& env) {
    const std::string cmd = env + " '" + QMCE_CLI_PATH + "' " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

std::vector<std::vector<double>> read_numeric_csv(const fs::path& p) {
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line) && !line.empty()) {
        std::vector<double> row;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
        rows.push_back(row);
    }
    return rows;
}

}  // namespace

int main() {
    std::mt19937_64 rng(20240601);

    report(1, "two-level density is pi/(E2-E1) on the support and zero outside", [&] {
        std::uniform_real_distribution<double> u(-10.0, 10.0), t(0.0, 1.0);
        double worst = 0.0;
        bool outside_zero = true;
        for (int trial = 0; trial < 100; ++trial) {
            double a = u(rng), b = u(rng);
            if (a > b) std::swap(a, b);
            if (!(b - a > 1e-6)) continue;
            const auto d = build_dos(make_spectrum(std::vector<double>{a, b}));
            const double expect = pi / (b - a);
            for (double x : {a, b, 0.5 * (a + b)}) worst = std::max(worst, rel(eval_dos(d, x), expect));
            for (int i = 0; i < 100; ++i) worst = std::max(worst, rel(eval_dos(d, a + t(rng) * (b - a)), expect));
            for (double x : {std::nextafter(a, -INFINITY), std::nextafter(b, INFINITY), a - 1.0, b + 1.0})
                outside_zero = outside_zero && eval_dos(d, x) == 0.0;
        }
        // Machine precision: a few ulps from the single division.
        return Outcome{worst <= 4 * std::numeric_limits<double>::epsilon() && outside_zero,
                       "max rel err " + sci(worst) + (outside_zero ? ", zero outside" : ", NONZERO outside")};
    }, 1.0);

    report(2, "three-level density matches both linear branches", [&] {
        double worst = 0.0;
        for (int trial = 0; trial < 100; ++trial) {
            const auto e = oracle::random_ladder(rng, 3, 0.01, 2.0);
            const auto d = build_dos(make_spectrum(e));
            std::uniform_real_distribution<double> ue(e[0], e[2]);
            for (int i = 0; i < 1000; ++i) {
                const double x = ue(rng);
                worst = std::max(worst, rel(eval_dos(d, x), three_level_exact(e[0], e[1], e[2], x)));
            }
        }
        return Outcome{worst <= 1e-12, "max rel err " + sci(worst) + " over 1e5 points"};
    }, 5.0);

    report(3, "B-spline evaluation equals the truncated-power sum (dims 2-8, gaps >= 0.05)", [&] {
        double worst = 0.0;
        std::size_t points = 0;
        for (std::size_t dim = 2; dim <= 8; ++dim) {
            for (int trial = 0; trial < 20; ++trial) {
                const auto e = oracle::random_ladder(rng, dim, 0.05, 1.0);
                const auto d = build_dos(make_spectrum(e));
                std::uniform_real_distribution<double> ue(e.front(), e.back());
                for (int i = 0; i < 100; ++i, ++points) {
                    const double x = ue(rng);
                    worst = std::max(worst, rel(eval_dos(d, x), truncated_power_exact(e, x)));
                }
            }
        }
        return Outcome{worst <= 1e-10, "max rel err " + sci(worst) + " over " + std::to_string(points) +
                                           " points (reference in 50-digit arithmetic)"};
    }, 10.0);

    report(4, "total volume pi^n/n! for dims 2-12, degenerate included", [&] {
        double worst = 0.0, worst_quad = 0.0;
        std::uniform_int_distribution<std::size_t> mult(1, 3);
        std::uniform_real_distribution<double> gap(0.05, 1.0);
        int cases = 0;
        for (std::size_t dim = 2; dim <= 12; ++dim) {
            for (int variant = 0; variant < 6; ++variant) {
                std::vector<Level> raw;
                std::size_t total = 0;
                double e = gap(rng) * 3.0 - 1.5;
                while (total < dim) {
                    const std::size_t m = variant == 0 ? 1 : std::min(mult(rng), dim - total);
                    raw.push_back({e, m});
                    total += m;
                    e += gap(rng);
                }
                const auto s = make_spectrum(raw);
                if (s.distinct() < 2) continue;
                const auto d = build_dos(s);
                // Exact volume from the closed form, evaluated independently here.
                double vol = 1.0;
                for (std::size_t k = 1; k < dim; ++k) vol *= pi / static_cast<double>(k);
                worst = std::max(worst, rel(integrate_dos(d, s.min_energy(), s.max_energy()), vol));
                std::vector<double> splits;
                for (const auto& l : s.levels()) splits.push_back(l.energy);
                worst_quad = std::max(worst_quad, rel(oracle::integrate([&](double x) { return eval_dos(d, x); },
                                                                        s.min_energy(), s.max_energy(), splits),
                                                      vol));
                ++cases;
            }
        }
        return Outcome{worst <= 1e-10 && worst_quad <= 1e-10, std::to_string(cases) + " spectra, exact integral max rel err " +
                                                                  sci(worst) + ", quadrature " + sci(worst_quad)};
    }, 5.0);

    report(5, "Monte Carlo (1e7 samples, 512 bins) within 4 sigma on >= 99% of bins", [&] {
        struct Case {
            std::string name;
            Spectrum s;
        };
        // The Ising spectrum is built from direct enumeration here.
        std::vector<Level> ising;
        for (const auto& [e, m] : oracle::ising_levels(3, 0.25, 1.0)) ising.push_back({e, m});
        const std::vector<Case> battery{
            {"two-level", make_spectrum(std::vector<double>{0, 1})},
            {"three-level", make_spectrum(std::vector<double>{0, 1, 2})},
            {"four-level", make_spectrum(std::vector<double>{0, 1, 2, 3})},
            {"degenerate", make_spectrum({{-1, 2}, {0.3, 1}, {1.1, 3}, {2, 1}})},
            {"ising L=3", make_spectrum(ising)},
        };
        bool ok = true;
        std::string detail;
        for (const auto& c : battery) {
            const auto est = estimate_dos(c.s, {10'000'000, 42, 16, 512});
            const auto cmp = compare_to_exact(est, build_dos(c.s), 4.0);
            ok = ok && cmp.fraction_within() >= 0.99;
            detail += (detail.empty() ? "" : ", ") + c.name + " " + std::to_string(cmp.within) + "/512";
        }
        return Outcome{ok, detail};
    }, 120.0);

    report(6, "four-level critical point at E_c = 1, k_B T_c = 0.5", [&] {
        const auto cps = critical_points(build_dos(make_spectrum(std::vector<double>{0, 1, 2, 3})));
        for (const auto& cp : cps)
            if (std::abs(cp.energy - 1.0) <= 1e-9)
                return Outcome{std::abs(cp.temperature - 0.5) <= 1e-9 && std::abs(cp.temperature_right - 0.5) <= 1e-9,
                               "E_c = " + sci(cp.energy) + ", T_c = " + std::to_string(cp.temperature) +
                                   ", order " + std::to_string(cp.discontinuity_order)};
        return Outcome{false, "no critical point at E = 1"};
    });

    report(7, "Ising chain (L=3, J=1/4, B=1) has a critical point at k_B T_c = (2J+B)/3", [&] {
        const double J = 0.25, B = 1.0, target = (2 * J + B) / 3;
        const auto cps = critical_points(build_dos(ising_spectrum({3, J, B})));
        std::string list;
        bool found = false;
        for (const auto& cp : cps) {
            list += (list.empty() ? "" : "; ") + std::string("E=") + sci(cp.energy) + " T=" + sci(cp.temperature);
            found = found || std::abs(cp.temperature - target) <= 1e-6;
        }
        return Outcome{found, "target " + sci(target) + ", detected " + list};
    }, 1.0);

    report(8, "smoothness class C^(n-2) with a jump at order n-1 (dims 4-8)", [&] {
        bool ok = true;
        int knots = 0;
        for (std::size_t dim = 4; dim <= 8; ++dim) {
            for (int trial = 0; trial < 10; ++trial) {
                const auto e = oracle::random_ladder(rng, dim, 0.1, 1.0);
                const auto d = build_dos(make_spectrum(e));
                const std::size_t n = dim - 1;
                for (std::size_t k = 1; k + 1 < e.size(); ++k) {
                    ++knots;
                    const double h = std::min(e[k] - e[k - 1], e[k + 1] - e[k]);
                    const double peak = std::max({eval_dos(d, e[k]), eval_dos(d, 0.5 * (e[k] + e[k - 1])),
                                                  eval_dos(d, 0.5 * (e[k] + e[k + 1]))});
                    for (unsigned order = 0; order < n; ++order) {
                        const auto v = eval_dos_derivative(d, e[k], order);
                        const double scale = std::max({std::abs(v.left), std::abs(v.right), peak / std::pow(h, order)});
                        const bool jump = std::abs(v.left - v.right) > 1e-8 * scale;
                        if (jump != (order == n - 1)) ok = false;
                    }
                }
            }
        }
        return Outcome{ok, std::to_string(knots) + " interior knots checked"};
    });

    report(9, "Laplace identity, small-beta limit and log-convexity of Z", [&] {
        double worst_identity = 0.0, worst_small = 0.0, worst_centered = 0.0;
        bool convex = true;
        std::uniform_real_distribution<double> lb(std::log(0.5), std::log(20.0));
        for (int trial = 0; trial < 300; ++trial) {
            const auto e = oracle::random_ladder(rng, 2 + trial % 7, 0.1, 1.0);
            const auto s = make_spectrum(e);
            const auto d = build_dos(s);
            const double beta = std::exp(lb(rng));
            // Closed-form sum evaluated here in 50-digit arithmetic.
            Big z = 0;
            const Big bb = beta, bpi = boost::math::constants::pi<Big>();
            for (std::size_t k = 0; k < e.size(); ++k) {
                Big term = boost::multiprecision::exp(-bb * Big(e[k]));
                for (std::size_t l = 0; l < e.size(); ++l)
                    if (l != k) term *= bpi / (bb * (Big(e[l]) - Big(e[k])));
                z += term;
            }
            worst_identity = std::max(worst_identity, rel(partition_stable(d, beta), static_cast<double>(z)));
            worst_identity = std::max(worst_identity, rel(partition_closed(s, beta), static_cast<double>(z)));

            double vol = 1.0;
            for (std::size_t k = 1; k < e.size(); ++k) vol *= pi / static_cast<double>(k);
            // At beta = 1e-6/width the first-order term beta*<E> is still visible
            // unless the spectrum is centred; compare against V(1 - beta<E>) and
            // separately against V for the centred copy.
            const double b0 = 1e-6 / s.width();
            double mean = 0.0;
            for (double x : e) mean += x;
            mean /= static_cast<double>(e.size());
            worst_small = std::max(worst_small, rel(partition_stable(d, b0), vol * (1.0 - b0 * mean)));
            std::vector<double> centred = e;
            for (auto& x : centred) x -= mean;
            worst_centered = std::max(worst_centered, rel(partition_stable(build_dos(make_spectrum(centred)), b0), vol));

            if (trial % 10 == 0) {
                for (double b = 0.05; b < 40; b *= 1.25) {
                    const double h = 1e-3 * b;
                    const double second = (log_partition(d, b + h) - 2 * log_partition(d, b) + log_partition(d, b - h));
                    if (second < -1e-12 * std::abs(log_partition(d, b))) convex = false;
                }
            }
        }
        return Outcome{worst_identity <= 1e-10 && worst_small <= 1e-8 && worst_centered <= 1e-8 && convex,
                       "identity max rel err " + sci(worst_identity) + ", beta=1e-6/width: " + sci(worst_small) +
                           " vs V(1-beta<E>), " + sci(worst_centered) + " vs V (centred), log-convex " +
                           (convex ? "yes" : "NO")};
    });

    report(10, "equal temperatures at interior entropy maxima (100 instances)", [&] {
        std::uniform_int_distribution<unsigned> count(1, 8);
        std::uniform_real_distribution<double> u(0.02, 0.98);
        int interior = 0, attempts = 0;
        double worst = 0.0;
        while (interior < 100 && attempts < 1000) {
            ++attempts;
            const auto d1 = build_dos(make_spectrum(oracle::random_ladder(rng, 4 + attempts % 5, 0.05, 1.5)));
            const auto d2 = build_dos(make_spectrum(oracle::random_ladder(rng, 4 + (attempts / 5) % 5, 0.05, 1.5)));
            const double E1 = d1.lower() + u(rng) * (mode_lower(d1) - d1.lower());
            const double E2 = d2.lower() + u(rng) * (mode_lower(d2) - d2.lower());
            const auto r = equilibrate(d1, E1, count(rng), d2, E2, count(rng));
            if (r.boundary) continue;
            ++interior;
            worst = std::max(worst, std::abs(r.T1 - r.T2) / std::abs(r.T1));
        }
        return Outcome{interior == 100 && worst <= 1e-8,
                       std::to_string(interior) + " interior optima, max |T1-T2|/T1 " + sci(worst)};
    });

    report(11, "grand density: marginal reproduces three-level density; pi^2 on the simplex", [&] {
        double worst = 0.0;
        for (int trial = 0; trial < 100; ++trial) {
            const auto e = oracle::random_ladder(rng, 3, 0.02, 2.0);
            const auto s = make_spectrum(e);
            std::uniform_real_distribution<double> ue(e[0], e[2]);
            for (int i = 0; i < 100; ++i) {
                const double x = ue(rng);
                worst = std::max(worst, rel(marginalize_to_energy(s, x), three_level_exact(e[0], e[1], e[2], x)));
            }
        }
        std::uniform_real_distribution<double> u(0.0, 1.0);
        bool flat = true;
        for (int i = 0; i < 10000; ++i) {
            const double p = u(rng), q = u(rng);
            const double expect = (p > 0 && q > 0 && p + q < 1) ? pi * pi : 0.0;
            if (std::abs(p + q - 1.0) > 1e-12 && grand_dos(p, q) != expect) flat = false;
        }
        const auto est = estimate_grand(make_spectrum(std::vector<double>{0, 1, 2}), {4'000'000, 42, 16, 32});
        std::size_t inside = 0, within = 0;
        for (std::size_t i = 0; i < est.bins; ++i)
            for (std::size_t j = 0; j < est.bins; ++j) {
                if (est.edge(i + 1) + est.edge(j + 1) > 1.0) continue;
                ++inside;
                const auto k = est.index(i, j);
                if (std::abs(est.density[k] - pi * pi) <= 4 * est.std_error[k]) ++within;
            }
        const double frac = static_cast<double>(within) / static_cast<double>(inside);
        return Outcome{worst <= 1e-10 && flat && frac >= 0.99,
                       "marginal max rel err " + sci(worst) + ", pointwise pi^2 " + (flat ? "ok" : "WRONG") +
                           ", MC interior cells " + std::to_string(within) + "/" + std::to_string(inside)};
    });

    report(12, "beta gap shrinks under N-fold composition of the three-level ladder", [&] {
        const auto one = build_dos(make_spectrum(std::vector<double>{0, 1, 2}));
        double prev = INFINITY;
        bool shrinking = true;
        std::string gaps;
        for (unsigned n : {1u, 2u, 4u, 8u}) {
            const auto r = beta_temperature_consistency(compose(one, n), 0.5 * n);
            shrinking = shrinking && std::isfinite(r.gap) && r.gap < prev;
            prev = r.gap;
            gaps += (gaps.empty() ? "" : ", ") + std::string("N=") + std::to_string(n) + " " + sci(r.gap);
        }
        return Outcome{shrinking, "relative gaps " + gaps};
    });

    const fs::path work = fs::temp_directory_path() / ("qmce_acceptance_" + std::to_string(::getpid()));
    fs::create_directories(work);

    report(13, "mc-verify output is byte-identical across runs and thread counts", [&] {
        const std::string args = "mc-verify --ising --spins 3 --J 0.25 --B 1 --samples 2000000 --seed 1234 --out ";
        const auto a = work / "t1.csv", b = work / "t1_again.csv", c = work / "t8.csv";
        const int ra = run_cli(args + "'" + a.string() + "'", "QMCE_THREADS=1");
        const int rb = run_cli(args + "'" + b.string() + "'", "QMCE_THREADS=1");
        const int rc = run_cli(args + "'" + c.string() + "'", "QMCE_THREADS=8");
        const auto sa = slurp(a);
        const bool same = !sa.empty() && sa == slurp(b) && sa == slurp(c);
        return Outcome{ra == 0 && rb == 0 && rc == 0 && same,
                       std::string("exit codes ") + std::to_string(ra) + "/" + std::to_string(rb) + "/" +
                           std::to_string(rc) + ", " + std::to_string(sa.size()) + " bytes, " +
                           (same ? "identical" : "DIFFERENT")};
    });

    // Specific-heat curves for the four-level system and the Ising chain are
    // written beside the binary. Their behaviour below T_c is reported but
    // does not affect the exit status.
    struct Curve {
        std::string file, args;
        double e_c, t_c;
    };
    for (const Curve& c : {Curve{"heat_four_level.csv", "--levels 0,1,2,3", 1.0, 0.5},
                           Curve{"heat_ising_L3.csv", "--ising --spins 3 --J 0.25 --B 1", -0.75, 0.5}}) {
        const fs::path out = fs::current_path() / c.file;
        const int rc = run_cli("thermo " + c.args + " --grid 4000 --out '" + out.string() + "'", "");
        if (rc != 0) {
            std::cout << "FAIL  [data] " << c.file << ": thermo exited " << rc << std::endl;
            continue;
        }
        const auto rows = read_numeric_csv(out);
        // Rows on the lowest piece, approaching the knot from below.
        std::vector<std::pair<double, double>> below;
        for (const auto& r : rows)
            if (r[0] < c.e_c && r[2] > 0.0) below.push_back({r[2], r[3]});
        std::cout << "PASS  [data] " << c.file << " written (" << rows.size() << " rows)" << std::endl;
        if (below.size() < 10) {
            std::cout << "FAIL  [data] " << c.file << ": too few rows below T_c" << std::endl;
            continue;
        }
        const double c_half = std::find_if(below.begin(), below.end(), [&](auto& p) { return p.first >= 0.5 * c.t_c; })->second;
        const double c_near = below.back().second;
        const bool diverging = c_near > 10.0 * c_half;
        std::cout << (diverging ? "PASS" : "FAIL") << "  [data] C growth approaching T_c from below, " << c.file
                  << ": C(T_c/2) = " << sci(c_half) << ", C(T=" << sci(below.back().first) << ") = " << sci(c_near)
                  << (diverging ? "" : "; C is constant on the lowest piece (not gated)") << std::endl;
    }
    fs::remove_all(work);

    std::cout << (failures == 0 ? "ALL 13 CRITERIA PASS" : std::to_string(failures) + " CRITERIA FAILED") << std::endl;
    return failures == 0 ? 0 : 1;
}
