#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "qmce/cli.hpp"

using namespace qmce;
using namespace qmce::cli;

namespace {

void add_source(CLI::App* cmd, SpectrumSource& src, const std::string& suffix = "") {
    const std::string which = suffix.empty() ? "" : " (system " + suffix + ")";
    cmd->add_option("--levels" + suffix, src.levels, "Comma-separated eigenvalues" + which);
    cmd->add_option("--degeneracy" + suffix, src.degeneracy, "Comma-separated multiplicities matching --levels" + which);
    cmd->add_option("--spectrum" + suffix, src.file, "Spectrum file: '<energy> [<multiplicity>]' per line" + which);
    cmd->add_flag("--ising" + suffix, src.ising, "Use a periodic classical Ising chain" + which);
    cmd->add_option("--spins" + suffix, src.chain.spins, "Ising chain length")->capture_default_str();
    cmd->add_option("--J" + suffix, src.chain.coupling, "Ising coupling")->capture_default_str();
    cmd->add_option("--B" + suffix, src.chain.field, "Ising field")->capture_default_str();
}

/// Writes the finished CSV to --out, or stdout when no path was given.
void deliver(const std::string& path, const std::string& text) {
    if (path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw UsageError("cannot open output file '" + path + "'");
    f << text;
    f.close();
    if (!f) throw std::runtime_error("failed writing '" + path + "'");
}

void emit_gnuplot(bool wanted, const std::string& command, const std::string& out) {
    if (!wanted) return;
    if (out.empty()) throw UsageError("--gnuplot needs --out so the script has a data file to reference");
    std::ofstream gp(out + ".gp");
    if (!gp) throw UsageError("cannot write '" + out + ".gp'");
    gp << gnuplot_script(command, out);
}

std::optional<double> opt(CLI::Option* o, double v) { return o->count() ? std::optional<double>(v) : std::nullopt; }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quantum microcanonical density of states and thermodynamics"};
    app.require_subcommand(1);

    SpectrumSource src, src2;
    std::string out;
    std::size_t grid = 1000;
    bool gnuplot = false;
    double kb = 1.0;

    auto common = [&](CLI::App* cmd, bool with_grid = true) {
        add_source(cmd, src);
        cmd->add_option("--out", out, "Write CSV here instead of stdout");
        if (with_grid) cmd->add_option("--grid", grid, "Grid points")->capture_default_str();
    };

    auto* dos = app.add_subcommand("dos", "Exact density of states Omega(E)");
    common(dos);
    dos->add_flag("--gnuplot", gnuplot, "Also write <out>.gp");

    auto* thermo = app.add_subcommand("thermo", "Entropy, temperature and specific heat; critical points");
    common(thermo);
    std::string criticals_path;
    double e_min = 0, e_max = 0, t_min = 0, t_max = 0;
    thermo->add_option("--kb", kb, "Boltzmann constant for display")->capture_default_str();
    auto* o_emin = thermo->add_option("--e-min", e_min, "Lower end of the energy range");
    auto* o_emax = thermo->add_option("--e-max", e_max, "Upper end of the energy range");
    auto* o_tmin = thermo->add_option("--t-min", t_min, "Lower end of the temperature range");
    auto* o_tmax = thermo->add_option("--t-max", t_max, "Upper end of the temperature range");
    thermo->add_option("--criticals", criticals_path, "Critical-point CSV (default <out>.criticals.csv, or stdout)");
    thermo->add_flag("--gnuplot", gnuplot, "Also write <out>.gp");

    auto* canonical = app.add_subcommand("canonical", "Canonical partition function and thermal energy");
    common(canonical);
    double beta = 0, beta_min = 0, beta_max = 0;
    auto* o_beta = canonical->add_option("--beta", beta, "Single inverse temperature");
    auto* o_bmin = canonical->add_option("--beta-min", beta_min, "Lower end of the beta range (default 0.1)");
    auto* o_bmax = canonical->add_option("--beta-max", beta_max, "Upper end of the beta range (default 10)");
    canonical->add_flag("--gnuplot", gnuplot, "Also write <out>.gp");

    auto* mc = app.add_subcommand("mc-verify", "Monte Carlo check of Omega(E) against the exact result");
    common(mc, false);
    McVerifyOptions mco;
    std::string method = "gaussian";
    mc->add_option("--samples", mco.config.samples, "Number of sampled states")->capture_default_str();
    mc->add_option("--seed", mco.config.seed, "RNG seed")->capture_default_str();
    mc->add_option("--bins", mco.config.bins, "Histogram bins")->capture_default_str();
    mc->add_option("--streams", mco.config.streams, "Independent RNG streams")->capture_default_str();
    mc->add_option("--sigmas", mco.sigmas, "Per-bin acceptance threshold in standard errors")->capture_default_str();
    mc->add_option("--method", method, "gaussian or exponential")
        ->check(CLI::IsMember({"gaussian", "exponential"}))
        ->capture_default_str();
    mc->add_flag("--gnuplot", gnuplot, "Also write <out>.gp");

    auto* grand = app.add_subcommand("grand", "Three-level joint density over (p, q)");
    add_source(grand, src);
    grand->add_option("--out", out, "Write CSV here instead of stdout");
    std::size_t grand_grid = 100;
    grand->add_option("--grid", grand_grid, "Cells per side")->capture_default_str();
    std::string marginal_path;
    grand->add_option("--marginal", marginal_path, "Also write the marginal E,Omega CSV here");
    grand->add_flag("--gnuplot", gnuplot, "Also write <out>.gp");

    auto* equil = app.add_subcommand("equilibrate", "Energy exchange maximizing total entropy");
    add_source(equil, src, "");
    add_source(equil, src2, "2");
    equil->add_option("--out", out, "Write CSV here instead of stdout");
    EquilibrateOptions eo;
    equil->add_option("--E1", eo.E1, "Per-constituent energy of system 1")->required();
    equil->add_option("--E2", eo.E2, "Per-constituent energy of system 2")->required();
    equil->add_option("--N1", eo.N1, "Constituents in system 1")->capture_default_str();
    equil->add_option("--N2", eo.N2, "Constituents in system 2")->capture_default_str();
    equil->add_option("--kb", eo.kb, "Boltzmann constant for display")->capture_default_str();

    auto* ising = app.add_subcommand("ising", "Print an Ising chain spectrum in spectrum-file format");
    IsingChainSpec chain{3, 0.25, 1.0};
    ising->add_option("--spins", chain.spins, "Chain length")->capture_default_str();
    ising->add_option("--J", chain.coupling, "Coupling")->capture_default_str();
    ising->add_option("--B", chain.field, "Field")->capture_default_str();
    ising->add_option("--out", out, "Write here instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kSuccess : kUsage;
    }

    try {
        // Buffered so that a failing command never leaves a truncated file behind.
        std::ostringstream os;
        int status = kSuccess;

        if (dos->parsed()) {
            write_dos(os, resolve(src), grid);
            emit_gnuplot(gnuplot, "dos", out);
        } else if (thermo->parsed()) {
            ThermoOptions o{grid, kb, opt(o_emin, e_min), opt(o_emax, e_max), opt(o_tmin, t_min), opt(o_tmax, t_max)};
            const auto s = resolve(src);
            if (criticals_path.empty() && !out.empty()) criticals_path = out + ".criticals.csv";
            if (criticals_path.empty()) {
                std::ostringstream crit;
                write_thermo(os, crit, s, o);
                os << '\n' << crit.str();
            } else {
                std::ofstream crit(criticals_path);
                if (!crit) throw UsageError("cannot open '" + criticals_path + "'");
                write_thermo(os, crit, s, o);
            }
            emit_gnuplot(gnuplot, "thermo", out);
        } else if (canonical->parsed()) {
            CanonicalOptions o{opt(o_beta, beta), opt(o_bmin, beta_min), opt(o_bmax, beta_max), grid};
            write_canonical(os, resolve(src), o);
            emit_gnuplot(gnuplot, "canonical", out);
        } else if (mc->parsed()) {
            mco.method = method == "exponential" ? SamplingMethod::exponential : SamplingMethod::gaussian;
            const auto cmp = write_mc_verify(os, resolve(src), mco);
            // The summary stays off the CSV stream so the data file is pure CSV.
            (out.empty() ? std::cerr : std::cout) << mc_summary(cmp, mco) << '\n';
            emit_gnuplot(gnuplot, "mc-verify", out);
            if (!mc_passed(cmp, mco)) status = kVerification;
        } else if (grand->parsed()) {
            const auto s = resolve(src);
            write_grand(os, s, grand_grid);
            if (!marginal_path.empty()) {
                std::ofstream m(marginal_path);
                if (!m) throw UsageError("cannot open '" + marginal_path + "'");
                write_marginal(m, s, grid);
            }
            emit_gnuplot(gnuplot, "grand", out);
        } else if (equil->parsed()) {
            const auto s1 = resolve(src, "system 1");
            const auto s2 = src2.given() ? resolve(src2, "system 2") : s1;
            const auto r = write_equilibrate(os, s1, s2, eo);
            if (r.boundary) std::cerr << "note: optimum lies on the feasibility boundary; T1 and T2 need not agree\n";
        } else if (ising->parsed()) {
            write_spectrum(os, ising_spectrum(chain),
                           "periodic Ising chain L=" + std::to_string(chain.spins) + " J=" + fmt(chain.coupling) +
                               " B=" + fmt(chain.field));
        }
        deliver(out, os.str());
        return status;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.get_subcommands().front()->help();
        return kUsage;
    } catch (const NoSolution& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kNumerical;
    } catch (const NumericalFailure& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    }
}
