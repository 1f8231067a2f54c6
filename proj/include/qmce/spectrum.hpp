#pragma once

// Finite Hamiltonian spectra: construction, Ising-chain enumeration and
// plain-text ingestion.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qmce/error.hpp"

namespace qmce {

struct Level {
    double energy;
    std::size_t multiplicity;

    friend bool operator==(const Level&, const Level&) = default;
};

/// Eigenvalues closer than this are treated as one degenerate level.
inline constexpr double kMergeRelTol = 1e-9;
inline constexpr double kMergeAbsTol = 1e-12;

inline bool energies_coincide(double a, double b) noexcept {
    return std::abs(a - b) <= std::max(kMergeAbsTol, kMergeRelTol * std::max(std::abs(a), std::abs(b)));
}

/// Sorted distinct eigenvalues with multiplicities. Immutable once built;
/// obtain one through make_spectrum, ising_spectrum or load_spectrum.
class Spectrum {
public:
    const std::vector<Level>& levels() const noexcept { return levels_; }
    std::size_t dim() const noexcept { return dim_; }
    /// n, the complex dimension of the pure-state manifold (dim - 1).
    std::size_t n() const noexcept { return dim_ - 1; }
    std::size_t distinct() const noexcept { return levels_.size(); }
    bool nondegenerate() const noexcept {
        return std::all_of(levels_.begin(), levels_.end(), [](const Level& l) { return l.multiplicity == 1; });
    }
    double min_energy() const noexcept { return levels_.front().energy; }
    double max_energy() const noexcept { return levels_.back().energy; }
    double width() const noexcept { return max_energy() - min_energy(); }

    /// Eigenvalues repeated per multiplicity, ascending.
    std::vector<double> eigenvalues() const {
        std::vector<double> out;
        out.reserve(dim_);
        for (const auto& l : levels_) out.insert(out.end(), l.multiplicity, l.energy);
        return out;
    }

    friend bool operator==(const Spectrum&, const Spectrum&) = default;

private:
    Spectrum(std::vector<Level> levels, std::size_t dim) : levels_(std::move(levels)), dim_(dim) {}
    friend Spectrum make_spectrum(std::span<const Level> raw);

    std::vector<Level> levels_;
    std::size_t dim_ = 0;
};

inline Spectrum make_spectrum(std::span<const Level> raw) {
    if (raw.empty()) throw InvalidInput("spectrum: empty level list");
    std::vector<Level> sorted(raw.begin(), raw.end());
    for (const auto& l : sorted) {
        if (l.multiplicity < 1) throw InvalidInput("spectrum: multiplicity must be >= 1");
        if (!std::isfinite(l.energy)) throw InvalidInput("spectrum: non-finite energy");
    }
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const Level& a, const Level& b) { return a.energy < b.energy; });

    // Clusters are anchored at their lowest energy, so repeated application is a no-op.
    std::vector<Level> merged;
    std::size_t dim = 0;
    for (const auto& l : sorted) {
        if (!merged.empty() && energies_coincide(merged.back().energy, l.energy))
            merged.back().multiplicity += l.multiplicity;
        else
            merged.push_back(l);
        dim += l.multiplicity;
    }
    if (dim < 2) throw InvalidInput("spectrum: Hilbert dimension must be >= 2 (got " + std::to_string(dim) + ")");
    return Spectrum(std::move(merged), dim);
}

inline Spectrum make_spectrum(std::initializer_list<Level> raw) {
    return make_spectrum(std::span<const Level>(raw.begin(), raw.size()));
}

/// Nondegenerate spectrum from a list of energies (each multiplicity 1).
inline Spectrum make_spectrum(std::span<const double> energies) {
    std::vector<Level> raw;
    raw.reserve(energies.size());
    for (double e : energies) raw.push_back({e, 1});
    return make_spectrum(raw);
}

/// Periodic classical chain H = -J sum_k s_k s_{k+1} - B sum_k s_k, s_k = +-1.
struct IsingChainSpec {
    int spins = 3;
    double coupling = 0.0;  // J
    double field = 0.0;     // B
};

inline constexpr int kMaxIsingSpins = 24;

inline Spectrum ising_spectrum(const IsingChainSpec& spec) {
    if (spec.spins < 2) throw InvalidInput("ising: need at least 2 spins");
    if (spec.spins > kMaxIsingSpins)
        throw ResourceLimit("ising: " + std::to_string(spec.spins) + " spins exceeds the enumeration limit of " +
                            std::to_string(kMaxIsingSpins));
    const int L = spec.spins;
    // Energies depend only on (bond sum, magnetization); count those exactly first.
    std::map<std::pair<int, int>, std::size_t> counts;
    const std::uint32_t configs = std::uint32_t{1} << L;
    for (std::uint32_t c = 0; c < configs; ++c) {
        int bonds = 0, mag = 0;
        for (int k = 0; k < L; ++k) {
            const int s = (c >> k) & 1u ? 1 : -1;
            const int t = (c >> ((k + 1) % L)) & 1u ? 1 : -1;
            bonds += s * t;
            mag += s;
        }
        ++counts[{bonds, mag}];
    }
    std::vector<Level> raw;
    raw.reserve(counts.size());
    for (const auto& [key, mult] : counts)
        raw.push_back({-spec.coupling * key.first - spec.field * key.second, mult});
    return make_spectrum(raw);
}

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto ws = " \t\r\n\f\v";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

}  // namespace detail

/// Parses `<energy> [<multiplicity>]` lines; `#` starts a comment.
inline std::vector<Level> parse_levels(std::istream& in) {
    std::vector<Level> raw;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view v = line;
        if (auto hash = v.find('#'); hash != std::string_view::npos) v = v.substr(0, hash);
        v = detail::trim(v);
        if (v.empty()) continue;

        std::istringstream fields{std::string(v)};
        std::string energy_tok, mult_tok, extra;
        fields >> energy_tok >> mult_tok >> extra;
        if (!extra.empty()) throw ParseError(lineno, "expected '<energy> [<multiplicity>]', found extra field '" + extra + "'");

        Level lvl{0.0, 1};
        auto [p, ec] = std::from_chars(energy_tok.data(), energy_tok.data() + energy_tok.size(), lvl.energy);
        if (ec != std::errc{} || p != energy_tok.data() + energy_tok.size() || !std::isfinite(lvl.energy))
            throw ParseError(lineno, "invalid energy '" + energy_tok + "'");
        if (!mult_tok.empty()) {
            auto [q, ec2] = std::from_chars(mult_tok.data(), mult_tok.data() + mult_tok.size(), lvl.multiplicity);
            if (ec2 != std::errc{} || q != mult_tok.data() + mult_tok.size() || lvl.multiplicity < 1)
                throw ParseError(lineno, "invalid multiplicity '" + mult_tok + "'");
        }
        raw.push_back(lvl);
    }
    return raw;
}

inline Spectrum parse_spectrum(std::istream& in) { return make_spectrum(parse_levels(in)); }

inline Spectrum load_spectrum(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open spectrum file '" + path + "'");
    return parse_spectrum(in);
}

}  // namespace qmce
