#pragma once

// Brute-force oracle for the density of states: draw Fubini-Study uniform
// pure states, histogram their energy expectation (or their projector
// expectations), and scale to the total volume pi^n/n!.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "qmce/dos.hpp"
#include "qmce/error.hpp"
#include "qmce/philox.hpp"
#include "qmce/spectrum.hpp"

namespace qmce {

enum class SamplingMethod {
    gaussian,     // complex Gaussian amplitudes, normalized
    exponential,  // unit-rate exponentials, normalized (flat Dirichlet)
};

struct McConfig {
    std::uint64_t samples = 1'000'000;
    std::uint64_t seed = 42;
    unsigned streams = 16;
    std::size_t bins = 512;
};

inline void validate(const McConfig& cfg) {
    if (cfg.bins == 0) throw InvalidInput("monte carlo: bins must be positive");
    if (cfg.streams == 0) throw InvalidInput("monte carlo: streams must be positive");
    if (cfg.samples < cfg.bins) throw InvalidInput("monte carlo: samples must be >= bins");
}

/// Binned density estimate. `density` targets the mean of Omega over each
/// bin; `std_error` is the binomial standard error of the observed count.
struct McEstimate {
    std::vector<double> bin_edges;
    std::vector<std::uint64_t> counts;
    std::vector<double> density;
    std::vector<double> std_error;
    double volume = 0.0;
    std::uint64_t samples = 0;
    std::uint64_t seed = 0;
    unsigned streams = 0;
    SamplingMethod method = SamplingMethod::gaussian;

    std::size_t bins() const noexcept { return counts.size(); }
    double width(std::size_t i) const noexcept { return bin_edges[i + 1] - bin_edges[i]; }
};

/// Square-bin histogram over (p1, p2) in [0,1]^2, row-major in p1.
struct McEstimate2D {
    std::size_t bins = 0;
    std::vector<std::uint64_t> counts;
    std::vector<double> density;
    std::vector<double> std_error;
    double volume = 0.0;
    std::uint64_t samples = 0;
    std::uint64_t seed = 0;
    unsigned streams = 0;

    std::size_t index(std::size_t ip, std::size_t iq) const noexcept { return ip * bins + iq; }
    double edge(std::size_t i) const noexcept { return static_cast<double>(i) / static_cast<double>(bins); }
};

/// Draws one Fubini-Study uniform state and writes its basis probabilities
/// |c_k|^2 into `probs`. The Gaussian route takes real parts from the first
/// half of the normal stream and imaginary parts from the second half, so no
/// amplitude is built from a single Box-Muller pair.
inline void sample_state(Philox4x32& rng, std::span<double> probs, SamplingMethod method,
                         std::vector<double>& scratch) {
    const std::size_t dim = probs.size();
    double total = 0.0;
    if (method == SamplingMethod::exponential) {
        for (auto& p : probs) total += (p = exponential(rng));
    } else {
        scratch.resize(2 * dim + 1);
        for (std::size_t j = 0; j < 2 * dim; j += 2) {
            const auto z = normal_pair(rng);
            scratch[j] = z[0];
            scratch[j + 1] = z[1];
        }
        for (std::size_t k = 0; k < dim; ++k) {
            const double re = scratch[k], im = scratch[k + dim];
            total += (probs[k] = re * re + im * im);
        }
    }
    for (auto& p : probs) p /= total;
}

inline std::vector<double> sample_state(std::size_t dim, Philox4x32& rng,
                                        SamplingMethod method = SamplingMethod::gaussian) {
    if (dim < 2) throw InvalidInput("sample_state: dimension must be >= 2");
    std::vector<double> probs(dim), scratch;
    sample_state(rng, probs, method, scratch);
    return probs;
}

/// Worker count: QMCE_THREADS if set, else the hardware concurrency.
inline unsigned default_threads() {
    if (const char* env = std::getenv("QMCE_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

namespace detail {

inline std::uint64_t stream_share(std::uint64_t samples, unsigned streams, unsigned i) {
    return samples / streams + (i < samples % streams ? 1 : 0);
}

/// Runs fill(stream, histogram) for each stream on up to `threads` workers,
/// then sums the per-stream histograms in stream order.
template <class Fill>
std::vector<std::uint64_t> run_streams(unsigned streams, unsigned threads, std::size_t cells, Fill fill) {
    std::vector<std::vector<std::uint64_t>> per_stream(streams, std::vector<std::uint64_t>(cells, 0));
    std::atomic<unsigned> next{0};
    auto worker = [&] {
        for (unsigned s = next++; s < streams; s = next++) fill(s, per_stream[s]);
    };
    const unsigned workers = std::max(1u, std::min(threads == 0 ? default_threads() : threads, streams));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < workers; ++t) pool.emplace_back(worker);
    }
    std::vector<std::uint64_t> total(cells, 0);
    for (const auto& h : per_stream)
        for (std::size_t i = 0; i < cells; ++i) total[i] += h[i];
    return total;
}

}  // namespace detail

/// Histogram of E = sum_k p_k E_k for FS-uniform states, scaled to pi^n/n!.
/// Bins are half-open except the last. Output is a function of (spectrum,
/// config, method) only; `threads` changes nothing but wall time.
inline McEstimate estimate_dos(const Spectrum& s, const McConfig& cfg,
                               SamplingMethod method = SamplingMethod::gaussian, unsigned threads = 0) {
    validate(cfg);
    if (s.distinct() < 2) throw InvalidInput("monte carlo: spectrum has a single distinct level");
    const auto energies = s.eigenvalues();
    const double lo = s.min_energy(), hi = s.max_energy();
    const std::size_t bins = cfg.bins;
    const double inv_w = static_cast<double>(bins) / (hi - lo);

    auto counts = detail::run_streams(cfg.streams, threads, bins, [&](unsigned stream, std::vector<std::uint64_t>& h) {
        auto rng = make_stream(cfg.seed, stream);
        std::vector<double> probs(energies.size()), scratch;
        const auto n = detail::stream_share(cfg.samples, cfg.streams, stream);
        for (std::uint64_t t = 0; t < n; ++t) {
            sample_state(rng, probs, method, scratch);
            double e = 0.0;
            for (std::size_t k = 0; k < probs.size(); ++k) e += probs[k] * energies[k];
            const double pos = (e - lo) * inv_w;
            const auto b = pos <= 0.0 ? std::size_t{0} : std::min(bins - 1, static_cast<std::size_t>(pos));
            ++h[b];
        }
    });

    McEstimate est;
    est.volume = fubini_study_volume(s.n());
    est.samples = cfg.samples;
    est.seed = cfg.seed;
    est.streams = cfg.streams;
    est.method = method;
    est.bin_edges.resize(bins + 1);
    for (std::size_t i = 0; i <= bins; ++i)
        est.bin_edges[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins);
    est.bin_edges.back() = hi;
    const double N = static_cast<double>(cfg.samples);
    est.density.resize(bins);
    est.std_error.resize(bins);
    for (std::size_t i = 0; i < bins; ++i) {
        const double c = static_cast<double>(counts[i]);
        const double scale = est.volume / (N * est.width(i));
        est.density[i] = c * scale;
        est.std_error[i] = std::sqrt(c * (1.0 - c / N)) * scale;
    }
    est.counts = std::move(counts);
    return est;
}

/// Histogram of (p1, p2) for three-level systems, normalized to pi^2/2.
inline McEstimate2D estimate_grand(const Spectrum& s, const McConfig& cfg,
                                   SamplingMethod method = SamplingMethod::gaussian, unsigned threads = 0) {
    validate(cfg);
    if (s.dim() != 3) throw InvalidInput("estimate_grand: requires a three-level system (dim 3), got dim " +
                                         std::to_string(s.dim()));
    const std::size_t bins = cfg.bins;
    auto cell = [bins](double p) {
        const double pos = p * static_cast<double>(bins);
        return pos <= 0.0 ? std::size_t{0} : std::min(bins - 1, static_cast<std::size_t>(pos));
    };
    auto counts = detail::run_streams(cfg.streams, threads, bins * bins,
                                      [&](unsigned stream, std::vector<std::uint64_t>& h) {
        auto rng = make_stream(cfg.seed, stream);
        std::vector<double> probs(3), scratch;
        const auto n = detail::stream_share(cfg.samples, cfg.streams, stream);
        for (std::uint64_t t = 0; t < n; ++t) {
            sample_state(rng, probs, method, scratch);
            ++h[cell(probs[0]) * bins + cell(probs[1])];
        }
    });

    McEstimate2D est;
    est.bins = bins;
    est.volume = fubini_study_volume(2);
    est.samples = cfg.samples;
    est.seed = cfg.seed;
    est.streams = cfg.streams;
    const double N = static_cast<double>(cfg.samples);
    // Total mass pi^2/2 spread over cells of area 1/bins^2; flat pi^2 inside the simplex.
    const double scale = est.volume * static_cast<double>(bins * bins) / N;
    est.density.resize(bins * bins);
    est.std_error.resize(bins * bins);
    for (std::size_t i = 0; i < bins * bins; ++i) {
        const double c = static_cast<double>(counts[i]);
        est.density[i] = c * scale;
        est.std_error[i] = std::sqrt(c * (1.0 - c / N)) * scale;
    }
    est.counts = std::move(counts);
    return est;
}

/// Per-bin comparison of an estimate against the exact bin-averaged Omega.
struct BinCheck {
    double lo, hi;
    double estimate;
    double std_error;  // observed
    double exact;      // mean of Omega over the bin
    double z;          // deviation in units of the binomial error at the exact bin probability
};

struct McComparison {
    std::vector<BinCheck> rows;
    std::size_t within = 0;
    double fraction_within() const noexcept {
        return rows.empty() ? 0.0 : static_cast<double>(within) / static_cast<double>(rows.size());
    }
};

inline McComparison compare_to_exact(const McEstimate& est, const PiecewiseDos& d, double sigmas = 4.0) {
    McComparison out;
    const double N = static_cast<double>(est.samples);
    for (std::size_t i = 0; i < est.bins(); ++i) {
        const double lo = est.bin_edges[i], hi = est.bin_edges[i + 1];
        const double w = hi - lo;
        const double mass = integrate_dos(d, lo, hi);
        const double p = std::clamp(mass / est.volume, 0.0, 1.0);
        const double sigma = std::sqrt(N * p * (1.0 - p)) * est.volume / (N * w);
        const double exact = mass / w;
        const double dev = est.density[i] - exact;
        const double z = sigma > 0.0 ? dev / sigma : (dev == 0.0 ? 0.0 : std::copysign(INFINITY, dev));
        if (std::abs(z) <= sigmas) ++out.within;
        out.rows.push_back({lo, hi, est.density[i], est.std_error[i], exact, z});
    }
    return out;
}

}  // namespace qmce
