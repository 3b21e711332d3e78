#pragma once

// Shot-based measurement: computational-basis sampling of rho, per-shot
// Ising energies, cost estimates, and the shot-noise floor of the gradient
// estimator.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <span>
#include <sstream>
#include <vector>

#include "ansatz.hpp"
#include "densmat.hpp"
#include "error.hpp"
#include "estimate.hpp"
#include "icla.hpp"
#include "seed.hpp"

namespace qland {

/// R measured bitstrings; outcome bit i is qubit i.
struct ShotBatch {
    std::size_t n_qubits = 0;
    std::vector<std::uint64_t> outcomes;
    std::uint64_t seed = 0;

    [[nodiscard]] std::size_t shots() const noexcept { return outcomes.size(); }

    [[nodiscard]] std::vector<std::uint8_t> bits(std::size_t shot) const {
        std::vector<std::uint8_t> z(n_qubits);
        for (std::size_t i = 0; i < n_qubits; ++i) {
            z[i] = static_cast<std::uint8_t>((outcomes.at(shot) >> i) & 1U);
        }
        return z;
    }
};

namespace detail {

/// Cumulative distribution of the diagonal of rho, repaired for rounding.
inline std::vector<double> outcome_cdf(const DensityMatrix &rho) {
    std::vector<double> cdf(rho.dim());
    double total = 0.0;
    for (std::size_t z = 0; z < rho.dim(); ++z) {
        double p = rho.population(z);
        if (p < -kPsdTol) {
            std::ostringstream os;
            os << "state corruption: negative population " << p << " at outcome " << z;
            throw NumericalError(os.str());
        }
        p = std::max(p, 0.0);
        total += p;
        cdf[z] = total;
    }
    if (!(total > 0.0)) {
        throw NumericalError("state corruption: zero total probability");
    }
    if (std::abs(total - 1.0) > 1e-12) {
        for (auto &c : cdf) {
            c /= total;
        }
    }
    cdf.back() = 1.0;
    return cdf;
}

/// Mean and standard error from outcome counts, weighting by frequency so a
/// single repeated outcome reproduces its energy exactly.
inline CostEstimate estimate_from_counts(std::span<const std::uint64_t> counts,
                                         std::span<const double> energies,
                                         std::uint64_t shots) {
    const double r = static_cast<double>(shots);
    double mean = 0.0;
    for (std::size_t z = 0; z < counts.size(); ++z) {
        if (counts[z] != 0) {
            mean += (static_cast<double>(counts[z]) / r) * energies[z];
        }
    }
    double var = 0.0;
    for (std::size_t z = 0; z < counts.size(); ++z) {
        if (counts[z] != 0) {
            const double d = energies[z] - mean;
            var += (static_cast<double>(counts[z]) / r) * d * d;
        }
    }
    CostEstimate est;
    est.mean = mean;
    est.shots = shots;
    if (shots > 1) {
        const double sample_var = var * r / (r - 1.0);
        est.std_error = std::sqrt(sample_var / r);
    }
    return est;
}

} // namespace detail

/// r i.i.d. computational-basis measurements of rho.
inline ShotBatch sample_bitstrings(const DensityMatrix &rho, std::size_t r,
                                   std::uint64_t seed) {
    if (r < 1) {
        throw InvalidArgument("need at least one shot");
    }
    const auto cdf = detail::outcome_cdf(rho);
    ShotBatch batch;
    batch.n_qubits = rho.n_qubits();
    batch.seed = seed;
    batch.outcomes.resize(r);
    Rng rng(seed);
    for (auto &o : batch.outcomes) {
        const double u = uniform01(rng);
        const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        o = static_cast<std::uint64_t>(
            std::min<std::ptrdiff_t>(it - cdf.begin(),
                                     static_cast<std::ptrdiff_t>(cdf.size()) - 1));
    }
    return batch;
}

/// Energy of one shot: sum (J/2) s_i s_{i+1} + sum (h/2) s_i, s = 2z - 1.
inline double shot_energy(std::span<const std::uint8_t> z, const IsingHamiltonian &h) {
    if (z.size() != h.n_qubits) {
        throw InvalidArgument("bitstring length " + std::to_string(z.size()) +
                              " does not match " + std::to_string(h.n_qubits) +
                              " qubits");
    }
    double e = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        const double si = 2.0 * static_cast<double>(z[i]) - 1.0;
        e += 0.5 * h.fields[i] * si;
        if (i + 1 < z.size()) {
            const double sj = 2.0 * static_cast<double>(z[i + 1]) - 1.0;
            e += 0.5 * h.couplings[i] * si * sj;
        }
    }
    return e;
}

inline CostEstimate estimate_cost(const ShotBatch &batch, std::span<const double> energies) {
    std::vector<std::uint64_t> counts(energies.size(), 0);
    for (const auto o : batch.outcomes) {
        counts.at(o)++;
    }
    return detail::estimate_from_counts(counts, energies, batch.shots());
}

/// Shot-averaged energy of rho with its standard error.
inline CostEstimate estimate_cost(const DensityMatrix &rho, const IsingHamiltonian &h,
                                  std::size_t r, std::uint64_t seed) {
    if (rho.n_qubits() != h.n_qubits) {
        throw InvalidArgument("state and Hamiltonian sizes differ");
    }
    const auto energies = h.energy_table();
    return estimate_cost(sample_bitstrings(rho, r, seed), energies);
}

inline CostEstimate estimate_cost(const DensityMatrix &rho,
                                  std::span<const double> energies, std::size_t r,
                                  std::uint64_t seed) {
    return estimate_cost(sample_bitstrings(rho, r, seed), energies);
}

/// Sorted per-shot energies and a fixed-bin histogram on [-k c0, k c0].
struct CostSpectrum {
    std::vector<double> sorted_energies;
    double lo = 0.0;
    double hi = 0.0;
    std::vector<std::uint64_t> counts;

    [[nodiscard]] double bin_width() const {
        return (hi - lo) / static_cast<double>(counts.size());
    }
};

inline CostSpectrum cost_spectrum(const ShotBatch &batch, const IsingHamiltonian &h,
                                  std::size_t bins = 60, double k = 3.0) {
    if (batch.outcomes.empty()) {
        throw InvalidArgument("cost spectrum of an empty batch");
    }
    if (bins < 1) {
        throw InvalidArgument("histogram needs at least one bin");
    }
    CostSpectrum s;
    s.sorted_energies.reserve(batch.shots());
    for (const auto o : batch.outcomes) {
        s.sorted_energies.push_back(h.energy(o));
    }
    std::sort(s.sorted_energies.begin(), s.sorted_energies.end());
    s.lo = -k * h.c0;
    s.hi = k * h.c0;
    s.counts.assign(bins, 0);
    const double w = s.bin_width();
    for (const double e : s.sorted_energies) {
        auto b = static_cast<std::ptrdiff_t>(std::floor((e - s.lo) / w));
        b = std::clamp<std::ptrdiff_t>(b, 0, static_cast<std::ptrdiff_t>(bins) - 1);
        s.counts[static_cast<std::size_t>(b)]++;
    }
    return s;
}

/// CSV `sorted_index,energy`.
inline void write_cost_spectrum_csv(std::ostream &os, const CostSpectrum &s) {
    os << "sorted_index,energy\n" << std::setprecision(17);
    for (std::size_t i = 0; i < s.sorted_energies.size(); ++i) {
        os << i << ',' << s.sorted_energies[i] << '\n';
    }
}

/// CSV `param_index,cost_mean,std_error`, rows ordered by increasing cost.
inline void write_sorted_costs_csv(std::ostream &os, const Landscape &ls) {
    std::vector<std::size_t> idx(ls.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return ls.costs[a] < ls.costs[b]; });
    os << "param_index,cost_mean,std_error\n" << std::setprecision(17);
    for (const auto i : idx) {
        os << i << ',' << ls.costs[i] << ',' << ls.cost_errors[i] << '\n';
    }
}

struct NoiseFloor {
    double mean = 0.0;
    double stddev = 0.0;
    std::vector<double> per_landscape;
};

/// Gradient estimate produced by shot noise alone.
///
/// Each synthetic landscape has M = landscape_size(m) random points whose
/// costs are means of r energies of uniformly random bitstrings, i.e. draws
/// from the maximally mixed state that carry no parameter dependence. The
/// full ICLA pipeline (normalised by c0) runs on each landscape.
inline NoiseFloor shot_noise_floor(const IsingHamiltonian &h, std::size_t m,
                                   std::size_t r, std::size_t n_landscapes,
                                   std::uint64_t seed,
                                   std::size_t n_walks = kDefaultWalks,
                                   std::size_t workers = 1) {
    if (m < 2) {
        throw InvalidArgument("noise floor needs m >= 2");
    }
    if (r < 1 || n_landscapes < 1) {
        throw InvalidArgument("noise floor needs r >= 1 and at least one landscape");
    }
    const std::size_t M = landscape_size(m);
    const bool use_table = h.n_qubits <= 20;
    const std::vector<double> table = use_table ? h.energy_table() : std::vector<double>{};
    const std::uint64_t mask =
        h.n_qubits >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << h.n_qubits) - 1;

    NoiseFloor out;
    out.per_landscape.resize(n_landscapes);
    for (std::size_t l = 0; l < n_landscapes; ++l) {
        const CostFunction fn = [&](std::span<const double>, std::size_t i) {
            Rng rng(derive_seed(seed, "floor-shots", {l, i}));
            double sum = 0.0;
            double sum2 = 0.0;
            for (std::size_t s = 0; s < r; ++s) {
                const std::uint64_t z = rng() & mask;
                const double e = use_table ? table[z] : h.energy(z);
                sum += e;
                sum2 += e * e;
            }
            const double rr = static_cast<double>(r);
            CostEstimate c;
            c.mean = sum / rr;
            c.shots = r;
            if (r > 1) {
                const double var = std::max(0.0, (sum2 - sum * c.mean) / (rr - 1.0));
                c.std_error = std::sqrt(var / rr);
            }
            return c;
        };
        auto ls = sample_landscape(fn, m, M, derive_seed(seed, "floor-points", {l}),
                                   workers);
        ls.meta.n_qubits = h.n_qubits;
        ls.meta.layers = m / 2;
        ls.meta.noise_tag = "shot-noise";
        ls.meta.shots = r;
        ls.meta.c0 = h.c0;
        out.per_landscape[l] =
            run_icla(ls, n_walks, derive_seed(seed, "floor-walks", {l})).gradient_norm;
    }
    double sum = 0.0;
    for (const double g : out.per_landscape) {
        sum += g;
    }
    out.mean = sum / static_cast<double>(n_landscapes);
    if (n_landscapes > 1) {
        double ss = 0.0;
        for (const double g : out.per_landscape) {
            ss += (g - out.mean) * (g - out.mean);
        }
        out.stddev = std::sqrt(ss / static_cast<double>(n_landscapes - 1));
    }
    return out;
}

} // namespace qland
