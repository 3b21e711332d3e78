#pragma once

// Ising-chain cost Hamiltonian, QAOA circuit generation and the hardware
// depth / runtime / gate-count models.
//
// Spin convention: s_i = 2 z_i - 1, so bit 0 carries s = -1. The single-site
// operator used both as circuit generator and as measured observable is
// S_i = diag(-1, +1), which keeps the cost layer exp(-i theta H_C) generated
// by exactly the operator whose expectation is reported as the cost.

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "densmat.hpp"
#include "error.hpp"
#include "seed.hpp"

namespace qland {

inline constexpr std::array<double, 8> kCouplingValues{2.0, -2.0, 1.2, -1.2,
                                                       0.8, -0.8, 0.4, -0.4};
inline constexpr std::array<double, 8> kFieldValues{0.8,  0.4,   -0.4, 0.24,
                                                    -0.24, 0.16, -0.16, -0.08};

/// H = sum_i (J_i / 2) s_i s_{i+1} + sum_i (h_i / 2) s_i on an open chain.
struct IsingHamiltonian {
    std::size_t n_qubits = 0;
    std::vector<double> couplings; // J_{i,i+1}, length n - 1
    std::vector<double> fields;    // h_i, length n
    double c0 = 0.0;               // sqrt(sum J^2 + sum h^2)
    std::optional<std::uint64_t> seed;

    static IsingHamiltonian make(std::vector<double> couplings,
                                 std::vector<double> fields,
                                 std::optional<std::uint64_t> seed = {}) {
        if (fields.size() < 2 || couplings.size() + 1 != fields.size()) {
            throw InvalidArgument(
                "chain Hamiltonian needs n >= 2 fields and n - 1 couplings");
        }
        IsingHamiltonian h;
        h.n_qubits = fields.size();
        h.couplings = std::move(couplings);
        h.fields = std::move(fields);
        double sq = 0.0;
        for (const double j : h.couplings) {
            sq += j * j;
        }
        for (const double f : h.fields) {
            sq += f * f;
        }
        h.c0 = std::sqrt(sq);
        if (!(h.c0 > 0.0)) {
            throw InvalidArgument("Hamiltonian normalization c0 must be positive");
        }
        h.seed = seed;
        return h;
    }

    /// Energy of the basis state `z` (bit i = qubit i).
    [[nodiscard]] double energy(std::uint64_t z) const {
        double e = 0.0;
        for (std::size_t i = 0; i < n_qubits; ++i) {
            const double si = ((z >> i) & 1U) != 0U ? 1.0 : -1.0;
            e += 0.5 * fields[i] * si;
            if (i + 1 < n_qubits) {
                const double sj = ((z >> (i + 1)) & 1U) != 0U ? 1.0 : -1.0;
                e += 0.5 * couplings[i] * si * sj;
            }
        }
        return e;
    }

    /// Energies of all 2^n basis states, indexed by bitstring.
    [[nodiscard]] std::vector<double> energy_table() const {
        const std::size_t dim = std::size_t{1} << n_qubits;
        std::vector<double> e(dim);
        for (std::size_t z = 0; z < dim; ++z) {
            e[z] = energy(z);
        }
        return e;
    }

    /// sum |J|/2 + sum |h|/2, an upper bound on |<H>| for every state.
    [[nodiscard]] double energy_bound() const {
        double b = 0.0;
        for (const double j : couplings) {
            b += 0.5 * std::abs(j);
        }
        for (const double f : fields) {
            b += 0.5 * std::abs(f);
        }
        return b;
    }
};

inline void to_json(nlohmann::json &j, const IsingHamiltonian &h) {
    j = nlohmann::json{{"n", h.n_qubits},
                       {"J", h.couplings},
                       {"h", h.fields},
                       {"c0", h.c0}};
    j["seed"] = h.seed ? nlohmann::json(*h.seed) : nlohmann::json(nullptr);
}

inline void from_json(const nlohmann::json &j, IsingHamiltonian &h) {
    std::optional<std::uint64_t> seed;
    if (j.contains("seed") && !j.at("seed").is_null()) {
        seed = j.at("seed").get<std::uint64_t>();
    }
    h = IsingHamiltonian::make(j.at("J").get<std::vector<double>>(),
                               j.at("h").get<std::vector<double>>(), seed);
    if (j.contains("n") && j.at("n").get<std::size_t>() != h.n_qubits) {
        throw ParseError("Hamiltonian 'n' disagrees with the field count");
    }
}

inline IsingHamiltonian sample_hamiltonian(std::size_t n_qubits,
                                           std::uint64_t seed) {
    if (n_qubits < 2) {
        throw InvalidArgument("chain Hamiltonian needs at least 2 qubits");
    }
    Rng rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, 7);
    std::vector<double> couplings(n_qubits - 1);
    std::vector<double> fields(n_qubits);
    for (auto &j : couplings) {
        j = kCouplingValues[pick(rng)];
    }
    for (auto &h : fields) {
        h = kFieldValues[pick(rng)];
    }
    return IsingHamiltonian::make(std::move(couplings), std::move(fields), seed);
}

/// Angles ordered (mix_1, phase_1, mix_2, phase_2, ...), each in [0, 2 pi).
struct ParameterVector {
    std::size_t layers = 0;
    std::vector<double> values;

    static ParameterVector make(std::vector<double> values) {
        if (values.size() % 2 != 0) {
            throw InvalidArgument("parameter vector length must be even (m = 2L)");
        }
        constexpr double two_pi = 2.0 * std::numbers::pi;
        for (const double v : values) {
            if (!(v >= 0.0 && v < two_pi)) {
                throw InvalidArgument("parameter angles must lie in [0, 2pi)");
            }
        }
        return ParameterVector{values.size() / 2, std::move(values)};
    }

    [[nodiscard]] double mixing(std::size_t layer) const {
        return values.at(2 * layer);
    }
    [[nodiscard]] double phase(std::size_t layer) const {
        return values.at(2 * layer + 1);
    }
};

inline QubitUnitary zz_rotation(std::size_t a, std::size_t b, double angle) {
    // exp(-i angle s_a s_b), local index b_a + 2 b_b
    CMatrix u = CMatrix::Zero(4, 4);
    const cplx same = std::polar(1.0, -angle);
    const cplx diff = std::polar(1.0, angle);
    u(0, 0) = same;
    u(1, 1) = diff;
    u(2, 2) = diff;
    u(3, 3) = same;
    return {std::move(u), {a, b}};
}

inline QubitUnitary field_rotation(std::size_t q, double angle) {
    // exp(-i angle s_q), s = -1 on |0>
    CMatrix u = CMatrix::Zero(2, 2);
    u(0, 0) = std::polar(1.0, angle);
    u(1, 1) = std::polar(1.0, -angle);
    return {std::move(u), {q}};
}

inline QubitUnitary x_rotation(std::size_t q, double angle) {
    // exp(-i angle X)
    CMatrix u(2, 2);
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    u(0, 0) = c;
    u(1, 1) = c;
    u(0, 1) = cplx{0.0, -s};
    u(1, 0) = cplx{0.0, -s};
    return {std::move(u), {q}};
}

/// Number of gates build_circuit emits per layer: couplings, fields, mixers.
constexpr std::size_t gates_per_layer(std::size_t n_qubits) noexcept {
    return (n_qubits - 1) + n_qubits + n_qubits;
}

/// Logical QAOA circuit: per layer the cost unitaries (couplings in ladder
/// order, then fields) followed by the X mixers.
inline std::vector<QubitUnitary> build_circuit(const IsingHamiltonian &h,
                                               const ParameterVector &theta) {
    std::vector<QubitUnitary> gates;
    gates.reserve(theta.layers * gates_per_layer(h.n_qubits));
    for (std::size_t l = 0; l < theta.layers; ++l) {
        const double gamma = theta.phase(l);
        const double beta = theta.mixing(l);
        for (std::size_t i = 0; i + 1 < h.n_qubits; ++i) {
            gates.push_back(zz_rotation(i, i + 1, gamma * h.couplings[i] / 2.0));
        }
        for (std::size_t i = 0; i < h.n_qubits; ++i) {
            gates.push_back(field_rotation(i, gamma * h.fields[i] / 2.0));
        }
        for (std::size_t i = 0; i < h.n_qubits; ++i) {
            gates.push_back(x_rotation(i, beta));
        }
    }
    return gates;
}

/// Tr(H rho), evaluated from the diagonal of rho.
inline double exact_cost(const DensityMatrix &rho, const IsingHamiltonian &h) {
    if (rho.n_qubits() != h.n_qubits) {
        throw InvalidArgument("state and Hamiltonian sizes differ");
    }
    double c = 0.0;
    for (std::size_t z = 0; z < rho.dim(); ++z) {
        c += rho.population(z) * h.energy(z);
    }
    return c;
}

/// Same as exact_cost with a precomputed energy table.
inline double exact_cost(const DensityMatrix &rho, std::span<const double> energies) {
    if (energies.size() != rho.dim()) {
        throw InvalidArgument("energy table size does not match the state");
    }
    double c = 0.0;
    for (std::size_t z = 0; z < rho.dim(); ++z) {
        c += rho.population(z) * energies[z];
    }
    return c;
}

// ---------------------------------------------------------------------------
// Hardware timing models

enum class Platform { falcon_ladder, falcon_short, heron };

inline Platform parse_platform(std::string_view tag) {
    if (tag == "falcon_ladder") {
        return Platform::falcon_ladder;
    }
    if (tag == "falcon_short") {
        return Platform::falcon_short;
    }
    if (tag == "heron") {
        return Platform::heron;
    }
    throw InvalidArgument("unknown platform tag '" + std::string(tag) + "'");
}

inline std::string to_string(Platform p) {
    switch (p) {
    case Platform::falcon_ladder:
        return "falcon_ladder";
    case Platform::falcon_short:
        return "falcon_short";
    case Platform::heron:
        return "heron";
    }
    return "unknown";
}

/// d(N, L) = a N + b L + c and t(N, L) = per_qubit N + per_layer L + offset.
/// Runtimes and gate durations are in microseconds.
struct TimingModel {
    Platform platform = Platform::falcon_ladder;
    double depth_a = 11.1;
    double depth_b = 24.0;
    double depth_c = -29.6;
    double runtime_per_qubit = 1.8;
    double runtime_per_layer = 3.3;
    double runtime_offset = 45.0;
    double t_1q = 0.060;
    double t_2q = 0.660;

    void validate() const {
        if (!(t_1q > 0.0 && t_2q > 0.0 && runtime_per_layer > 0.0)) {
            throw InvalidArgument("timing durations must be positive");
        }
    }
};

inline TimingModel timing_model(Platform p) {
    TimingModel t;
    t.platform = p;
    switch (p) {
    case Platform::falcon_ladder:
        break;
    case Platform::falcon_short:
        t.depth_a = 0.0;
        t.depth_b = 24.0;
        t.depth_c = -6.0;
        t.runtime_per_qubit = 0.0;
        t.runtime_per_layer = 2.8;
        t.runtime_offset = 61.0;
        break;
    case Platform::heron:
        t.depth_a = 7.3;
        t.depth_b = 18.5;
        t.depth_c = 1.0;
        t.runtime_per_qubit = 0.24;
        t.runtime_per_layer = 0.61;
        t.runtime_offset = 130.0;
        break;
    }
    return t;
}

inline TimingModel timing_model(std::string_view tag) {
    return timing_model(parse_platform(tag));
}

inline void to_json(nlohmann::json &j, const TimingModel &t) {
    j = nlohmann::json{{"platform", to_string(t.platform)},
                       {"depth", {t.depth_a, t.depth_b, t.depth_c}},
                       {"runtime",
                        {t.runtime_per_qubit, t.runtime_per_layer,
                         t.runtime_offset}},
                       {"t_1q", t.t_1q},
                       {"t_2q", t.t_2q}};
}

/// Reads a coefficient block; missing keys keep the platform defaults.
inline void from_json(const nlohmann::json &j, TimingModel &t) {
    t = timing_model(j.value("platform", std::string("falcon_ladder")));
    if (j.contains("depth")) {
        const auto d = j.at("depth").get<std::vector<double>>();
        if (d.size() != 3) {
            throw ParseError("timing 'depth' needs three coefficients [a, b, c]");
        }
        t.depth_a = d[0];
        t.depth_b = d[1];
        t.depth_c = d[2];
    }
    if (j.contains("runtime")) {
        const auto r = j.at("runtime").get<std::vector<double>>();
        if (r.size() != 3) {
            throw ParseError(
                "timing 'runtime' needs [per_qubit, per_layer, offset]");
        }
        t.runtime_per_qubit = r[0];
        t.runtime_per_layer = r[1];
        t.runtime_offset = r[2];
    }
    t.t_1q = j.value("t_1q", t.t_1q);
    t.t_2q = j.value("t_2q", t.t_2q);
    t.validate();
}

inline double circuit_depth(std::size_t n, std::size_t layers,
                            const TimingModel &timing) {
    const double d = timing.depth_a * static_cast<double>(n) +
                     timing.depth_b * static_cast<double>(layers) + timing.depth_c;
    return std::max(d, 0.0);
}

/// Net single-shot runtime in microseconds (gates plus readout, no reset).
inline double circuit_runtime(std::size_t n, std::size_t layers,
                              const TimingModel &timing) {
    return timing.runtime_per_qubit * static_cast<double>(n) +
           timing.runtime_per_layer * static_cast<double>(layers) +
           timing.runtime_offset;
}

struct GateCounts {
    std::uint64_t two_qubit = 0;
    double one_qubit_estimate = 0.0;
};

/// Transpiled gate counts: two ECR per RZZ, about 13.5 single-qubit gates per
/// qubit and layer.
inline GateCounts gate_counts(std::size_t n, std::size_t layers) {
    if (n < 2) {
        throw InvalidArgument("gate counts need n >= 2");
    }
    return {2 * (n - 1) * layers,
            13.5 * static_cast<double>(n) * static_cast<double>(layers)};
}

} // namespace qland
