#pragma once

// Single-qubit noise channels as direct matrix-element maps, coherence-time
// sampling, and the gate/channel interleaving schedules.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "ansatz.hpp"
#include "densmat.hpp"
#include "error.hpp"
#include "seed.hpp"

namespace qland {

namespace detail {

inline void check_qubit(const DensityMatrix &rho, std::size_t q) {
    if (q >= rho.n_qubits()) {
        throw InvalidArgument("qubit " + std::to_string(q) +
                              " out of range for " +
                              std::to_string(rho.n_qubits()) + " qubits");
    }
}

/// Visits every 2x2 block of rho on qubit q as (rho00, rho01, rho10, rho11).
template <class Fn> void for_each_qubit_block(CMatrix &m, std::size_t q, Fn &&fn) {
    const auto dim = static_cast<std::size_t>(m.rows());
    const std::size_t mask = std::size_t{1} << q;
    const std::size_t half = dim / 2;
    cplx *data = m.data();
    for (std::size_t kj = 0; kj < half; ++kj) {
        const std::size_t j0 = insert_zero_bit(kj, q);
        cplx *col0 = data + j0 * dim;
        cplx *col1 = data + (j0 | mask) * dim;
        for (std::size_t ki = 0; ki < half; ++ki) {
            const std::size_t i0 = insert_zero_bit(ki, q);
            const std::size_t i1 = i0 | mask;
            fn(col0[i0], col1[i0], col0[i1], col1[i1]);
        }
    }
}

/// Generic relaxation map: rho11 -> keep * rho11, rho00 gains the rest,
/// coherences scaled by `coherence`.
inline void relax(CMatrix &m, std::size_t q, double keep, double coherence) {
    const double moved = 1.0 - keep;
    for_each_qubit_block(m, q, [&](cplx &r00, cplx &r01, cplx &r10, cplx &r11) {
        r00 += moved * r11;
        r11 *= keep;
        r01 *= coherence;
        r10 *= coherence;
    });
}

} // namespace detail

/// rho -> (1 - p) rho + (p/3)(X rho X + Y rho Y + Z rho Z) on `qubit`.
inline void apply_depolarizing(DensityMatrix &rho, std::size_t qubit, double p) {
    detail::check_qubit(rho, qubit);
    if (!(p >= 0.0 && p <= 1.0)) {
        throw InvalidArgument("depolarizing probability must lie in [0, 1]");
    }
    const double stay = 1.0 - 2.0 * p / 3.0;
    const double swap = 2.0 * p / 3.0;
    const double coh = 1.0 - 4.0 * p / 3.0;
    detail::for_each_qubit_block(
        rho.matrix(), qubit, [&](cplx &r00, cplx &r01, cplx &r10, cplx &r11) {
            const cplx a = r00;
            const cplx d = r11;
            r00 = stay * a + swap * d;
            r11 = stay * d + swap * a;
            r01 *= coh;
            r10 *= coh;
        });
    detail::check_cheap_invariants(rho, "apply_depolarizing");
}

/// Amplitude damping for duration t (same units as t1).
inline void apply_amplitude_damping(DensityMatrix &rho, std::size_t qubit,
                                    double t, double t1) {
    detail::check_qubit(rho, qubit);
    if (!(t >= 0.0) || !(t1 > 0.0)) {
        throw InvalidArgument("amplitude damping needs t >= 0 and t1 > 0");
    }
    detail::relax(rho.matrix(), qubit, std::exp(-t / t1), std::exp(-t / (2.0 * t1)));
    detail::check_cheap_invariants(rho, "apply_amplitude_damping");
}

/// Amplitude damping with a given decay probability p_A = 1 - exp(-t/T1).
inline void apply_damping_probability(DensityMatrix &rho, std::size_t qubit,
                                      double p) {
    detail::check_qubit(rho, qubit);
    if (!(p >= 0.0 && p <= 1.0)) {
        throw InvalidArgument("decay probability must lie in [0, 1]");
    }
    detail::relax(rho.matrix(), qubit, 1.0 - p, std::sqrt(1.0 - p));
    detail::check_cheap_invariants(rho, "apply_damping_probability");
}

/// Amplitude damping plus dephasing: populations relax with t1, coherences
/// decay with t2. Requires 0 < t2 <= 2 t1.
inline void apply_ad_dephasing(DensityMatrix &rho, std::size_t qubit, double t,
                               double t1, double t2) {
    detail::check_qubit(rho, qubit);
    if (!(t >= 0.0) || !(t1 > 0.0) || !(t2 > 0.0)) {
        throw InvalidArgument("dephasing channel needs t >= 0, t1 > 0, t2 > 0");
    }
    if (t2 > 2.0 * t1 * (1.0 + 1e-12)) {
        std::ostringstream os;
        os << "unphysical coherence times: t2 = " << t2 << " > 2 t1 = " << 2.0 * t1;
        throw InvalidArgument(os.str());
    }
    detail::relax(rho.matrix(), qubit, std::exp(-t / t1), std::exp(-t / t2));
    detail::check_cheap_invariants(rho, "apply_ad_dephasing");
}

// ---------------------------------------------------------------------------
// Coherence times

/// Per-qubit T1 and T2 in microseconds.
struct CoherenceSample {
    std::vector<double> t1;
    std::vector<double> t2;

    [[nodiscard]] std::size_t size() const noexcept { return t1.size(); }
    [[nodiscard]] bool empty() const noexcept { return t1.empty(); }

    void validate() const {
        if (t1.size() != t2.size()) {
            throw InvalidArgument("t1 and t2 lists differ in length");
        }
        for (std::size_t q = 0; q < t1.size(); ++q) {
            if (!(t1[q] > 0.0) || !(t2[q] > 0.0) ||
                t2[q] > 2.0 * t1[q] * (1.0 + 1e-12)) {
                throw InvalidArgument("qubit " + std::to_string(q) +
                                      " violates 0 < t2 <= 2 t1, t1 > 0");
            }
        }
    }
};

struct NormalParams {
    double mean = 0.0;
    double stddev = 0.0;
};

inline constexpr NormalParams kDefaultT1{244.0, 74.0};
inline constexpr NormalParams kDefaultT2{159.0, 93.0};

/// Independent normal draws per qubit, rejected and redrawn until
/// t1 >= 1 us and 1 us <= t2 <= 2 t1.
inline CoherenceSample sample_coherences(std::size_t n, NormalParams t1_dist,
                                         NormalParams t2_dist, std::uint64_t seed) {
    constexpr int kBudget = 1000;
    if (!(t1_dist.mean > 0.0) || !(t2_dist.mean > 0.0) || t1_dist.stddev < 0.0 ||
        t2_dist.stddev < 0.0) {
        throw InvalidArgument("coherence distributions need positive means and "
                              "non-negative spreads");
    }
    Rng rng(seed);
    std::normal_distribution<double> d1(t1_dist.mean, t1_dist.stddev);
    std::normal_distribution<double> d2(t2_dist.mean, t2_dist.stddev);
    auto fail = [&](const char *which) {
        std::ostringstream os;
        os << "coherence sampling exceeded " << kBudget << " redraws for " << which
           << " (T1 ~ N(" << t1_dist.mean << ", " << t1_dist.stddev
           << "), T2 ~ N(" << t2_dist.mean << ", " << t2_dist.stddev << "))";
        return NumericalError(os.str());
    };
    CoherenceSample s;
    s.t1.resize(n);
    s.t2.resize(n);
    for (std::size_t q = 0; q < n; ++q) {
        int tries = 0;
        double t1 = d1(rng);
        while (t1 < 1.0) {
            if (++tries > kBudget) {
                throw fail("T1");
            }
            t1 = d1(rng);
        }
        tries = 0;
        double t2 = d2(rng);
        while (t2 < 1.0 || t2 > 2.0 * t1) {
            if (++tries > kBudget) {
                throw fail("T2");
            }
            t2 = d2(rng);
        }
        s.t1[q] = t1;
        s.t2[q] = t2;
    }
    return s;
}

/// Every qubit gets the same (t1, t2).
inline CoherenceSample uniform_coherences(std::size_t n, double t1, double t2) {
    CoherenceSample s{std::vector<double>(n, t1), std::vector<double>(n, t2)};
    s.validate();
    return s;
}

// ---------------------------------------------------------------------------
// Noise model and schedules

enum class NoiseKind { none, depolarizing, amplitude_damping, ad_dephasing };
enum class ScheduleMode { per_layer, per_gate };

inline NoiseKind parse_noise_kind(std::string_view s) {
    if (s == "none") {
        return NoiseKind::none;
    }
    if (s == "depolarizing" || s == "dep") {
        return NoiseKind::depolarizing;
    }
    if (s == "amplitude_damping" || s == "ad") {
        return NoiseKind::amplitude_damping;
    }
    if (s == "ad_dephasing" || s == "ad_plus_dephasing" || s == "ad+deph") {
        return NoiseKind::ad_dephasing;
    }
    throw InvalidArgument("unknown noise kind '" + std::string(s) + "'");
}

inline std::string to_string(NoiseKind k) {
    switch (k) {
    case NoiseKind::none:
        return "none";
    case NoiseKind::depolarizing:
        return "depolarizing";
    case NoiseKind::amplitude_damping:
        return "amplitude_damping";
    case NoiseKind::ad_dephasing:
        return "ad_dephasing";
    }
    return "unknown";
}

inline ScheduleMode parse_schedule(std::string_view s) {
    if (s == "per_layer") {
        return ScheduleMode::per_layer;
    }
    if (s == "per_gate") {
        return ScheduleMode::per_gate;
    }
    throw InvalidArgument("unknown schedule mode '" + std::string(s) + "'");
}

inline std::string to_string(ScheduleMode m) {
    return m == ScheduleMode::per_layer ? "per_layer" : "per_gate";
}

/// One channel family plus where it attaches in the circuit.
///
/// depolarizing: probability p_1q after one-qubit gates and p_2q (per
/// participating qubit) after two-qubit gates; per_layer uses p_1q once per
/// qubit and layer.
///
/// amplitude_damping / ad_dephasing are time-driven when `coherences` is
/// set. amplitude_damping without coherences is probability-driven: decay
/// probabilities p_1q / p_2q per gate (per_gate) or p_1q per layer.
struct NoiseModel {
    NoiseKind kind = NoiseKind::none;
    ScheduleMode schedule = ScheduleMode::per_layer;
    double p_1q = 0.0;
    double p_2q = 0.0;
    CoherenceSample coherences;
    bool terminal_idle = true;

    static NoiseModel none() { return {}; }

    static NoiseModel depolarizing(double p, ScheduleMode mode = ScheduleMode::per_gate) {
        NoiseModel m;
        m.kind = NoiseKind::depolarizing;
        m.schedule = mode;
        m.p_1q = p;
        m.p_2q = p;
        m.validate(0);
        return m;
    }

    static NoiseModel amplitude_damping(CoherenceSample c,
                                        ScheduleMode mode = ScheduleMode::per_layer) {
        NoiseModel m;
        m.kind = NoiseKind::amplitude_damping;
        m.schedule = mode;
        m.coherences = std::move(c);
        m.validate(0);
        return m;
    }

    static NoiseModel ad_dephasing(CoherenceSample c,
                                   ScheduleMode mode = ScheduleMode::per_layer) {
        NoiseModel m;
        m.kind = NoiseKind::ad_dephasing;
        m.schedule = mode;
        m.coherences = std::move(c);
        m.validate(0);
        return m;
    }

    static NoiseModel damping_probability(double p_1q, double p_2q) {
        NoiseModel m;
        m.kind = NoiseKind::amplitude_damping;
        m.schedule = ScheduleMode::per_gate;
        m.p_1q = p_1q;
        m.p_2q = p_2q;
        m.terminal_idle = false;
        m.validate(0);
        return m;
    }

    [[nodiscard]] bool time_driven() const {
        return (kind == NoiseKind::amplitude_damping ||
                kind == NoiseKind::ad_dephasing) &&
               !coherences.empty();
    }

    /// Short label used in file metadata.
    [[nodiscard]] std::string tag() const {
        switch (kind) {
        case NoiseKind::none:
            return "none";
        case NoiseKind::depolarizing:
            return "dep";
        case NoiseKind::amplitude_damping:
            return time_driven() ? "ad" : "ad_prob";
        case NoiseKind::ad_dephasing:
            return "ad+deph";
        }
        return "unknown";
    }

    /// Checks internal consistency; n_qubits = 0 skips the size check.
    void validate(std::size_t n_qubits) const {
        if (!(p_1q >= 0.0 && p_1q <= 1.0 && p_2q >= 0.0 && p_2q <= 1.0)) {
            throw InvalidArgument("noise probabilities must lie in [0, 1]");
        }
        if (kind == NoiseKind::ad_dephasing && coherences.empty()) {
            throw InvalidArgument("ad_dephasing needs per-qubit coherence times");
        }
        if (!coherences.empty()) {
            coherences.validate();
            if (n_qubits != 0 && coherences.size() != n_qubits) {
                throw InvalidArgument("coherence list length " +
                                      std::to_string(coherences.size()) +
                                      " does not match " +
                                      std::to_string(n_qubits) + " qubits");
            }
        }
    }
};

namespace detail {

/// Time-driven channel of `model` on qubit q for duration t (microseconds).
inline void idle_channel(DensityMatrix &rho, const NoiseModel &model,
                         std::size_t q, double t) {
    if (t <= 0.0) {
        return;
    }
    const double t1 = model.coherences.t1[q];
    if (model.kind == NoiseKind::ad_dephasing) {
        apply_ad_dephasing(rho, q, t, t1, model.coherences.t2[q]);
    } else {
        apply_amplitude_damping(rho, q, t, t1);
    }
}

/// Channel attached to one gate slot on qubit q.
inline void gate_channel(DensityMatrix &rho, const NoiseModel &model,
                         const TimingModel &timing, std::size_t q,
                         bool two_qubit) {
    switch (model.kind) {
    case NoiseKind::none:
        return;
    case NoiseKind::depolarizing:
        apply_depolarizing(rho, q, two_qubit ? model.p_2q : model.p_1q);
        return;
    case NoiseKind::amplitude_damping:
    case NoiseKind::ad_dephasing:
        if (model.time_driven()) {
            // an RZZ is realised with two ECR gates
            idle_channel(rho, model, q, two_qubit ? 2.0 * timing.t_2q : timing.t_1q);
        } else {
            apply_damping_probability(rho, q, two_qubit ? model.p_2q : model.p_1q);
        }
        return;
    }
}

/// Channel applied to every qubit at the end of a layer (per_layer mode).
inline void layer_channel(DensityMatrix &rho, const NoiseModel &model,
                          const TimingModel &timing, std::size_t q) {
    switch (model.kind) {
    case NoiseKind::none:
        return;
    case NoiseKind::depolarizing:
        apply_depolarizing(rho, q, model.p_1q);
        return;
    case NoiseKind::amplitude_damping:
    case NoiseKind::ad_dephasing:
        if (model.time_driven()) {
            idle_channel(rho, model, q, timing.runtime_per_layer);
        } else {
            apply_damping_probability(rho, q, model.p_1q);
        }
        return;
    }
}

/// Applies gates[begin, end), merging runs of diagonal gates into one pass.
inline void apply_gate_run(DensityMatrix &rho, std::span<const QubitUnitary> gates) {
    std::vector<cplx> phase;
    bool pending = false;
    auto flush = [&] {
        if (pending) {
            apply_diagonal(rho, phase);
            pending = false;
        }
    };
    for (const auto &g : gates) {
        if (g.is_diagonal()) {
            validate_gate(g, rho.n_qubits());
            if (!pending) {
                phase.assign(rho.dim(), cplx{1.0, 0.0});
                pending = true;
            }
            const std::size_t q0 = g.targets[0];
            for (std::size_t i = 0; i < rho.dim(); ++i) {
                Eigen::Index loc = static_cast<Eigen::Index>((i >> q0) & 1U);
                if (g.arity() == 2) {
                    loc |= static_cast<Eigen::Index>(((i >> g.targets[1]) & 1U) << 1U);
                }
                phase[i] *= g.matrix(loc, loc);
            }
        } else {
            flush();
            apply_unitary(rho, g);
        }
    }
    flush();
}

/// Per-gate depolarizing with channels deferred per qubit.
///
/// A single-qubit depolarizing channel commutes with every single-qubit
/// unitary on the same qubit and with anything acting on other qubits, so
/// the channels of a qubit are merged (Bloch shrink factors multiply) and
/// only applied before the next two-qubit gate touching that qubit.
inline void apply_depolarizing_per_gate(DensityMatrix &rho,
                                        std::span<const QubitUnitary> gates,
                                        const NoiseModel &model) {
    const std::size_t n = rho.n_qubits();
    std::vector<double> shrink(n, 1.0);
    const double f1 = 1.0 - 4.0 * model.p_1q / 3.0;
    const double f2 = 1.0 - 4.0 * model.p_2q / 3.0;
    std::size_t run_begin = 0;
    auto flush_gates = [&](std::size_t end) {
        if (end > run_begin) {
            apply_gate_run(rho, gates.subspan(run_begin, end - run_begin));
        }
        run_begin = end;
    };
    auto flush_qubit = [&](std::size_t q, std::size_t end) {
        if (shrink[q] != 1.0) {
            flush_gates(end);
            apply_depolarizing(rho, q, 0.75 * (1.0 - shrink[q]));
            shrink[q] = 1.0;
        }
    };
    for (std::size_t k = 0; k < gates.size(); ++k) {
        const auto &g = gates[k];
        validate_gate(g, n);
        if (g.arity() == 2) {
            for (const auto q : g.targets) {
                flush_qubit(q, k);
            }
        }
        for (const auto q : g.targets) {
            shrink[q] *= g.arity() == 2 ? f2 : f1;
        }
    }
    flush_gates(gates.size());
    for (std::size_t q = 0; q < n; ++q) {
        flush_qubit(q, gates.size());
    }
}

} // namespace detail

/// Runs the gate list on rho with the noise model's channels interleaved.
///
/// per_layer: after each layer every qubit receives the layer channel
/// (duration = the platform's per-layer runtime for time-driven models).
/// per_gate: every gate is followed by its channel on the participating
/// qubits. Time-driven models finish with a terminal idle of
/// t_cir(N, L) - L * tau_layer on every qubit when `terminal_idle` is set.
inline void apply_schedule(DensityMatrix &rho, std::span<const QubitUnitary> gates,
                           const NoiseModel &model, const TimingModel &timing,
                           std::size_t layers) {
    const std::size_t n = rho.n_qubits();
    model.validate(model.coherences.empty() ? 0 : n);
    if (layers == 0 ? !gates.empty() : gates.size() % layers != 0) {
        throw InvalidArgument("gate list does not split into " +
                              std::to_string(layers) + " equal layers");
    }
    if (model.kind == NoiseKind::none) {
        detail::apply_gate_run(rho, gates);
        return;
    }
    const std::size_t per_layer = layers == 0 ? 0 : gates.size() / layers;

    if (model.schedule == ScheduleMode::per_layer) {
        for (std::size_t l = 0; l < layers; ++l) {
            detail::apply_gate_run(rho, gates.subspan(l * per_layer, per_layer));
            for (std::size_t q = 0; q < n; ++q) {
                detail::layer_channel(rho, model, timing, q);
            }
        }
    } else if (model.kind == NoiseKind::depolarizing) {
        detail::apply_depolarizing_per_gate(rho, gates, model);
    } else {
        for (const auto &g : gates) {
            apply_unitary(rho, g);
            for (const auto q : g.targets) {
                detail::gate_channel(rho, model, timing, q, g.arity() == 2);
            }
        }
    }

    if (model.time_driven() && model.terminal_idle) {
        const double idle = circuit_runtime(n, layers, timing) -
                            static_cast<double>(layers) * timing.runtime_per_layer;
        for (std::size_t q = 0; q < n; ++q) {
            detail::idle_channel(rho, model, q, idle);
        }
    }
}

} // namespace qland
