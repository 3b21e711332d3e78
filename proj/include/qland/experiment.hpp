#pragma once

// Batch experiments: configuration, the gradient-vs-runtime sweep and the
// file-based entry points behind the qland command-line tool.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "analysis.hpp"
#include "ansatz.hpp"
#include "densmat.hpp"
#include "error.hpp"
#include "icla.hpp"
#include "noise.hpp"
#include "sampler.hpp"
#include "seed.hpp"

namespace qland {

namespace fs = std::filesystem;

/// Coherence-time source for one of T1 / T2: a normal distribution, a single
/// value shared by every qubit, or an explicit per-qubit list.
struct CoherenceSpec {
    std::optional<NormalParams> normal;
    std::optional<double> fixed;
    std::vector<double> list;

    [[nodiscard]] bool empty() const { return !normal && !fixed && list.empty(); }
};

struct NoiseSpec {
    std::string kind = "none"; // none | dep | ad | ad+deph
    std::string schedule;      // empty: per_gate for dep, per_layer otherwise
    double p_1q = 0.0;
    double p_2q = 0.0;
    CoherenceSpec t1;
    CoherenceSpec t2;
    bool terminal_idle = true;
};

struct ExperimentConfig {
    std::size_t n_qubits = 8;
    std::vector<std::size_t> layers;
    NoiseSpec noise;
    std::string platform = "falcon_ladder";
    std::optional<TimingModel> timing;
    std::uint64_t shots = 16384; // 0 = exact expectation values
    std::size_t landscape_cap = 200;
    std::size_t landscape_factor = 10;
    std::size_t n_walks = kDefaultWalks;
    std::uint64_t seed = 0;
    std::optional<std::uint64_t> hamiltonian_seed;
    std::size_t workers = 1;
    std::string output_dir = "out";
    std::string tag; // empty: derived from the noise model
    std::size_t floor_landscapes = 20;
    std::optional<nlohmann::json> hamiltonian; // explicit {J, h}

    void validate() const;
};

namespace detail {

inline CoherenceSpec parse_coherence_spec(const nlohmann::json &j, const char *name) {
    CoherenceSpec c;
    if (j.is_number()) {
        c.fixed = j.get<double>();
    } else if (j.is_array()) {
        c.list = j.get<std::vector<double>>();
    } else if (j.is_object()) {
        NormalParams p;
        p.mean = j.at("mean").get<double>();
        p.stddev = j.value("std", 0.0);
        c.normal = p;
    } else {
        throw ConfigError(std::string("noise.") + name +
                          " must be a number, a list or {mean, std}");
    }
    return c;
}

inline nlohmann::json coherence_spec_json(const CoherenceSpec &c) {
    if (c.fixed) {
        return *c.fixed;
    }
    if (c.normal) {
        return {{"mean", c.normal->mean}, {"std", c.normal->stddev}};
    }
    if (!c.list.empty()) {
        return c.list;
    }
    return nullptr;
}

inline std::vector<double> resolve_coherences(const CoherenceSpec &c, std::size_t n,
                                              const char *name) {
    if (c.fixed) {
        return std::vector<double>(n, *c.fixed);
    }
    if (!c.list.empty()) {
        if (c.list.size() != n) {
            throw ConfigError(std::string("noise.") + name + " lists " +
                              std::to_string(c.list.size()) + " values for " +
                              std::to_string(n) + " qubits");
        }
        return c.list;
    }
    throw ConfigError(std::string("noise.") + name + " is missing");
}

} // namespace detail

inline void from_json(const nlohmann::json &j, NoiseSpec &s) {
    s = NoiseSpec{};
    s.kind = j.value("kind", std::string("none"));
    s.schedule = j.value("schedule", std::string());
    if (j.contains("p")) {
        s.p_1q = s.p_2q = j.at("p").get<double>();
    }
    s.p_1q = j.value("p_1q", s.p_1q);
    s.p_2q = j.value("p_2q", s.p_2q);
    if (j.contains("t1") && !j.at("t1").is_null()) {
        s.t1 = detail::parse_coherence_spec(j.at("t1"), "t1");
    }
    if (j.contains("t2") && !j.at("t2").is_null()) {
        s.t2 = detail::parse_coherence_spec(j.at("t2"), "t2");
    }
    s.terminal_idle = j.value("terminal_idle", true);
}

inline void to_json(nlohmann::json &j, const NoiseSpec &s) {
    j = nlohmann::json{{"kind", s.kind},   {"schedule", s.schedule},
                       {"p_1q", s.p_1q},   {"p_2q", s.p_2q},
                       {"t1", detail::coherence_spec_json(s.t1)},
                       {"t2", detail::coherence_spec_json(s.t2)},
                       {"terminal_idle", s.terminal_idle}};
}

inline void to_json(nlohmann::json &j, const ExperimentConfig &c) {
    j = nlohmann::json{{"n_qubits", c.n_qubits},
                       {"layers", c.layers},
                       {"noise", c.noise},
                       {"platform", c.platform},
                       {"shots", c.shots},
                       {"landscape", {{"cap", c.landscape_cap}, {"factor", c.landscape_factor}}},
                       {"n_walks", c.n_walks},
                       {"seed", c.seed},
                       {"output_dir", c.output_dir},
                       {"tag", c.tag},
                       {"floor_landscapes", c.floor_landscapes}};
    j["hamiltonian_seed"] =
        c.hamiltonian_seed ? nlohmann::json(*c.hamiltonian_seed) : nlohmann::json(nullptr);
    j["timing"] = c.timing ? nlohmann::json(*c.timing) : nlohmann::json(nullptr);
    j["hamiltonian"] = c.hamiltonian ? *c.hamiltonian : nlohmann::json(nullptr);
}

/// Builds a config from JSON; `seed` is mandatory.
inline ExperimentConfig config_from_json(const nlohmann::json &j) {
    ExperimentConfig c;
    try {
        if (!j.is_object()) {
            throw ConfigError("configuration must be a JSON object");
        }
        if (!j.contains("seed") || j.at("seed").is_null()) {
            throw ConfigError("a master 'seed' is required");
        }
        c.seed = j.at("seed").get<std::uint64_t>();
        c.n_qubits = j.value("n_qubits", c.n_qubits);
        if (j.contains("layers")) {
            c.layers = j.at("layers").get<std::vector<std::size_t>>();
        }
        if (j.contains("noise")) {
            c.noise = j.at("noise").get<NoiseSpec>();
        }
        c.platform = j.value("platform", c.platform);
        if (j.contains("timing") && !j.at("timing").is_null()) {
            c.timing = j.at("timing").get<TimingModel>();
        }
        c.shots = j.value("shots", c.shots);
        if (j.contains("landscape")) {
            c.landscape_cap = j.at("landscape").value("cap", c.landscape_cap);
            c.landscape_factor = j.at("landscape").value("factor", c.landscape_factor);
        }
        c.n_walks = j.value("n_walks", c.n_walks);
        if (j.contains("hamiltonian_seed") && !j.at("hamiltonian_seed").is_null()) {
            c.hamiltonian_seed = j.at("hamiltonian_seed").get<std::uint64_t>();
        }
        if (j.contains("hamiltonian") && !j.at("hamiltonian").is_null()) {
            c.hamiltonian = j.at("hamiltonian");
        }
        c.workers = j.value("workers", c.workers);
        c.output_dir = j.value("output_dir", c.output_dir);
        c.tag = j.value("tag", c.tag);
        c.floor_landscapes = j.value("floor_landscapes", c.floor_landscapes);
    } catch (const nlohmann::json::exception &e) {
        throw ConfigError(std::string("invalid configuration: ") + e.what());
    }
    c.validate();
    return c;
}

/// Applies `dotted.key=value` to a JSON document; value is parsed as JSON
/// when possible and taken as a string otherwise.
inline void apply_override(nlohmann::json &j, const std::string &assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw ConfigError("override '" + assignment + "' is not key=value");
    }
    const std::string key = assignment.substr(0, eq);
    const std::string raw = assignment.substr(eq + 1);
    nlohmann::json value;
    try {
        value = nlohmann::json::parse(raw);
    } catch (const nlohmann::json::exception &) {
        value = raw;
    }
    std::string pointer;
    std::stringstream ss(key);
    std::string part;
    while (std::getline(ss, part, '.')) {
        if (part.empty()) {
            throw ConfigError("override key '" + key + "' has an empty component");
        }
        pointer += "/" + part;
    }
    j[nlohmann::json::json_pointer(pointer)] = value;
}

inline nlohmann::json read_config_json(const fs::path &path) {
    std::ifstream is(path);
    if (!is) {
        throw ConfigError("cannot open configuration " + path.string());
    }
    try {
        return nlohmann::json::parse(is, nullptr, true, true);
    } catch (const nlohmann::json::parse_error &e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

inline ExperimentConfig load_config(const fs::path &path,
                                    const std::vector<std::string> &overrides = {}) {
    auto j = read_config_json(path);
    for (const auto &o : overrides) {
        apply_override(j, o);
    }
    return config_from_json(j);
}

inline TimingModel config_timing(const ExperimentConfig &c) {
    if (c.timing) {
        return *c.timing;
    }
    try {
        return timing_model(c.platform);
    } catch (const InvalidArgument &e) {
        throw ConfigError(e.what());
    }
}

/// The Hamiltonian of the experiment: explicit {J, h} or drawn from the
/// Hamiltonian seed (derived from the master seed and n when unset).
inline IsingHamiltonian config_hamiltonian(const ExperimentConfig &c) {
    if (c.hamiltonian) {
        try {
            auto J = c.hamiltonian->at("J").get<std::vector<double>>();
            auto h = c.hamiltonian->at("h").get<std::vector<double>>();
            auto out = IsingHamiltonian::make(std::move(J), std::move(h));
            if (out.n_qubits != c.n_qubits) {
                throw ConfigError("hamiltonian size does not match n_qubits");
            }
            return out;
        } catch (const nlohmann::json::exception &e) {
            throw ConfigError(std::string("invalid hamiltonian: ") + e.what());
        } catch (const InvalidArgument &e) {
            throw ConfigError(std::string("invalid hamiltonian: ") + e.what());
        }
    }
    const std::uint64_t hs =
        c.hamiltonian_seed ? *c.hamiltonian_seed
                           : derive_seed(c.seed, "hamiltonian", {c.n_qubits});
    return sample_hamiltonian(c.n_qubits, hs);
}

inline NoiseModel config_noise(const ExperimentConfig &c) {
    const auto &s = c.noise;
    const std::size_t n = c.n_qubits;
    auto coherences = [&](bool need_t2) {
        CoherenceSample cs;
        if (s.t1.normal) {
            // without T2 the draw is a placeholder replaced by 2 T1 below
            const NormalParams t2 = need_t2 && s.t2.normal ? *s.t2.normal : NormalParams{1.0, 0.0};
            if (need_t2 && !s.t2.normal) {
                throw ConfigError("noise.t2 must be {mean, std} when t1 is");
            }
            cs = sample_coherences(n, *s.t1.normal, t2, derive_seed(c.seed, "coherences", {n}));
            if (!need_t2) {
                for (std::size_t q = 0; q < n; ++q) {
                    cs.t2[q] = 2.0 * cs.t1[q];
                }
            }
        } else {
            cs.t1 = detail::resolve_coherences(s.t1, n, "t1");
            if (need_t2) {
                cs.t2 = detail::resolve_coherences(s.t2, n, "t2");
            } else {
                cs.t2.resize(n);
                for (std::size_t q = 0; q < n; ++q) {
                    cs.t2[q] = 2.0 * cs.t1[q];
                }
            }
        }
        return cs;
    };
    NoiseModel m;
    try {
        const auto kind = parse_noise_kind(s.kind);
        std::optional<ScheduleMode> mode;
        if (!s.schedule.empty()) {
            mode = parse_schedule(s.schedule);
        }
        switch (kind) {
        case NoiseKind::none:
            m = NoiseModel::none();
            break;
        case NoiseKind::depolarizing:
            m = NoiseModel::depolarizing(s.p_1q, mode.value_or(ScheduleMode::per_gate));
            m.p_2q = s.p_2q;
            break;
        case NoiseKind::amplitude_damping:
            if (s.t1.empty()) {
                m = NoiseModel::damping_probability(s.p_1q, s.p_2q);
                if (mode) {
                    m.schedule = *mode;
                }
            } else {
                m = NoiseModel::amplitude_damping(coherences(false),
                                                  mode.value_or(ScheduleMode::per_layer));
            }
            break;
        case NoiseKind::ad_dephasing:
            if (s.t1.empty()) {
                throw ConfigError("ad+deph noise needs noise.t1 and noise.t2");
            }
            m = NoiseModel::ad_dephasing(coherences(true),
                                         mode.value_or(ScheduleMode::per_layer));
            break;
        }
        m.terminal_idle = m.terminal_idle && s.terminal_idle;
        m.validate(n);
    } catch (const InvalidArgument &e) {
        throw ConfigError(std::string("invalid noise block: ") + e.what());
    }
    return m;
}

inline std::string config_tag(const ExperimentConfig &c) {
    if (!c.tag.empty()) {
        return c.tag;
    }
    auto t = c.noise.kind;
    std::replace(t.begin(), t.end(), '+', '_');
    return "n" + std::to_string(c.n_qubits) + "_" + t;
}

inline void ExperimentConfig::validate() const {
    if (n_qubits < 2) {
        throw ConfigError("n_qubits must be at least 2");
    }
    if (n_qubits > SimulationLimits{}.max_qubits) {
        throw ConfigError("n_qubits exceeds the simulation limit of " +
                          std::to_string(SimulationLimits{}.max_qubits));
    }
    if (layers.empty()) {
        throw ConfigError("layer list must not be empty");
    }
    for (std::size_t i = 0; i < layers.size(); ++i) {
        if (layers[i] < 1) {
            throw ConfigError("layer counts must be at least 1");
        }
        if (i > 0 && layers[i] <= layers[i - 1]) {
            throw ConfigError("layer list must be strictly increasing");
        }
    }
    if (landscape_cap < 3 || landscape_factor < 1) {
        throw ConfigError("landscape cap must be >= 3 and factor >= 1");
    }
    if (n_walks < 1) {
        throw ConfigError("n_walks must be at least 1");
    }
    if (floor_landscapes < 1) {
        throw ConfigError("floor_landscapes must be at least 1");
    }
    config_timing(*this).validate();
    config_noise(*this);
    config_hamiltonian(*this);
}

// ---------------------------------------------------------------------------
// Simulation cost functions

/// Cost of one parameter vector: the noisy circuit from |+..+>, then either
/// the exact expectation (shots = 0) or a shot estimate seeded by shot_seed.
inline CostEstimate simulate_cost(const IsingHamiltonian &h, std::span<const double> energies,
                                  const NoiseModel &noise, const TimingModel &timing,
                                  std::span<const double> theta, std::uint64_t shots,
                                  std::uint64_t shot_seed) {
    const auto pv = ParameterVector::make({theta.begin(), theta.end()});
    const auto gates = build_circuit(h, pv);
    auto rho = new_plus_state(h.n_qubits);
    apply_schedule(rho, gates, noise, timing, pv.layers);
    if (shots == 0) {
        return CostEstimate{exact_cost(rho, energies), 0.0, 0};
    }
    return estimate_cost(rho, energies, shots, shot_seed);
}

/// Final state of the noisy circuit for theta.
inline DensityMatrix simulate_state(const IsingHamiltonian &h, const NoiseModel &noise,
                                    const TimingModel &timing, std::span<const double> theta) {
    const auto pv = ParameterVector::make({theta.begin(), theta.end()});
    const auto gates = build_circuit(h, pv);
    auto rho = new_plus_state(h.n_qubits);
    apply_schedule(rho, gates, noise, timing, pv.layers);
    return rho;
}

// ---------------------------------------------------------------------------
// Sweep

struct SweepLevel {
    std::size_t layers = 0;
    Landscape landscape;
    IcResult icla;
    double t_cir = 0.0;
};

struct SweepResult {
    ExperimentConfig config;
    IsingHamiltonian hamiltonian;
    NoiseModel noise;
    TimingModel timing;
    GradientCurve curve;
    std::vector<SweepLevel> levels;
    std::optional<FlatteningFit> fit;
};

/// Landscape of one layer count. Points, shots and walks use seeds derived
/// from the master seed and (L, point) indices, so the output does not
/// depend on the worker count.
inline SweepLevel run_level(const ExperimentConfig &c, const IsingHamiltonian &h,
                            std::span<const double> energies, const NoiseModel &noise,
                            const TimingModel &timing, std::size_t L) {
    const std::size_t m = 2 * L;
    const std::size_t M = landscape_size(m, c.landscape_cap, c.landscape_factor);
    const CostFunction fn = [&](std::span<const double> theta, std::size_t i) {
        return simulate_cost(h, energies, noise, timing, theta, c.shots,
                             derive_seed(c.seed, "shots", {L, i}));
    };
    SweepLevel lv;
    lv.layers = L;
    try {
        lv.landscape = sample_landscape(fn, m, M, derive_seed(c.seed, "points", {L}), c.workers);
    } catch (const EvaluationError &e) {
        throw NumericalError("sweep failed at L=" + std::to_string(L) + ", point " +
                             std::to_string(e.point_index()) + ": " + e.what());
    }
    auto &meta = lv.landscape.meta;
    meta.n_qubits = h.n_qubits;
    meta.layers = L;
    meta.noise_tag = noise.tag();
    meta.shots = c.shots;
    meta.seed = c.seed;
    meta.c0 = h.c0;
    lv.icla = run_icla(lv.landscape, c.n_walks, derive_seed(c.seed, "walks", {L}));
    lv.t_cir = circuit_runtime(h.n_qubits, L, timing);
    return lv;
}

inline nlohmann::json fit_json(const FlatteningFit &fit) {
    std::optional<EffectiveT1Report> t1;
    if (fit.verdict == kVerdictPlateau && fit.t_flat > 0.0) {
        t1 = effective_t1(fit.t_flat, std::isfinite(fit.t_flat_err) ? fit.t_flat_err : 0.0);
    }
    return analysis_report(fit, t1);
}

inline nlohmann::json sweep_report(const SweepResult &r) {
    nlohmann::json j;
    j["config"] = r.config;
    j["config"].erase("output_dir");
    j["hamiltonian"] = r.hamiltonian;
    j["timing"] = r.timing;
    j["noise_tag"] = r.noise.tag();
    j["coherences"] = {{"t1", r.noise.coherences.t1}, {"t2", r.noise.coherences.t2}};
    nlohmann::json levels = nlohmann::json::array();
    for (const auto &lv : r.levels) {
        nlohmann::json l;
        l["layers"] = lv.layers;
        l["m"] = lv.icla.m;
        l["landscape_points"] = lv.icla.landscape_points;
        l["t_cir_us"] = lv.t_cir;
        l["depth"] = circuit_depth(r.hamiltonian.n_qubits, lv.layers, r.timing);
        l["gradient_norm"] = lv.icla.gradient_norm;
        l["bootstrap_std"] = lv.icla.bootstrap_std;
        l["epsilon_max"] = lv.icla.epsilon_max;
        levels.push_back(std::move(l));
    }
    j["levels"] = std::move(levels);
    j["flattening"] = r.fit ? fit_json(*r.fit) : nlohmann::json(nullptr);
    return j;
}

inline void write_json_file(const fs::path &path, const nlohmann::json &j) {
    std::ofstream os(path);
    if (!os) {
        throw Error("cannot write " + path.string());
    }
    os << j.dump(2) << '\n';
}

/// Runs every layer count of the config and, when `write` is set, stores
/// <output_dir>/sweep_<tag>/{curve.csv, landscapes/L<k>.csv, report.json}.
inline SweepResult run_sweep(const ExperimentConfig &c, bool write = true) {
    c.validate();
    SweepResult r;
    r.config = c;
    r.hamiltonian = config_hamiltonian(c);
    r.noise = config_noise(c);
    r.timing = config_timing(c);
    const auto energies = r.hamiltonian.energy_table();
    r.curve.n_qubits = c.n_qubits;
    r.curve.noise_tag = r.noise.tag();
    r.curve.platform = to_string(r.timing.platform);
    for (const auto L : c.layers) {
        auto lv = run_level(c, r.hamiltonian, energies, r.noise, r.timing, L);
        r.curve.points.push_back({lv.t_cir, lv.icla.gradient_norm, lv.icla.bootstrap_std, L});
        r.levels.push_back(std::move(lv));
    }
    r.curve.validate();
    if (r.curve.size() >= 5) {
        try {
            r.fit = fit_flattening(r.curve);
        } catch (const InvalidArgument &) {
            r.fit.reset();
        }
    }
    if (write) {
        const fs::path dir = fs::path(c.output_dir) / ("sweep_" + config_tag(c));
        fs::create_directories(dir / "landscapes");
        {
            std::ofstream os(dir / "curve.csv");
            if (!os) {
                throw Error("cannot write " + (dir / "curve.csv").string());
            }
            write_curve_csv(os, r.curve);
        }
        for (const auto &lv : r.levels) {
            save_landscape(dir / "landscapes" / ("L" + std::to_string(lv.layers) + ".csv"),
                           lv.landscape);
        }
        write_json_file(dir / "report.json", sweep_report(r));
    }
    return r;
}

// ---------------------------------------------------------------------------
// Other entry points

/// ICLA on a landscape file, optionally on its first `truncate` points.
inline IcResult icla_from_file(const fs::path &landscape, std::size_t n_walks,
                               std::uint64_t seed, std::optional<std::size_t> truncate = {}) {
    auto ls = load_landscape(landscape);
    if (truncate) {
        ls = ls.truncated(*truncate);
    }
    try {
        return run_icla(ls, n_walks, seed);
    } catch (const InvalidArgument &e) {
        throw ParseError(landscape.string() + ": " + e.what());
    }
}

/// Flattening fit plus effective T1 (and percentile when T1 values are
/// supplied) for a curve file.
inline nlohmann::json analyze_curve(const GradientCurve &curve, double p_threshold,
                                    const std::optional<std::vector<double>> &t1_values) {
    const auto fit = fit_flattening(curve);
    std::optional<EffectiveT1Report> t1;
    if (fit.t_flat > 0.0) {
        t1 = effective_t1(fit.t_flat, std::isfinite(fit.t_flat_err) ? fit.t_flat_err : 0.0,
                          p_threshold);
        if (t1_values) {
            const auto pct = t1_percentile(*t1_values, t1->t1_eff);
            t1->percentile = pct.percentile;
            t1->mean_t1 = pct.mean;
        }
    }
    auto j = analysis_report(fit, t1);
    j["n_points"] = curve.size();
    j["noise_tag"] = curve.noise_tag;
    return j;
}

struct SpectrumRun {
    std::size_t layers = 0;
    std::size_t index = 0;
    SpectralProfile profile;
};

/// Evolves rho for every layer count of the config and each parameter
/// vector (given, or drawn from the master seed) and writes
/// <output_dir>/spectrum_<tag>/ with eigenvalue, histogram and analytic
/// reference CSVs plus summary.json.
inline std::vector<SpectrumRun> run_spectrum(const ExperimentConfig &c,
                                             const std::vector<std::vector<double>> &thetas,
                                             std::size_t n_random, std::size_t bins,
                                             std::optional<double> reference_p,
                                             bool write = true) {
    c.validate();
    const auto h = config_hamiltonian(c);
    const auto noise = config_noise(c);
    const auto timing = config_timing(c);
    std::vector<SpectrumRun> runs;
    const fs::path dir = fs::path(c.output_dir) / ("spectrum_" + config_tag(c));
    if (write) {
        fs::create_directories(dir);
    }
    nlohmann::json summary = nlohmann::json::array();
    constexpr double two_pi = 2.0 * std::numbers::pi;
    for (const auto L : c.layers) {
        std::vector<std::vector<double>> points;
        for (const auto &t : thetas) {
            if (t.size() != 2 * L) {
                throw ConfigError("parameter vector of length " + std::to_string(t.size()) +
                                  " does not match L=" + std::to_string(L));
            }
            points.push_back(t);
        }
        if (thetas.empty()) {
            Rng rng(derive_seed(c.seed, "spectrum-points", {L}));
            for (std::size_t k = 0; k < n_random; ++k) {
                std::vector<double> t(2 * L);
                for (auto &v : t) {
                    v = std::min(uniform01(rng) * two_pi, std::nextafter(two_pi, 0.0));
                }
                points.push_back(std::move(t));
            }
        }
        for (std::size_t k = 0; k < points.size(); ++k) {
            const auto rho = simulate_state(h, noise, timing, points[k]);
            SpectrumRun run{L, k, spectral_profile(rho, bins)};
            if (write) {
                const std::string stem = "L" + std::to_string(L) + "_" + std::to_string(k);
                std::ofstream es(dir / (stem + "_eigen.csv"));
                write_spectrum_csv(es, run.profile.eigenvalues);
                std::ofstream hs(dir / (stem + "_hist.csv"));
                write_histogram_csv(hs, run.profile);
            }
            summary.push_back({{"layers", L},
                               {"index", k},
                               {"max_eigenvalue", run.profile.max_eigenvalue},
                               {"effective_rank", run.profile.effective_rank},
                               {"entropy", run.profile.entropy},
                               {"purity", purity(rho)}});
            runs.push_back(std::move(run));
        }
    }
    if (write) {
        nlohmann::json j;
        j["runs"] = summary;
        j["noise_tag"] = noise.tag();
        if (reference_p) {
            const auto levels = analytic_decay_spectrum(c.n_qubits, *reference_p);
            std::ofstream rs(dir / "analytic_reference.csv");
            write_levels_csv(rs, levels);
            j["reference_p"] = *reference_p;
        } else {
            j["reference_p"] = nullptr;
        }
        write_json_file(dir / "summary.json", j);
    }
    return runs;
}

struct FloorRow {
    std::size_t layers = 0;
    std::size_t m = 0;
    std::uint64_t shots = 0;
    NoiseFloor floor;
    std::optional<double> gradient;
};

/// Shot-noise floor for every layer count of the config. Gradients to
/// compare against come from `gradients` (matched by layer count).
inline std::vector<FloorRow> run_noise_floor(const ExperimentConfig &c,
                                             const std::optional<GradientCurve> &gradients,
                                             std::optional<double> fixed_gradient,
                                             bool write = true) {
    c.validate();
    if (c.shots == 0) {
        throw ConfigError("the shot-noise floor needs shots > 0");
    }
    const auto h = config_hamiltonian(c);
    std::vector<FloorRow> rows;
    for (const auto L : c.layers) {
        FloorRow row;
        row.layers = L;
        row.m = 2 * L;
        row.shots = c.shots;
        row.floor = shot_noise_floor(h, row.m, c.shots, c.floor_landscapes,
                                     derive_seed(c.seed, "floor", {L, c.shots}), c.n_walks,
                                     c.workers);
        if (gradients) {
            for (const auto &p : gradients->points) {
                if (p.layers == L) {
                    row.gradient = p.gradient;
                }
            }
        }
        if (!row.gradient && fixed_gradient) {
            row.gradient = fixed_gradient;
        }
        rows.push_back(std::move(row));
    }
    if (write) {
        const fs::path dir = fs::path(c.output_dir) / ("floor_" + config_tag(c));
        fs::create_directories(dir);
        std::ofstream os(dir / "floor.csv");
        os << "layers,m,shots,floor_mean,floor_std,gradient,ratio\n" << std::setprecision(17);
        for (const auto &r : rows) {
            os << r.layers << ',' << r.m << ',' << r.shots << ',' << r.floor.mean << ','
               << r.floor.stddev << ',';
            if (r.gradient) {
                os << *r.gradient << ',' << r.floor.mean / *r.gradient;
            } else {
                os << ',';
            }
            os << '\n';
        }
    }
    return rows;
}

} // namespace qland
