#pragma once

// Information content landscape analysis: estimate the mean gradient norm of
// a cost landscape from costs sampled at random parameter vectors.
//
// A walk visits the sampled points in random order; the slopes between
// consecutive points are thresholded at eps into {-, 0, +}, and the entropy
// of distinct consecutive symbol pairs H(eps) is maximised over eps. The
// maximiser eps_M gives the gradient estimate eps_M * sqrt(m).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <istream>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "csv.hpp"
#include "error.hpp"
#include "estimate.hpp"
#include "parallel.hpp"
#include "seed.hpp"

namespace qland {

inline constexpr std::size_t kEpsilonGridSize = 200;
inline constexpr std::size_t kDefaultWalks = 50;

struct LandscapeMeta {
    std::size_t n_qubits = 0;
    std::size_t layers = 0;
    std::string noise_tag = "none";
    std::uint64_t shots = 0;
    std::uint64_t seed = 0;
    std::optional<double> c0; // gradient normalisation, when known
};

inline void to_json(nlohmann::json &j, const LandscapeMeta &m) {
    j = nlohmann::json{{"n_qubits", m.n_qubits}, {"layers", m.layers},
                       {"noise_tag", m.noise_tag}, {"shots", m.shots},
                       {"seed", m.seed}};
    j["c0"] = m.c0 ? nlohmann::json(*m.c0) : nlohmann::json(nullptr);
}

inline void from_json(const nlohmann::json &j, LandscapeMeta &m) {
    m.n_qubits = j.value("n_qubits", std::size_t{0});
    m.layers = j.value("layers", std::size_t{0});
    m.noise_tag = j.value("noise_tag", std::string("none"));
    m.shots = j.value("shots", std::uint64_t{0});
    m.seed = j.value("seed", std::uint64_t{0});
    m.c0.reset();
    if (j.contains("c0") && !j.at("c0").is_null()) {
        m.c0 = j.at("c0").get<double>();
    }
}

/// M sampled parameter vectors of dimension m with their measured costs.
struct Landscape {
    std::size_t m = 0;
    std::vector<std::vector<double>> points;
    std::vector<double> costs;
    std::vector<double> cost_errors;
    LandscapeMeta meta;

    [[nodiscard]] std::size_t size() const noexcept { return points.size(); }

    void validate() const {
        if (points.size() < 3) {
            throw InvalidArgument("a landscape needs at least 3 points");
        }
        if (costs.size() != points.size() || cost_errors.size() != points.size()) {
            throw InvalidArgument("landscape points, costs and errors differ in count");
        }
        constexpr double two_pi = 2.0 * std::numbers::pi;
        for (const auto &p : points) {
            if (p.size() != m) {
                throw InvalidArgument("landscape point has wrong dimension");
            }
            for (const double v : p) {
                if (!(v >= 0.0 && v < two_pi)) {
                    throw InvalidArgument("landscape coordinates must lie in [0, 2pi)");
                }
            }
        }
    }

    /// The first `count` points.
    [[nodiscard]] Landscape truncated(std::size_t count) const {
        Landscape out = *this;
        count = std::min(count, size());
        out.points.resize(count);
        out.costs.resize(count);
        out.cost_errors.resize(count);
        return out;
    }
};

/// min(factor * m, cap)
constexpr std::size_t landscape_size(std::size_t m, std::size_t cap = 200,
                                     std::size_t factor = 10) {
    if (m < 1) {
        throw InvalidArgument("parameter dimension must be at least 1");
    }
    return std::min(factor * m, cap);
}

using CostFunction =
    std::function<CostEstimate(std::span<const double> theta, std::size_t index)>;

/// Draws M uniform points in [0, 2pi)^m from `seed` and evaluates cost_fn on
/// each. cost_fn receives the point index so it can derive per-point seeds;
/// evaluations run on `workers` threads and results are stored by index.
inline Landscape sample_landscape(const CostFunction &cost_fn, std::size_t m,
                                  std::size_t M, std::uint64_t seed,
                                  std::size_t workers = 1) {
    if (M < 3) {
        throw InvalidArgument("a landscape needs at least 3 points");
    }
    if (m < 1) {
        throw InvalidArgument("parameter dimension must be at least 1");
    }
    constexpr double two_pi = 2.0 * std::numbers::pi;
    Landscape ls;
    ls.m = m;
    ls.meta.seed = seed;
    ls.points.assign(M, std::vector<double>(m));
    Rng rng(seed);
    for (auto &p : ls.points) {
        for (auto &v : p) {
            v = std::min(uniform01(rng) * two_pi, std::nextafter(two_pi, 0.0));
        }
    }
    ls.costs.resize(M);
    ls.cost_errors.resize(M);
    parallel_for(M, workers, [&](std::size_t i) {
        CostEstimate c;
        try {
            c = cost_fn(ls.points[i], i);
        } catch (const std::exception &e) {
            throw EvaluationError(i, e.what());
        }
        ls.costs[i] = c.mean;
        ls.cost_errors[i] = c.std_error;
    });
    return ls;
}

struct WalkDeltas {
    std::vector<double> deltas;
    std::vector<std::size_t> order; // visiting order of landscape points
    std::size_t skipped_pairs = 0;  // consecutive points at zero distance
};

/// Finite-difference slopes along a random permutation of all points.
inline WalkDeltas walk_deltas(const Landscape &ls, std::uint64_t walk_seed) {
    if (ls.size() < 3) {
        throw InvalidArgument("a walk needs at least 3 landscape points");
    }
    WalkDeltas wd;
    wd.order.resize(ls.size());
    std::iota(wd.order.begin(), wd.order.end(), std::size_t{0});
    Rng rng(walk_seed);
    // Fisher-Yates with an explicit draw so the order is library independent
    for (std::size_t i = wd.order.size() - 1; i > 0; --i) {
        const auto j = static_cast<std::size_t>(uniform01(rng) *
                                                static_cast<double>(i + 1));
        std::swap(wd.order[i], wd.order[std::min(j, i)]);
    }
    wd.deltas.reserve(ls.size() - 1);
    for (std::size_t k = 0; k + 1 < wd.order.size(); ++k) {
        const auto &a = ls.points[wd.order[k]];
        const auto &b = ls.points[wd.order[k + 1]];
        double dist2 = 0.0;
        for (std::size_t d = 0; d < ls.m; ++d) {
            const double diff = b[d] - a[d];
            dist2 += diff * diff;
        }
        if (dist2 == 0.0) {
            ++wd.skipped_pairs;
            continue;
        }
        wd.deltas.push_back((ls.costs[wd.order[k + 1]] - ls.costs[wd.order[k]]) /
                            std::sqrt(dist2));
    }
    if (wd.deltas.size() < 2) {
        throw InvalidArgument("walk produced fewer than two usable slopes");
    }
    return wd;
}

enum class Symbol : std::uint8_t { minus = 0, neutral = 1, plus = 2 };

inline std::vector<Symbol> symbolize(std::span<const double> deltas, double eps) {
    if (!(eps >= 0.0)) {
        throw InvalidArgument("symbol threshold must be non-negative");
    }
    std::vector<Symbol> out(deltas.size());
    for (std::size_t i = 0; i < deltas.size(); ++i) {
        const double d = deltas[i];
        out[i] = d < -eps ? Symbol::minus : (d > eps ? Symbol::plus : Symbol::neutral);
    }
    return out;
}

inline std::vector<Symbol> symbolize(const WalkDeltas &wd, double eps) {
    return symbolize(wd.deltas, eps);
}

/// Base-6 entropy of the distinct ordered pairs among consecutive symbols.
inline double information_content(std::span<const Symbol> symbols) {
    if (symbols.size() < 2) {
        throw InvalidArgument("information content needs at least two symbols");
    }
    std::array<std::size_t, 9> counts{};
    for (std::size_t i = 0; i + 1 < symbols.size(); ++i) {
        counts[3 * static_cast<std::size_t>(symbols[i]) +
               static_cast<std::size_t>(symbols[i + 1])]++;
    }
    const double total = static_cast<double>(symbols.size() - 1);
    const double log6 = std::log(6.0);
    double h = 0.0;
    for (std::size_t a = 0; a < 3; ++a) {
        for (std::size_t b = 0; b < 3; ++b) {
            const auto c = counts[3 * a + b];
            if (a == b || c == 0) {
                continue;
            }
            const double p = static_cast<double>(c) / total;
            h -= p * std::log(p) / log6;
        }
    }
    return h;
}

struct IcPoint {
    double epsilon = 0.0;
    double entropy = 0.0;
};

struct IcCurve {
    double epsilon_max = 0.0;
    std::vector<IcPoint> curve;
    bool degenerate = false; // every slope was zero
};

/// Threshold grid: 0 plus kEpsilonGridSize log-spaced values between the
/// smallest non-zero and the largest |slope|.
inline std::vector<double> epsilon_grid(std::span<const double> deltas) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (const double d : deltas) {
        const double a = std::abs(d);
        if (a > 0.0) {
            lo = std::min(lo, a);
            hi = std::max(hi, a);
        }
    }
    std::vector<double> grid{0.0};
    if (hi == 0.0) {
        return grid;
    }
    const double llo = std::log(lo);
    const double lhi = std::log(hi);
    for (std::size_t k = 0; k < kEpsilonGridSize; ++k) {
        const double f = static_cast<double>(k) /
                         static_cast<double>(kEpsilonGridSize - 1);
        grid.push_back(k + 1 == kEpsilonGridSize ? hi : std::exp(llo + f * (lhi - llo)));
    }
    return grid;
}

/// H(eps) over the grid; eps_M is the first (smallest) argmax.
inline IcCurve maximize_ic(const WalkDeltas &wd) {
    IcCurve out;
    const auto grid = epsilon_grid(wd.deltas);
    out.degenerate = grid.size() == 1;
    double best = -1.0;
    for (const double eps : grid) {
        const auto symbols = symbolize(wd.deltas, eps);
        const double h = information_content(symbols);
        out.curve.push_back({eps, h});
        if (h > best) {
            best = h;
            out.epsilon_max = eps;
        }
    }
    if (out.degenerate) {
        out.epsilon_max = 0.0;
    }
    return out;
}

struct IcResult {
    std::size_t m = 0;
    std::size_t landscape_points = 0;
    std::size_t n_walks = 0;
    double epsilon_max = 0.0;      // mean eps_M over walks
    std::vector<IcPoint> ic_curve; // H(eps) of the first walk
    double gradient_norm = 0.0;    // mean of eps_M sqrt(m) [/ c0]
    double bootstrap_std = 0.0;    // std of the per-walk estimates
    std::vector<double> walk_gradients;
    bool normalized = false;
    bool degenerate = false;
};

inline void to_json(nlohmann::json &j, const IcResult &r) {
    nlohmann::json curve = nlohmann::json::array();
    for (const auto &p : r.ic_curve) {
        curve.push_back({p.epsilon, p.entropy});
    }
    j = nlohmann::json{{"m", r.m},
                       {"landscape_points", r.landscape_points},
                       {"n_walks", r.n_walks},
                       {"epsilon_max", r.epsilon_max},
                       {"gradient_norm", r.gradient_norm},
                       {"bootstrap_std", r.bootstrap_std},
                       {"normalized", r.normalized},
                       {"degenerate", r.degenerate},
                       {"walk_gradients", r.walk_gradients},
                       {"ic_curve", curve}};
}

/// Runs n_walks independent walks (seeds derived from `seed`) and averages
/// eps_M sqrt(m), dividing by meta.c0 when the landscape carries one.
inline IcResult run_icla(const Landscape &ls, std::size_t n_walks = kDefaultWalks,
                         std::uint64_t seed = 0) {
    ls.validate();
    if (n_walks < 1) {
        throw InvalidArgument("ICLA needs at least one walk");
    }
    IcResult r;
    r.m = ls.m;
    r.landscape_points = ls.size();
    r.n_walks = n_walks;
    r.normalized = ls.meta.c0.has_value();
    const double scale = std::sqrt(static_cast<double>(ls.m)) /
                         (r.normalized ? *ls.meta.c0 : 1.0);
    r.walk_gradients.resize(n_walks);
    bool all_degenerate = true;
    double eps_sum = 0.0;
    for (std::size_t w = 0; w < n_walks; ++w) {
        const auto wd = walk_deltas(ls, derive_seed(seed, "icla-walk", {w}));
        auto curve = maximize_ic(wd);
        all_degenerate = all_degenerate && curve.degenerate;
        eps_sum += curve.epsilon_max;
        r.walk_gradients[w] = curve.epsilon_max * scale;
        if (w == 0) {
            r.ic_curve = std::move(curve.curve);
        }
    }
    r.degenerate = all_degenerate;
    r.epsilon_max = eps_sum / static_cast<double>(n_walks);
    double sum = 0.0;
    for (const double g : r.walk_gradients) {
        sum += g;
    }
    r.gradient_norm = sum / static_cast<double>(n_walks);
    if (n_walks > 1) {
        double ss = 0.0;
        for (const double g : r.walk_gradients) {
            ss += (g - r.gradient_norm) * (g - r.gradient_norm);
        }
        r.bootstrap_std = std::sqrt(ss / static_cast<double>(n_walks - 1));
    }
    return r;
}

// ---------------------------------------------------------------------------
// Landscape files: CSV `theta_0..theta_{m-1},cost,cost_err` plus a JSON
// sidecar with the metadata.

inline void write_landscape_csv(std::ostream &os, const Landscape &ls) {
    for (std::size_t d = 0; d < ls.m; ++d) {
        os << "theta_" << d << ',';
    }
    os << "cost,cost_err\n" << std::setprecision(17);
    for (std::size_t i = 0; i < ls.size(); ++i) {
        for (const double v : ls.points[i]) {
            os << v << ',';
        }
        os << ls.costs[i] << ',' << ls.cost_errors[i] << '\n';
    }
}

inline Landscape read_landscape_csv(std::istream &is,
                                    const std::string &source = "<landscape>") {
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(is, line)) {
        throw ParseError(source, 1, "empty landscape file");
    }
    ++lineno;
    const auto header = csv::split(csv::trim(line));
    if (header.size() < 3) {
        throw ParseError(source, lineno, "header needs theta columns, cost, cost_err");
    }
    const std::size_t m = header.size() - 2;
    for (std::size_t d = 0; d < m; ++d) {
        if (csv::trim(header[d]) != "theta_" + std::to_string(d)) {
            throw ParseError(source, lineno,
                             "expected column 'theta_" + std::to_string(d) +
                                 "', found '" + std::string(header[d]) + "'");
        }
    }
    if (csv::trim(header[m]) != "cost" || csv::trim(header[m + 1]) != "cost_err") {
        throw ParseError(source, lineno, "last two columns must be 'cost,cost_err'");
    }
    Landscape ls;
    ls.m = m;
    while (std::getline(is, line)) {
        ++lineno;
        if (csv::trim(line).empty()) {
            continue;
        }
        const auto fields = csv::split(csv::trim(line));
        if (fields.size() != m + 2) {
            throw ParseError(source, lineno,
                             "expected " + std::to_string(m + 2) + " columns, found " +
                                 std::to_string(fields.size()));
        }
        std::vector<double> p(m);
        for (std::size_t d = 0; d < m; ++d) {
            p[d] = csv::parse_double(fields[d], source, lineno);
        }
        ls.points.push_back(std::move(p));
        ls.costs.push_back(csv::parse_double(fields[m], source, lineno));
        ls.cost_errors.push_back(csv::parse_double(fields[m + 1], source, lineno));
    }
    return ls;
}

inline std::filesystem::path sidecar_path(const std::filesystem::path &csv_path) {
    auto p = csv_path;
    p.replace_extension(".json");
    return p;
}

inline void save_landscape(const std::filesystem::path &csv_path, const Landscape &ls) {
    {
        std::ofstream os(csv_path);
        if (!os) {
            throw Error("cannot write " + csv_path.string());
        }
        write_landscape_csv(os, ls);
    }
    nlohmann::json meta = ls.meta;
    meta["m"] = ls.m;
    meta["points"] = ls.size();
    std::ofstream js(sidecar_path(csv_path));
    js << meta.dump(2) << '\n';
}

/// Reads a landscape CSV and, if present, its JSON sidecar.
inline Landscape load_landscape(const std::filesystem::path &csv_path) {
    std::ifstream is(csv_path);
    if (!is) {
        throw ParseError("cannot open landscape file " + csv_path.string());
    }
    auto ls = read_landscape_csv(is, csv_path.string());
    const auto side = sidecar_path(csv_path);
    if (std::filesystem::exists(side)) {
        std::ifstream js(side);
        try {
            ls.meta = nlohmann::json::parse(js).get<LandscapeMeta>();
        } catch (const nlohmann::json::exception &e) {
            throw ParseError(side.string() + ": " + e.what());
        }
    }
    return ls;
}

} // namespace qland
