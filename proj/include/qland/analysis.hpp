#pragma once

// Post-processing of gradient curves and states: flattening-time fits,
// effective T1, T1 percentiles, the finite-difference gradient oracle and
// eigenvalue diagnostics.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iomanip>
#include <istream>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "csv.hpp"
#include "densmat.hpp"
#include "error.hpp"
#include "noise.hpp"
#include "parallel.hpp"
#include "seed.hpp"

namespace qland {

// ---------------------------------------------------------------------------
// Gradient curves

struct CurvePoint {
    double t_cir = 0.0; // microseconds
    double gradient = 0.0;
    double err = 0.0;
    std::size_t layers = 0;
};

struct GradientCurve {
    std::vector<CurvePoint> points;
    std::size_t n_qubits = 0;
    std::string noise_tag = "none";
    std::string platform = "falcon_ladder";

    [[nodiscard]] std::size_t size() const noexcept { return points.size(); }

    void validate() const {
        for (std::size_t i = 0; i < points.size(); ++i) {
            if (!(points[i].gradient >= 0.0) || !std::isfinite(points[i].gradient)) {
                throw InvalidArgument("curve gradients must be finite and non-negative");
            }
            if (i > 0 && !(points[i].t_cir > points[i - 1].t_cir)) {
                throw InvalidArgument("curve times must be strictly increasing");
            }
        }
    }
};

/// CSV `t_cir_us,grad_norm,grad_err,layers,n_qubits,noise_tag`.
inline void write_curve_csv(std::ostream &os, const GradientCurve &c) {
    os << "t_cir_us,grad_norm,grad_err,layers,n_qubits,noise_tag\n" << std::setprecision(17);
    for (const auto &p : c.points) {
        os << p.t_cir << ',' << p.gradient << ',' << p.err << ',' << p.layers << ','
           << c.n_qubits << ',' << c.noise_tag << '\n';
    }
}

inline GradientCurve read_curve_csv(std::istream &is, const std::string &source = "<curve>") {
    static const std::vector<std::string> expected{"t_cir_us", "grad_norm", "grad_err",
                                                   "layers",   "n_qubits",  "noise_tag"};
    std::string line;
    if (!std::getline(is, line)) {
        throw ParseError(source, 1, "empty curve file");
    }
    const auto header = csv::split(csv::trim(line));
    if (header.size() != expected.size()) {
        throw ParseError(source, 1, "expected header t_cir_us,grad_norm,grad_err,layers,n_qubits,noise_tag");
    }
    for (std::size_t k = 0; k < expected.size(); ++k) {
        if (csv::trim(header[k]) != expected[k]) {
            throw ParseError(source, 1, "expected column '" + expected[k] + "', found '" +
                                            std::string(header[k]) + "'");
        }
    }
    GradientCurve c;
    std::size_t lineno = 1;
    bool first = true;
    while (std::getline(is, line)) {
        ++lineno;
        if (csv::trim(line).empty()) {
            continue;
        }
        const auto f = csv::split(csv::trim(line));
        if (f.size() != expected.size()) {
            throw ParseError(source, lineno,
                             "expected 6 columns, found " + std::to_string(f.size()));
        }
        CurvePoint p;
        p.t_cir = csv::parse_double(f[0], source, lineno);
        p.gradient = csv::parse_double(f[1], source, lineno);
        p.err = csv::parse_double(f[2], source, lineno);
        p.layers = static_cast<std::size_t>(csv::parse_int(f[3], source, lineno));
        const auto n = static_cast<std::size_t>(csv::parse_int(f[4], source, lineno));
        const std::string tag(csv::trim(f[5]));
        if (first) {
            c.n_qubits = n;
            c.noise_tag = tag;
            first = false;
        } else if (n != c.n_qubits || tag != c.noise_tag) {
            throw ParseError(source, lineno, "n_qubits and noise_tag must be constant");
        }
        c.points.push_back(p);
    }
    try {
        c.validate();
    } catch (const InvalidArgument &e) {
        throw ParseError(source + ": " + e.what());
    }
    return c;
}

inline GradientCurve load_curve(const std::string &path) {
    std::ifstream is(path);
    if (!is) {
        throw ParseError("cannot open curve file " + path);
    }
    return read_curve_csv(is, path);
}

// ---------------------------------------------------------------------------
// Finite-difference oracle

struct FdGradientStats {
    double mean_norm = 0.0;              // mean Euclidean gradient norm
    double variance_per_component = 0.0; // variance of |dC/dtheta_k| pooled over k
};

using ScalarCost = std::function<double(std::span<const double>)>;

/// (C(x + h e_k) - C(x - h e_k)) / 2h for every coordinate k.
inline std::vector<double> central_gradient(const ScalarCost &cost_fn,
                                            std::span<const double> point, double step) {
    std::vector<double> x(point.begin(), point.end());
    std::vector<double> g(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double x0 = x[k];
        x[k] = x0 + step;
        const double plus = cost_fn(x);
        x[k] = x0 - step;
        const double minus = cost_fn(x);
        x[k] = x0;
        g[k] = (plus - minus) / (2.0 * step);
    }
    return g;
}

/// Central differences along every coordinate at n_points uniform random
/// points. Points are drawn from [step, 2pi - step)^m so every stencil
/// stays inside the parameter domain.
inline FdGradientStats finite_difference_gradient_stats(const ScalarCost &cost_fn,
                                                        std::size_t m,
                                                        std::size_t n_points,
                                                        double step, std::uint64_t seed,
                                                        std::size_t workers = 1) {
    if (!(step > 0.0)) {
        throw InvalidArgument("finite-difference step must be positive");
    }
    if (m < 1 || n_points < 1) {
        throw InvalidArgument("need m >= 1 and at least one point");
    }
    constexpr double two_pi = 2.0 * std::numbers::pi;
    if (!(step < 0.5)) {
        throw InvalidArgument("finite-difference step must be below 0.5");
    }
    std::vector<std::vector<double>> points(n_points, std::vector<double>(m));
    Rng rng(seed);
    for (auto &p : points) {
        for (auto &v : p) {
            v = step + uniform01(rng) * (two_pi - 2.0 * step);
        }
    }
    std::vector<std::vector<double>> partials(n_points);
    parallel_for(n_points, workers, [&](std::size_t i) {
        try {
            partials[i] = central_gradient(cost_fn, points[i], step);
        } catch (const std::exception &e) {
            throw EvaluationError(i, e.what());
        }
    });
    FdGradientStats out;
    double sum_abs = 0.0;
    double sum_sq = 0.0;
    for (const auto &g : partials) {
        double norm2 = 0.0;
        for (const double d : g) {
            norm2 += d * d;
            sum_abs += std::abs(d);
            sum_sq += d * d;
        }
        out.mean_norm += std::sqrt(norm2);
    }
    const double count = static_cast<double>(n_points * m);
    out.mean_norm /= static_cast<double>(n_points);
    const double mean_abs = sum_abs / count;
    out.variance_per_component = count > 1.0
                                      ? std::max(0.0, (sum_sq - count * mean_abs * mean_abs) /
                                                          (count - 1.0))
                                      : 0.0;
    return out;
}

// ---------------------------------------------------------------------------
// Flattening fit

inline const std::string kVerdictPlateau = "plateau";
inline const std::string kVerdictNoPlateau = "no plateau detected";

struct FlatteningFit {
    double t_flat = 0.0;
    double t_flat_err = 0.0;
    double g_inf = 0.0;
    double amplitude = 0.0; // decay amplitude at the first curve time
    double tau = 0.0;
    double residual = 0.0;  // rms of the log residuals
    std::string verdict = kVerdictNoPlateau;
    bool fallback = false;
    bool converged = false;
};

namespace detail {

struct DecayFitState {
    Eigen::Vector3d params = Eigen::Vector3d::Zero(); // ln A, ln tau, ln g_inf
    double ssr = std::numeric_limits<double>::infinity();
    Eigen::MatrixXd jacobian;
    Eigen::VectorXd residuals;
    bool converged = false;
};

inline void decay_residuals(const Eigen::Vector3d &p, std::span<const double> t,
                            std::span<const double> logg, Eigen::VectorXd &r,
                            Eigen::MatrixXd *jac) {
    const double A = std::exp(p[0]);
    const double tau = std::exp(p[1]);
    const double g = std::exp(p[2]);
    const auto n = static_cast<Eigen::Index>(t.size());
    r.resize(n);
    if (jac) {
        jac->resize(n, 3);
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        const double ti = t[static_cast<std::size_t>(i)];
        const double d = A * std::exp(-ti / tau);
        const double d2 = d * d;
        const double g2 = g * g;
        const double s = d2 + g2;
        r[i] = logg[static_cast<std::size_t>(i)] - 0.5 * std::log(s);
        if (jac) {
            // derivatives of the model with respect to the log parameters
            const double wd = d2 / s;
            (*jac)(i, 0) = wd;
            (*jac)(i, 1) = wd * ti / tau;
            (*jac)(i, 2) = g2 / s;
        }
    }
}

/// Levenberg-Marquardt on the log-space decay model.
inline DecayFitState fit_decay(Eigen::Vector3d p, std::span<const double> t,
                               std::span<const double> logg, double log_floor) {
    DecayFitState st;
    Eigen::VectorXd r;
    Eigen::MatrixXd J;
    decay_residuals(p, t, logg, r, &J);
    double ssr = r.squaredNorm();
    double lambda = 1e-3;
    for (int iter = 0; iter < 500; ++iter) {
        const Eigen::Matrix3d JtJ = J.transpose() * J;
        const Eigen::Vector3d g = J.transpose() * r;
        if (g.lpNorm<Eigen::Infinity>() < 1e-14) {
            st.converged = true;
            break;
        }
        bool improved = false;
        for (int inner = 0; inner < 30; ++inner) {
            Eigen::Matrix3d Adamp = JtJ;
            for (int k = 0; k < 3; ++k) {
                Adamp(k, k) += lambda * std::max(JtJ(k, k), 1e-12);
            }
            const Eigen::Vector3d step = Adamp.ldlt().solve(g);
            Eigen::Vector3d trial = p + step;
            // parameters below the floor contribute nothing measurable
            trial[0] = std::max(trial[0], log_floor);
            trial[2] = std::max(trial[2], log_floor);
            trial[1] = std::clamp(trial[1], -30.0, 30.0);
            Eigen::VectorXd rt;
            decay_residuals(trial, t, logg, rt, nullptr);
            const double st_ssr = rt.squaredNorm();
            if (st_ssr < ssr) {
                const double rel = (ssr - st_ssr) / std::max(ssr, 1e-300);
                const double moved = (trial - p).norm();
                p = trial;
                ssr = st_ssr;
                lambda = std::max(lambda / 3.0, 1e-12);
                improved = true;
                if (rel < 1e-12 || moved < 1e-12) {
                    st.converged = true;
                }
                break;
            }
            lambda *= 4.0;
        }
        decay_residuals(p, t, logg, r, &J);
        if (!improved || st.converged) {
            st.converged = true;
            break;
        }
    }
    st.params = p;
    st.ssr = ssr;
    st.jacobian = J;
    st.residuals = r;
    return st;
}

inline double median3(double a, double b, double c) {
    return std::max(std::min(a, b), std::min(std::max(a, b), c));
}

} // namespace detail

/// Fits log g(t) = log sqrt((A e^{-t/tau})^2 + g_inf^2) and reports the
/// crossover time t_flat = tau ln(A / g_inf), clamped to the curve's span.
///
/// Times are taken relative to the first curve point, so the fit is
/// shift-equivariant; `amplitude` is the decay amplitude at that point.
/// The verdict is "no plateau detected" when g_inf is consistent with zero
/// at 2 sigma or when the last two points still follow the pure decay.
/// If no start converges, t_flat falls back to the first time whose
/// gradient is within 1/0.8 of the median of the last three points.
inline FlatteningFit fit_flattening(const GradientCurve &curve) {
    curve.validate();
    std::vector<double> t;
    std::vector<double> logg;
    std::vector<double> rel_err;
    for (const auto &p : curve.points) {
        if (p.gradient > 0.0) {
            t.push_back(p.t_cir);
            logg.push_back(std::log(p.gradient));
            rel_err.push_back(p.err / p.gradient);
        }
    }
    if (t.size() < 5) {
        throw InvalidArgument("flattening fit needs at least 5 positive curve points");
    }
    const double t0 = t.front();
    const double t_last = t.back();
    for (auto &v : t) {
        v -= t0;
    }
    const std::size_t n = t.size();
    const double gmin = std::exp(*std::min_element(logg.begin(), logg.end()));
    const double log_floor = std::log(gmin) - std::log(1e8);

    // decay-rate guess from the first point to the smallest one
    const auto imin = static_cast<std::size_t>(
        std::min_element(logg.begin(), logg.end()) - logg.begin());
    double tau0 = t.back() > 0.0 ? t.back() / 3.0 : 1.0;
    if (imin > 0 && logg[0] > logg[imin]) {
        tau0 = t[imin] / (logg[0] - logg[imin]);
    }
    const std::vector<double> plateau_scales{1.0, 0.3, 0.03, 1e-4};
    const std::vector<double> tau_scales{1.0, 0.5, 2.0};
    detail::DecayFitState best;
    bool any_converged = false;
    for (const double ps : plateau_scales) {
        for (const double ts : tau_scales) {
            Eigen::Vector3d p0(std::log(std::max(std::exp(logg[0]), 1e-300)),
                               std::log(std::max(tau0 * ts, 1e-9)), std::log(gmin * ps));
            auto st = detail::fit_decay(p0, t, logg, log_floor);
            if (st.converged && (!any_converged || st.ssr < best.ssr)) {
                best = std::move(st);
                any_converged = true;
            }
        }
    }

    FlatteningFit out;
    if (!any_converged) {
        const double med = detail::median3(curve.points[curve.size() - 1].gradient,
                                           curve.points[curve.size() - 2].gradient,
                                           curve.points[curve.size() - 3].gradient);
        out.fallback = true;
        out.verdict = kVerdictPlateau;
        out.t_flat = curve.points.back().t_cir;
        for (std::size_t i = 0; i < curve.size(); ++i) {
            bool settled = true;
            for (std::size_t j = i; j < curve.size(); ++j) {
                settled = settled && 0.8 * curve.points[j].gradient <= med;
            }
            if (settled) {
                out.t_flat = curve.points[i].t_cir;
                break;
            }
        }
        out.g_inf = med;
        out.t_flat_err = std::numeric_limits<double>::quiet_NaN();
        return out;
    }

    out.converged = true;
    const double la = best.params[0];
    const double lt = best.params[1];
    const double lg = best.params[2];
    out.amplitude = std::exp(la);
    out.tau = std::exp(lt);
    out.g_inf = std::exp(lg);
    const double dof = n > 3 ? static_cast<double>(n - 3) : 1.0;
    const double s2 = best.ssr / dof;
    out.residual = std::sqrt(best.ssr / static_cast<double>(n));

    // parameter covariance; a parameter the data cannot see gets infinite variance
    const Eigen::MatrixXd &J = best.jacobian;
    const double jscale = J.norm();
    std::array<bool, 3> visible{};
    for (int k = 0; k < 3; ++k) {
        visible[static_cast<std::size_t>(k)] = J.col(k).norm() > 1e-6 * jscale;
    }
    Eigen::Matrix3d cov = Eigen::Matrix3d::Constant(std::numeric_limits<double>::quiet_NaN());
    std::array<double, 3> sigma{};
    sigma.fill(std::numeric_limits<double>::infinity());
    {
        std::vector<int> idx;
        for (int k = 0; k < 3; ++k) {
            if (visible[static_cast<std::size_t>(k)]) {
                idx.push_back(k);
            }
        }
        if (!idx.empty()) {
            const auto kk = static_cast<Eigen::Index>(idx.size());
            Eigen::MatrixXd Js(J.rows(), kk);
            for (Eigen::Index c = 0; c < kk; ++c) {
                Js.col(c) = J.col(idx[static_cast<std::size_t>(c)]);
            }
            const Eigen::MatrixXd JtJ = Js.transpose() * Js;
            Eigen::FullPivLU<Eigen::MatrixXd> lu(JtJ);
            if (lu.isInvertible()) {
                const Eigen::MatrixXd inv = lu.inverse() * std::max(s2, 1e-30);
                for (Eigen::Index a = 0; a < kk; ++a) {
                    for (Eigen::Index b = 0; b < kk; ++b) {
                        cov(idx[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(b)]) =
                            inv(a, b);
                    }
                    sigma[static_cast<std::size_t>(idx[static_cast<std::size_t>(a)])] =
                        std::sqrt(std::max(inv(a, a), 0.0));
                }
            }
        }
    }

    // verdict
    const bool plateau_hidden = !visible[2] || lg <= log_floor + 1e-9;
    const double sigma_g = out.g_inf * sigma[2];
    bool no_plateau = plateau_hidden || !(out.g_inf - 2.0 * sigma_g > 0.0);
    if (!no_plateau) {
        bool follows_decay = true;
        for (std::size_t k = n - 2; k < n; ++k) {
            const double pure = la - t[k] / out.tau;
            const double tol = 2.0 * std::sqrt(rel_err[k] * rel_err[k] + s2);
            follows_decay = follows_decay && std::abs(logg[k] - pure) <= tol;
        }
        no_plateau = follows_decay;
    }
    out.verdict = no_plateau ? kVerdictNoPlateau : kVerdictPlateau;

    // crossover time and its error
    const double rel_cross = out.tau * (la - lg);
    double t_flat = t0 + rel_cross;
    const bool clamped = !(t_flat > t0) || !(t_flat < t_last);
    t_flat = std::clamp(t_flat, t0, t_last);
    out.t_flat = t_flat;
    if (clamped) {
        out.t_flat_err = 0.0;
    } else {
        const Eigen::Vector3d grad(out.tau, rel_cross, -out.tau);
        const double var = grad.dot(cov * grad);
        out.t_flat_err = std::isfinite(var) ? std::sqrt(std::max(var, 0.0))
                                            : std::numeric_limits<double>::infinity();
    }
    return out;
}

// ---------------------------------------------------------------------------
// Effective T1 and coherence statistics

struct EffectiveT1Report {
    double t1_eff = 0.0;
    double t1_eff_err = 0.0;
    double p_threshold = 0.75;
    std::optional<double> percentile; // fraction of qubits with T1 <= t1_eff
    std::optional<double> mean_t1;
};

/// T1_eff = -t_flat / ln(1 - p_threshold).
inline EffectiveT1Report effective_t1(double t_flat, double t_flat_err = 0.0,
                                      double p_threshold = 0.75) {
    if (!(p_threshold > 0.0 && p_threshold < 1.0)) {
        throw InvalidArgument("p_threshold must lie in (0, 1)");
    }
    if (!(t_flat > 0.0)) {
        throw InvalidArgument("t_flat must be positive");
    }
    const double k = -1.0 / std::log1p(-p_threshold);
    EffectiveT1Report r;
    r.p_threshold = p_threshold;
    r.t1_eff = k * t_flat;
    r.t1_eff_err = k * t_flat_err;
    return r;
}

struct T1Percentile {
    double percentile = 0.0;
    double mean = 0.0;
    double stddev = 0.0;
    std::vector<double> sorted;   // CDF abscissae
    std::vector<double> fraction; // fraction of values <= sorted[i]
};

inline T1Percentile t1_percentile(std::span<const double> t1, double t1_eff) {
    if (t1.empty()) {
        throw InvalidArgument("T1 list is empty");
    }
    T1Percentile out;
    out.sorted.assign(t1.begin(), t1.end());
    std::sort(out.sorted.begin(), out.sorted.end());
    const double n = static_cast<double>(t1.size());
    out.fraction.resize(t1.size());
    for (std::size_t i = 0; i < t1.size(); ++i) {
        out.fraction[i] = static_cast<double>(i + 1) / n;
    }
    const auto below = std::upper_bound(out.sorted.begin(), out.sorted.end(), t1_eff) -
                       out.sorted.begin();
    out.percentile = static_cast<double>(below) / n;
    double sum = 0.0;
    for (const double v : t1) {
        sum += v;
    }
    out.mean = sum / n;
    if (t1.size() > 1) {
        double ss = 0.0;
        for (const double v : t1) {
            ss += (v - out.mean) * (v - out.mean);
        }
        out.stddev = std::sqrt(ss / (n - 1.0));
    }
    return out;
}

inline T1Percentile t1_percentile(const CoherenceSample &c, double t1_eff) {
    return t1_percentile(c.t1, t1_eff);
}

/// One T1 value per line; blank lines and '#' comments are skipped. A
/// leading non-numeric line is treated as a header.
inline std::vector<double> read_t1_list(std::istream &is, const std::string &source) {
    std::vector<double> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        auto s = csv::trim(line);
        if (s.empty() || s.front() == '#') {
            continue;
        }
        const auto fields = csv::split(s);
        try {
            out.push_back(csv::parse_double(fields.front(), source, lineno));
        } catch (const ParseError &) {
            if (out.empty() && lineno == 1) {
                continue;
            }
            throw;
        }
    }
    if (out.empty()) {
        throw ParseError(source, lineno, "no T1 values found");
    }
    return out;
}

inline void write_cdf_csv(std::ostream &os, const T1Percentile &p) {
    os << "t1_us,fraction\n" << std::setprecision(17);
    for (std::size_t i = 0; i < p.sorted.size(); ++i) {
        os << p.sorted[i] << ',' << p.fraction[i] << '\n';
    }
}

// ---------------------------------------------------------------------------
// Spectra

struct SpectrumLevel {
    double eigenvalue = 0.0;
    std::uint64_t multiplicity = 0;
};

inline std::uint64_t binomial(std::size_t n, std::size_t k) {
    if (k > n) {
        return 0;
    }
    k = std::min(k, n - k);
    std::uint64_t r = 1;
    for (std::size_t i = 1; i <= k; ++i) {
        r = r * (n - k + i) / i;
    }
    return r;
}

/// Eigenvalues of |1..1><1..1| after independent per-qubit decay with
/// probability p: p^k (1-p)^(n-k) with multiplicity C(n, k), k = 0..n.
inline std::vector<SpectrumLevel> analytic_decay_spectrum(std::size_t n, double p) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw InvalidArgument("decay probability must lie in [0, 1]");
    }
    std::vector<SpectrumLevel> out;
    for (std::size_t k = 0; k <= n; ++k) {
        const double ev = std::pow(p, static_cast<double>(k)) *
                          std::pow(1.0 - p, static_cast<double>(n - k));
        out.push_back({ev, binomial(n, k)});
    }
    return out;
}

/// Levels expanded by multiplicity, sorted descending.
inline std::vector<double> expand_levels(std::span<const SpectrumLevel> levels) {
    std::vector<double> out;
    for (const auto &l : levels) {
        out.insert(out.end(), l.multiplicity, l.eigenvalue);
    }
    std::sort(out.begin(), out.end(), std::greater<>());
    return out;
}

inline void write_levels_csv(std::ostream &os, std::span<const SpectrumLevel> levels) {
    os << "k,eigenvalue,multiplicity\n" << std::setprecision(17);
    for (std::size_t k = 0; k < levels.size(); ++k) {
        os << k << ',' << levels[k].eigenvalue << ',' << levels[k].multiplicity << '\n';
    }
}

struct SpectralProfile {
    std::vector<double> eigenvalues; // descending
    double max_eigenvalue = 0.0;
    double entropy = 0.0;            // von Neumann, natural log
    double effective_rank = 0.0;     // exp(entropy)
    std::vector<double> bin_edges;   // log-spaced, size bins + 1
    std::vector<std::uint64_t> counts;
    std::uint64_t below_range = 0;   // eigenvalues under kSpectrumFloor
};

inline constexpr double kSpectrumFloor = 1e-14;

inline SpectralProfile spectral_profile(std::span<const double> eigenvalues,
                                        std::size_t bins = 40) {
    if (bins < 1) {
        throw InvalidArgument("histogram needs at least one bin");
    }
    if (eigenvalues.empty()) {
        throw InvalidArgument("empty spectrum");
    }
    SpectralProfile s;
    s.eigenvalues.assign(eigenvalues.begin(), eigenvalues.end());
    std::sort(s.eigenvalues.begin(), s.eigenvalues.end(), std::greater<>());
    s.max_eigenvalue = s.eigenvalues.front();
    double lo = std::numeric_limits<double>::infinity();
    for (const double v : s.eigenvalues) {
        if (v > 0.0) {
            s.entropy -= v * std::log(v);
        }
        if (v >= kSpectrumFloor) {
            lo = std::min(lo, v);
        }
    }
    s.effective_rank = std::exp(s.entropy);
    const double hi = s.max_eigenvalue;
    if (!std::isfinite(lo)) {
        lo = hi;
    }
    // widen a degenerate range so every value lands in one bin
    const double llo = std::log10(lo) - (hi == lo ? 0.5 : 0.0);
    const double lhi = std::log10(hi) + (hi == lo ? 0.5 : 0.0);
    s.bin_edges.resize(bins + 1);
    for (std::size_t k = 0; k <= bins; ++k) {
        s.bin_edges[k] = std::pow(10.0, llo + (lhi - llo) * static_cast<double>(k) /
                                                 static_cast<double>(bins));
    }
    s.counts.assign(bins, 0);
    for (const double v : s.eigenvalues) {
        if (v < kSpectrumFloor) {
            ++s.below_range;
            continue;
        }
        auto b = static_cast<std::ptrdiff_t>(std::floor(
            (std::log10(v) - llo) / (lhi - llo) * static_cast<double>(bins)));
        b = std::clamp<std::ptrdiff_t>(b, 0, static_cast<std::ptrdiff_t>(bins) - 1);
        s.counts[static_cast<std::size_t>(b)]++;
    }
    return s;
}

inline SpectralProfile spectral_profile(const DensityMatrix &rho, std::size_t bins = 40) {
    return spectral_profile(eigen_spectrum(rho), bins);
}

inline void write_histogram_csv(std::ostream &os, const SpectralProfile &s) {
    os << "bin_lo,bin_hi,count\n" << std::setprecision(17);
    for (std::size_t k = 0; k < s.counts.size(); ++k) {
        os << s.bin_edges[k] << ',' << s.bin_edges[k + 1] << ',' << s.counts[k] << '\n';
    }
}

// ---------------------------------------------------------------------------
// Report

inline nlohmann::json finite_or_null(double v) {
    return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

inline nlohmann::json analysis_report(const FlatteningFit &fit,
                                      const std::optional<EffectiveT1Report> &t1) {
    nlohmann::json j;
    j["t_flat"] = finite_or_null(fit.t_flat);
    j["t_flat_err"] = finite_or_null(fit.t_flat_err);
    j["g_inf"] = finite_or_null(fit.g_inf);
    j["amplitude"] = finite_or_null(fit.amplitude);
    j["tau"] = finite_or_null(fit.tau);
    j["residual"] = finite_or_null(fit.residual);
    j["verdict"] = fit.verdict;
    j["fallback"] = fit.fallback;
    if (t1) {
        j["t1_eff"] = finite_or_null(t1->t1_eff);
        j["t1_eff_err"] = finite_or_null(t1->t1_eff_err);
        j["p_threshold"] = t1->p_threshold;
        j["percentile"] = t1->percentile ? nlohmann::json(*t1->percentile)
                                         : nlohmann::json(nullptr);
        j["mean_t1"] = t1->mean_t1 ? nlohmann::json(*t1->mean_t1) : nlohmann::json(nullptr);
    } else {
        j["t1_eff"] = nullptr;
        j["t1_eff_err"] = nullptr;
        j["p_threshold"] = nullptr;
        j["percentile"] = nullptr;
        j["mean_t1"] = nullptr;
    }
    return j;
}

} // namespace qland
