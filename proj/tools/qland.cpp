// qland: gradient-landscape experiments on simulated noisy QAOA circuits.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "qland/experiment.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

void emit(const nlohmann::json &j, const std::string &out) {
    if (out.empty()) {
        std::cout << j.dump(2) << '\n';
        return;
    }
    qland::write_json_file(out, j);
}

std::vector<std::vector<double>> read_theta_file(const std::string &path) {
    std::ifstream is(path);
    if (!is) {
        throw qland::ParseError("cannot open parameter file " + path);
    }
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto s = qland::csv::trim(line);
        if (s.empty() || s.front() == '#') {
            continue;
        }
        const auto fields = qland::csv::split(s);
        std::vector<double> row;
        try {
            for (const auto f : fields) {
                row.push_back(qland::csv::parse_double(f, path, lineno));
            }
        } catch (const qland::ParseError &) {
            if (rows.empty()) {
                continue; // header
            }
            throw;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Gradient-landscape analysis of noisy QAOA circuits"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    auto add_config = [&](CLI::App *sub) {
        sub->add_option("config", config_path, "JSON configuration file")
            ->required()
            ->check(CLI::ExistingFile);
        sub->add_option("--set", overrides, "Override a configuration key (dotted.key=value)");
    };

    auto *sweep = app.add_subcommand("sweep", "Gradient-vs-runtime sweep over the layer list");
    add_config(sweep);

    auto *icla = app.add_subcommand("icla", "Information content analysis of a landscape file");
    std::string landscape_path;
    std::size_t n_walks = qland::kDefaultWalks;
    std::uint64_t icla_seed = 0;
    std::optional<std::size_t> truncate;
    std::string icla_out;
    icla->add_option("landscape", landscape_path, "Landscape CSV")->required();
    icla->add_option("--walks", n_walks, "Number of random walks");
    icla->add_option("--seed", icla_seed, "Walk seed")->required();
    icla->add_option("--truncate", truncate, "Use only the first M points");
    icla->add_option("-o,--out", icla_out, "Output JSON (default stdout)");

    auto *analyze = app.add_subcommand("analyze", "Flattening fit and effective T1 of a curve");
    std::string curve_path;
    double p_threshold = 0.75;
    std::string t1_path;
    std::string analyze_out;
    analyze->add_option("curve", curve_path, "Gradient curve CSV")->required();
    analyze->add_option("--p-threshold", p_threshold, "Non-unital dominance threshold");
    analyze->add_option("--t1-file", t1_path, "T1 values, one per line");
    analyze->add_option("-o,--out", analyze_out, "Output JSON (default stdout)");

    auto *spectrum = app.add_subcommand("spectrum", "Eigenvalue spectra of final states");
    add_config(spectrum);
    std::string theta_path;
    std::size_t n_random = 1;
    std::size_t bins = 40;
    std::optional<double> reference_p;
    spectrum->add_option("--theta", theta_path, "CSV of parameter vectors (one per row)");
    spectrum->add_option("--random", n_random, "Random parameter vectors per L without --theta");
    spectrum->add_option("--bins", bins, "Histogram bins");
    spectrum->add_option("--reference-p", reference_p,
                         "Decay probability of the analytic reference spectrum");

    auto *floor = app.add_subcommand("noise-floor", "Shot-noise floor of the gradient estimate");
    add_config(floor);
    std::string floor_curve;
    std::optional<double> floor_gradient;
    floor->add_option("--curve", floor_curve, "Curve CSV with gradients to compare");
    floor->add_option("--gradient", floor_gradient, "Gradient value to compare");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sweep->parsed()) {
            const auto cfg = qland::load_config(config_path, overrides);
            const auto r = qland::run_sweep(cfg);
            for (const auto &p : r.curve.points) {
                std::cout << "L=" << p.layers << " t_cir=" << p.t_cir
                          << " grad=" << p.gradient << " +- " << p.err << '\n';
            }
        } else if (icla->parsed()) {
            const auto r = qland::icla_from_file(landscape_path, n_walks, icla_seed, truncate);
            emit(nlohmann::json(r), icla_out);
        } else if (analyze->parsed()) {
            const auto curve = qland::load_curve(curve_path);
            std::optional<std::vector<double>> t1;
            if (!t1_path.empty()) {
                std::ifstream is(t1_path);
                if (!is) {
                    throw qland::ParseError("cannot open T1 file " + t1_path);
                }
                t1 = qland::read_t1_list(is, t1_path);
            }
            emit(qland::analyze_curve(curve, p_threshold, t1), analyze_out);
        } else if (spectrum->parsed()) {
            const auto cfg = qland::load_config(config_path, overrides);
            std::vector<std::vector<double>> thetas;
            if (!theta_path.empty()) {
                thetas = read_theta_file(theta_path);
            }
            const auto runs = qland::run_spectrum(cfg, thetas, n_random, bins, reference_p);
            for (const auto &r : runs) {
                std::cout << "L=" << r.layers << " #" << r.index
                          << " max_eigenvalue=" << r.profile.max_eigenvalue
                          << " effective_rank=" << r.profile.effective_rank << '\n';
            }
        } else if (floor->parsed()) {
            const auto cfg = qland::load_config(config_path, overrides);
            std::optional<qland::GradientCurve> curve;
            if (!floor_curve.empty()) {
                curve = qland::load_curve(floor_curve);
            }
            const auto rows = qland::run_noise_floor(cfg, curve, floor_gradient);
            for (const auto &r : rows) {
                std::cout << "L=" << r.layers << " floor=" << r.floor.mean << " +- "
                          << r.floor.stddev;
                if (r.gradient) {
                    std::cout << " gradient=" << *r.gradient;
                }
                std::cout << '\n';
            }
        }
    } catch (const qland::ConfigError &e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const qland::ParseError &e) {
        std::cerr << "input error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const qland::NumericalError &e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const qland::EvaluationError &e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return EXIT_FAILURE;
    }
    return EXIT_SUCCESS;
}
