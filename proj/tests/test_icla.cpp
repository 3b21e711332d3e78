#include <cmath>
#include <filesystem>
#include <numbers>
#include <sstream>

#include <gtest/gtest.h>

#include "qland/ansatz.hpp"
#include "qland/icla.hpp"

using namespace qland;

namespace {

Landscape smooth_landscape(std::size_t m, std::size_t M, std::uint64_t seed) {
    const CostFunction fn = [](std::span<const double> th, std::size_t) {
        double c = 0.0;
        for (std::size_t k = 0; k < th.size(); ++k) {
            c += std::sin(th[k] + 0.3 * static_cast<double>(k));
        }
        return CostEstimate{c, 0.0, 0};
    };
    return sample_landscape(fn, m, M, seed);
}

Landscape constant_landscape(std::size_t m, std::size_t M) {
    const CostFunction fn = [](std::span<const double>, std::size_t) {
        return CostEstimate{1.5, 0.0, 0};
    };
    return sample_landscape(fn, m, M, 3);
}

double entropy_of(std::initializer_list<Symbol> s) {
    const std::vector<Symbol> v(s);
    return information_content(v);
}

} // namespace

TEST(LandscapeSize, Examples) {
    EXPECT_EQ(landscape_size(4), 40U);
    EXPECT_EQ(landscape_size(60), 200U);
    EXPECT_EQ(landscape_size(1), 10U);
    EXPECT_EQ(landscape_size(40, 400), 400U);
    EXPECT_THROW((void)landscape_size(0), Error);
}

TEST(SampleLandscape, ConstantCostsAndDeterministicPoints) {
    const auto a = constant_landscape(3, 12);
    for (const double c : a.costs) {
        EXPECT_EQ(c, 1.5);
    }
    const auto b = constant_landscape(3, 12);
    EXPECT_EQ(a.points, b.points);
    EXPECT_NO_THROW(a.validate());
}

TEST(SampleLandscape, NoiselessCostsWithinHamiltonianBound) {
    const auto h = IsingHamiltonian::make({2.0}, {0.8, -0.4});
    const CostFunction fn = [&](std::span<const double> th, std::size_t) {
        auto rho = new_plus_state(2);
        for (const auto &g :
             build_circuit(h, ParameterVector::make({th.begin(), th.end()}))) {
            apply_unitary(rho, g);
        }
        return CostEstimate{exact_cost(rho, h), 0.0, 0};
    };
    const auto ls = sample_landscape(fn, 2, 20, 8);
    for (const double c : ls.costs) {
        EXPECT_LE(std::abs(c), h.energy_bound() + 1e-12);
    }
}

TEST(SampleLandscape, FailureCarriesPointIndex) {
    const CostFunction fn = [](std::span<const double>, std::size_t i) {
        if (i == 4) {
            throw std::runtime_error("boom");
        }
        return CostEstimate{};
    };
    try {
        (void)sample_landscape(fn, 2, 10, 1);
        FAIL() << "expected an evaluation error";
    } catch (const EvaluationError &e) {
        EXPECT_EQ(e.point_index(), 4U);
    }
}

TEST(SampleLandscape, WorkerCountDoesNotChangeResult) {
    const auto h = sample_hamiltonian(3, 5);
    const CostFunction fn = [&](std::span<const double> th, std::size_t) {
        auto rho = new_plus_state(3);
        for (const auto &g :
             build_circuit(h, ParameterVector::make({th.begin(), th.end()}))) {
            apply_unitary(rho, g);
        }
        return CostEstimate{exact_cost(rho, h), 0.0, 0};
    };
    const auto a = sample_landscape(fn, 4, 40, 9, 1);
    const auto b = sample_landscape(fn, 4, 40, 9, 4);
    EXPECT_EQ(a.costs, b.costs);
}

TEST(WalkDeltasTest, ConstantLandscapeHasZeroSlopes) {
    const auto wd = walk_deltas(constant_landscape(2, 20), 1);
    EXPECT_EQ(wd.deltas.size(), 19U);
    for (const double d : wd.deltas) {
        EXPECT_EQ(d, 0.0);
    }
}

TEST(WalkDeltasTest, ThreePointIdentityWalk) {
    Landscape ls;
    ls.m = 2;
    // equilateral triangle with unit sides
    ls.points = {{1.0, 1.0}, {2.0, 1.0}, {1.5, 1.0 + std::sqrt(3.0) / 2.0}};
    ls.costs = {0.0, 1.0, 0.0};
    ls.cost_errors = {0.0, 0.0, 0.0};
    bool found = false;
    for (std::uint64_t seed = 0; seed < 200 && !found; ++seed) {
        const auto wd = walk_deltas(ls, seed);
        if (wd.order == std::vector<std::size_t>{0, 1, 2}) {
            found = true;
            ASSERT_EQ(wd.deltas.size(), 2U);
            EXPECT_NEAR(wd.deltas[0], 1.0, 1e-12);
            EXPECT_NEAR(wd.deltas[1], -1.0, 1e-12);
        }
    }
    EXPECT_TRUE(found);
}

TEST(WalkDeltasTest, WalkIsPermutationOfAllPoints) {
    const auto ls = smooth_landscape(3, 30, 2);
    const auto a = walk_deltas(ls, 10);
    const auto b = walk_deltas(ls, 11);
    auto sorted = a.order;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        EXPECT_EQ(sorted[i], i);
    }
    EXPECT_NE(a.order, b.order);
}

TEST(WalkDeltasTest, MeanAbsoluteSlopeStableAcrossWalks) {
    const auto ls = smooth_landscape(4, 40, 3);
    std::vector<double> means;
    for (std::uint64_t w = 0; w < 50; ++w) {
        const auto wd = walk_deltas(ls, 100 + w);
        double s = 0.0;
        for (const double d : wd.deltas) {
            s += std::abs(d);
        }
        means.push_back(s / static_cast<double>(wd.deltas.size()));
    }
    double grand = 0.0;
    for (const double m : means) {
        grand += m;
    }
    grand /= static_cast<double>(means.size());
    // mean over blocks of 10 walks stays within 10% of the grand mean
    for (std::size_t b = 0; b < 5; ++b) {
        double s = 0.0;
        for (std::size_t k = 0; k < 10; ++k) {
            s += means[10 * b + k];
        }
        EXPECT_NEAR(s / 10.0, grand, 0.1 * grand);
    }
}

TEST(WalkDeltasTest, CoincidentPointsAreSkipped) {
    Landscape ls;
    ls.m = 1;
    ls.points = {{1.0}, {1.0}, {1.0}, {2.0}};
    ls.costs = {0.0, 0.0, 0.0, 1.0};
    ls.cost_errors = {0, 0, 0, 0};
    // exactly one pair involves the distinct point on each side, the rest coincide
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        try {
            const auto wd = walk_deltas(ls, seed);
            EXPECT_EQ(wd.deltas.size() + wd.skipped_pairs, 3U);
            EXPECT_GE(wd.skipped_pairs, 1U);
        } catch (const InvalidArgument &) {
            // a walk with the distinct point at an end has a single usable slope
        }
    }
}

TEST(Symbolize, RuleTable) {
    const std::vector<double> d1{1.0, -1.0, 0.0};
    EXPECT_EQ(symbolize(d1, 0.0),
              (std::vector<Symbol>{Symbol::plus, Symbol::minus, Symbol::neutral}));
    const std::vector<double> d2{0.5, -0.2, 0.3};
    EXPECT_EQ(symbolize(d2, 0.25),
              (std::vector<Symbol>{Symbol::plus, Symbol::neutral, Symbol::plus}));
    for (const auto s : symbolize(d2, 0.5)) {
        EXPECT_EQ(s, Symbol::neutral);
    }
    EXPECT_THROW((void)symbolize(d2, -1.0), Error);
}

TEST(InformationContent, Examples) {
    EXPECT_EQ(entropy_of({Symbol::plus, Symbol::plus, Symbol::plus}), 0.0);
    EXPECT_NEAR(entropy_of({Symbol::plus, Symbol::minus, Symbol::plus, Symbol::minus,
                            Symbol::plus}),
                std::log(2.0) / std::log(6.0), 1e-15);
    EXPECT_NEAR(std::log(2.0) / std::log(6.0), 0.3869, 1e-4);
    // each of the six distinct pairs exactly once
    EXPECT_NEAR(entropy_of({Symbol::plus, Symbol::minus, Symbol::neutral, Symbol::plus,
                            Symbol::neutral, Symbol::minus, Symbol::plus}),
                1.0, 1e-15);
    EXPECT_THROW((void)entropy_of({Symbol::plus}), Error);
}

TEST(MaximizeIc, AllZeroDeltasDegenerate) {
    WalkDeltas wd;
    wd.deltas = {0.0, 0.0, 0.0};
    const auto c = maximize_ic(wd);
    EXPECT_TRUE(c.degenerate);
    EXPECT_EQ(c.epsilon_max, 0.0);
    for (const auto &p : c.curve) {
        EXPECT_EQ(p.entropy, 0.0);
    }
}

TEST(MaximizeIc, AlternatingTwoValueDeltas) {
    const double c = 0.7;
    WalkDeltas wd;
    for (int i = 0; i < 20; ++i) {
        wd.deltas.push_back(i % 2 == 0 ? c : -c);
    }
    const auto r = maximize_ic(wd);
    EXPECT_LT(r.epsilon_max, c);
    EXPECT_EQ(r.curve.back().epsilon, c);
    EXPECT_EQ(r.curve.back().entropy, 0.0);
}

TEST(MaximizeIc, GridShapeAndBounds) {
    const auto ls = smooth_landscape(4, 40, 5);
    const auto wd = walk_deltas(ls, 6);
    const auto r = maximize_ic(wd);
    EXPECT_EQ(r.curve.size(), kEpsilonGridSize + 1);
    EXPECT_EQ(r.curve.front().epsilon, 0.0);
    double max_abs = 0.0;
    for (const double d : wd.deltas) {
        max_abs = std::max(max_abs, std::abs(d));
    }
    double best = 0.0;
    for (const auto &p : r.curve) {
        EXPECT_GE(p.entropy, 0.0);
        EXPECT_LE(p.entropy, 1.0);
        if (p.epsilon >= max_abs) {
            EXPECT_EQ(p.entropy, 0.0);
        }
        best = std::max(best, p.entropy);
    }
    // smallest epsilon attaining the maximum
    for (const auto &p : r.curve) {
        if (p.entropy == best) {
            EXPECT_EQ(p.epsilon, r.epsilon_max);
            break;
        }
    }
}

TEST(RunIcla, ConstantCostsGiveZero) {
    const auto r = run_icla(constant_landscape(4, 40), 10, 1);
    EXPECT_EQ(r.gradient_norm, 0.0);
    EXPECT_EQ(r.bootstrap_std, 0.0);
    EXPECT_TRUE(r.degenerate);
}

TEST(RunIcla, GradientIsEpsilonTimesSqrtM) {
    auto ls = smooth_landscape(100, 200, 7);
    const auto r = run_icla(ls, 1, 2);
    EXPECT_NEAR(r.gradient_norm, r.epsilon_max * 10.0, 1e-12);
    ls.meta.c0 = 4.0;
    const auto rn = run_icla(ls, 1, 2);
    EXPECT_TRUE(rn.normalized);
    EXPECT_NEAR(rn.gradient_norm, r.gradient_norm / 4.0, 1e-12);
}

TEST(RunIcla, ScaleCovariance) {
    const auto ls = smooth_landscape(4, 40, 8);
    auto scaled = ls;
    for (auto &c : scaled.costs) {
        c *= 3.5;
    }
    const auto a = run_icla(ls, 20, 4);
    const auto b = run_icla(scaled, 20, 4);
    EXPECT_NEAR(b.epsilon_max, 3.5 * a.epsilon_max, 1e-12 * b.epsilon_max);
    EXPECT_NEAR(b.gradient_norm, 3.5 * a.gradient_norm, 1e-12 * b.gradient_norm);
}

TEST(RunIcla, ShiftInvariance) {
    // dyadic costs so the shifted differences are exact
    auto ls = smooth_landscape(4, 40, 9);
    for (auto &c : ls.costs) {
        c = std::round(c * 1024.0) / 1024.0;
    }
    auto shifted = ls;
    for (auto &c : shifted.costs) {
        c += 8.0;
    }
    const auto a = run_icla(ls, 20, 4);
    const auto b = run_icla(shifted, 20, 4);
    EXPECT_EQ(a.walk_gradients, b.walk_gradients);
}

TEST(RunIcla, WalkSeedsGiveSpread) {
    const auto r = run_icla(smooth_landscape(4, 40, 10), 30, 5);
    EXPECT_EQ(r.walk_gradients.size(), 30U);
    EXPECT_GT(r.bootstrap_std, 0.0);
    EXPECT_GT(r.gradient_norm, 0.0);
    const auto again = run_icla(smooth_landscape(4, 40, 10), 30, 5);
    EXPECT_EQ(r.walk_gradients, again.walk_gradients);
}

TEST(LandscapeFiles, CsvAndSidecarRoundTrip) {
    auto ls = smooth_landscape(3, 15, 11);
    ls.meta.n_qubits = 2;
    ls.meta.layers = 1;
    ls.meta.noise_tag = "dep";
    ls.meta.shots = 4096;
    ls.meta.c0 = 2.5;
    const auto dir = std::filesystem::temp_directory_path() / "qland_icla_test";
    std::filesystem::create_directories(dir);
    const auto path = dir / "L1.csv";
    save_landscape(path, ls);
    const auto back = load_landscape(path);
    EXPECT_EQ(back.m, ls.m);
    EXPECT_EQ(back.points, ls.points);
    EXPECT_EQ(back.costs, ls.costs);
    EXPECT_EQ(back.meta.noise_tag, "dep");
    ASSERT_TRUE(back.meta.c0.has_value());
    EXPECT_EQ(*back.meta.c0, 2.5);
    EXPECT_EQ(run_icla(back, 5, 1).walk_gradients, run_icla(ls, 5, 1).walk_gradients);
    std::filesystem::remove_all(dir);
}

TEST(LandscapeFiles, MalformedInputsReportLines) {
    std::istringstream missing("theta_0,theta_1,cost\n0.1,0.2,0.3\n");
    EXPECT_THROW((void)read_landscape_csv(missing), ParseError);

    std::istringstream short_row("theta_0,cost,cost_err\n0.1,0.2,0.0\n0.3,0.4\n");
    try {
        (void)read_landscape_csv(short_row, "f.csv");
        FAIL() << "expected a parse error";
    } catch (const ParseError &e) {
        EXPECT_EQ(e.line(), 3U);
    }

    std::istringstream bad_number("theta_0,cost,cost_err\n0.1,abc,0.0\n");
    EXPECT_THROW((void)read_landscape_csv(bad_number), ParseError);
}

TEST(LandscapeFiles, TruncationKeepsLeadingPoints) {
    const auto ls = smooth_landscape(2, 20, 12);
    const auto t = ls.truncated(7);
    EXPECT_EQ(t.size(), 7U);
    EXPECT_EQ(t.points[6], ls.points[6]);
}
