#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>
#include <unsupported/Eigen/MatrixFunctions>

#include "qland/ansatz.hpp"
#include "qland/noise.hpp"
#include "support.hpp"

using namespace qland;
using qland::testing::random_state;

namespace {

constexpr double kPi = std::numbers::pi;

/// Diagonal of the cost operator in the computational basis.
CMatrix cost_operator(const IsingHamiltonian &h) {
    const auto e = h.energy_table();
    CMatrix hc = CMatrix::Zero(static_cast<Eigen::Index>(e.size()),
                               static_cast<Eigen::Index>(e.size()));
    for (std::size_t z = 0; z < e.size(); ++z) {
        hc(static_cast<Eigen::Index>(z), static_cast<Eigen::Index>(z)) = e[z];
    }
    return hc;
}

CMatrix mixer_operator(std::size_t n) {
    CMatrix x = CMatrix::Zero(2, 2);
    x(0, 1) = 1.0;
    x(1, 0) = 1.0;
    const auto dim = static_cast<Eigen::Index>(std::size_t{1} << n);
    CMatrix hm = CMatrix::Zero(dim, dim);
    for (std::size_t q = 0; q < n; ++q) {
        hm += qland::testing::embed(x, q, n);
    }
    return hm;
}

/// Product of exp(-i mix H_M) exp(-i phase H_C) over layers, by dense exponentials.
CMatrix oracle_unitary(const IsingHamiltonian &h, const ParameterVector &theta) {
    const CMatrix hc = cost_operator(h);
    const CMatrix hm = mixer_operator(h.n_qubits);
    const cplx mi{0.0, -1.0};
    CMatrix u = CMatrix::Identity(hc.rows(), hc.cols());
    for (std::size_t l = 0; l < theta.layers; ++l) {
        const CMatrix uc = (mi * theta.phase(l) * hc).exp();
        const CMatrix um = (mi * theta.mixing(l) * hm).exp();
        u = um * uc * u;
    }
    return u;
}

ParameterVector random_theta(std::size_t layers, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> v(2 * layers);
    for (auto &x : v) {
        x = 2.0 * kPi * uniform01(rng);
    }
    return ParameterVector::make(v);
}

DensityMatrix run(const IsingHamiltonian &h, const ParameterVector &theta) {
    auto rho = new_plus_state(h.n_qubits);
    for (const auto &g : build_circuit(h, theta)) {
        apply_unitary(rho, g);
    }
    return rho;
}

} // namespace

TEST(SampleHamiltonian, DrawsFromFixedValueSets) {
    const std::set<double> jset{2.0, -2.0, 1.2, -1.2, 0.8, -0.8, 0.4, -0.4};
    const std::set<double> hset{0.8, 0.4, -0.4, 0.24, -0.24, 0.16, -0.16, -0.08};
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto h = sample_hamiltonian(2 + seed % 7, seed);
        ASSERT_EQ(h.couplings.size() + 1, h.n_qubits);
        ASSERT_EQ(h.fields.size(), h.n_qubits);
        for (const double j : h.couplings) {
            EXPECT_TRUE(jset.contains(j)) << j;
        }
        for (const double f : h.fields) {
            EXPECT_TRUE(hset.contains(f)) << f;
        }
    }
}

TEST(SampleHamiltonian, Deterministic) {
    const auto a = sample_hamiltonian(6, 99);
    const auto b = sample_hamiltonian(6, 99);
    EXPECT_EQ(a.couplings, b.couplings);
    EXPECT_EQ(a.fields, b.fields);
    EXPECT_EQ(a.c0, b.c0);
    EXPECT_THROW((void)sample_hamiltonian(1, 0), Error);
}

TEST(SampleHamiltonian, NormalisationByHand) {
    const auto h = IsingHamiltonian::make({2.0, -0.4}, {0.8, -0.08, 0.4});
    EXPECT_NEAR(h.c0, std::sqrt(4.9664), 1e-12);
    EXPECT_NEAR(h.c0, 2.2286, 1e-4);
}

TEST(SampleHamiltonian, JsonRoundTrip) {
    const auto h = sample_hamiltonian(5, 12);
    const nlohmann::json j = h;
    EXPECT_EQ(j.at("n"), 5);
    const auto back = j.get<IsingHamiltonian>();
    EXPECT_EQ(back.couplings, h.couplings);
    EXPECT_EQ(back.fields, h.fields);
    EXPECT_EQ(back.seed, h.seed);
}

TEST(ParameterVectorTest, Validation) {
    EXPECT_THROW((void)ParameterVector::make({0.1}), Error);
    EXPECT_THROW((void)ParameterVector::make({0.1, 2.0 * kPi}), Error);
    EXPECT_THROW((void)ParameterVector::make({-0.1, 0.0}), Error);
    const auto p = ParameterVector::make({0.1, 0.2, 0.3, 0.4});
    EXPECT_EQ(p.layers, 2U);
    EXPECT_DOUBLE_EQ(p.mixing(1), 0.3);
    EXPECT_DOUBLE_EQ(p.phase(1), 0.4);
}

TEST(BuildCircuit, EmptyForZeroLayers) {
    const auto h = sample_hamiltonian(3, 1);
    EXPECT_TRUE(build_circuit(h, ParameterVector::make({})).empty());
}

TEST(BuildCircuit, ZeroAnglesGiveIdentities) {
    const auto h = sample_hamiltonian(4, 2);
    const auto gates = build_circuit(h, ParameterVector::make({0, 0, 0, 0}));
    EXPECT_EQ(gates.size(), 2 * gates_per_layer(4));
    for (const auto &g : gates) {
        const auto d = g.matrix.rows();
        EXPECT_LT((g.matrix - CMatrix::Identity(d, d)).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_LT(g.unitarity_deviation(), 1e-12);
    }
}

TEST(BuildCircuit, TwoQubitExampleMatchesMatrixExponential) {
    const auto h = IsingHamiltonian::make({2.0}, {0.8, -0.4});
    const auto theta = ParameterVector::make({kPi / 3, kPi / 5});
    const auto rho = run(h, theta);
    const CMatrix u = oracle_unitary(h, theta);
    const CMatrix expected = u * new_plus_state(2).matrix() * u.adjoint();
    EXPECT_LT((rho.matrix() - expected).cwiseAbs().maxCoeff(), 1e-10);
    const double oracle_cost = (cost_operator(h) * expected).trace().real();
    EXPECT_NEAR(exact_cost(rho, h), oracle_cost, 1e-10);
}

TEST(BuildCircuit, GateProductMatchesDenseExponentials) {
    for (std::size_t n = 2; n <= 4; ++n) {
        for (std::size_t layers = 1; layers <= 3; ++layers) {
            const auto h = sample_hamiltonian(n, 30 + n);
            const auto theta = random_theta(layers, 7 * n + layers);
            const CMatrix u = oracle_unitary(h, theta);
            const CMatrix expected = u * new_plus_state(n).matrix() * u.adjoint();
            const auto rho = run(h, theta);
            EXPECT_LT((rho.matrix() - expected).cwiseAbs().maxCoeff(), 1e-9)
                << "n=" << n << " L=" << layers;
        }
    }
}

TEST(BuildCircuit, CostLayerGatesCommute) {
    const std::size_t n = 4;
    const auto h = sample_hamiltonian(n, 8);
    const auto theta = random_theta(2, 9);
    auto gates = build_circuit(h, theta);
    const auto per = gates_per_layer(n);
    const auto rho_a = run(h, theta);
    for (std::size_t l = 0; l < 2; ++l) {
        // cost gates of layer l occupy the first 2n - 1 slots
        std::reverse(gates.begin() + static_cast<std::ptrdiff_t>(l * per),
                     gates.begin() + static_cast<std::ptrdiff_t>(l * per + 2 * n - 1));
    }
    auto rho_b = new_plus_state(n);
    for (const auto &g : gates) {
        apply_unitary(rho_b, g);
    }
    EXPECT_LT((rho_a.matrix() - rho_b.matrix()).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(ExactCost, PlusStateIsZero) {
    const auto h = sample_hamiltonian(5, 3);
    EXPECT_NEAR(exact_cost(new_plus_state(5), h), 0.0, 1e-12);
}

TEST(ExactCost, GroundBasisStateByHand) {
    const auto h = IsingHamiltonian::make({2.0}, {0.8, -0.4});
    EXPECT_NEAR(exact_cost(basis_state(2, 0), h), 0.8, 1e-12);
}

TEST(ExactCost, MaximallyMixedIsZero) {
    const auto h = sample_hamiltonian(4, 4);
    EXPECT_NEAR(exact_cost(maximally_mixed(4), h), 0.0, 1e-12);
}

TEST(ExactCost, BoundedByCoefficientSum) {
    const auto h = sample_hamiltonian(4, 5);
    for (std::uint64_t s = 0; s < 30; ++s) {
        const double c = exact_cost(random_state(4, s), h);
        EXPECT_LE(std::abs(c), h.energy_bound() + 1e-12);
    }
    for (std::uint64_t z = 0; z < 16; ++z) {
        EXPECT_LE(std::abs(h.energy(z)), h.energy_bound() + 1e-12);
    }
}

TEST(ExactCost, EnergyTableOverloadAgrees) {
    const auto h = sample_hamiltonian(3, 6);
    const auto rho = random_state(3, 77);
    const auto table = h.energy_table();
    EXPECT_NEAR(exact_cost(rho, h), exact_cost(rho, std::span<const double>(table)), 1e-14);
    EXPECT_THROW((void)exact_cost(random_state(2, 1), h), Error);
}

TEST(Timing, DepthExamples) {
    EXPECT_NEAR(circuit_depth(20, 1, timing_model(Platform::falcon_ladder)), 216.4, 1e-9);
    EXPECT_NEAR(circuit_depth(45, 10, timing_model(Platform::falcon_short)), 234.0, 1e-9);
    EXPECT_NEAR(circuit_depth(8, 0, timing_model(Platform::heron)), 59.4, 1e-9);
}

TEST(Timing, RuntimeExamples) {
    EXPECT_NEAR(circuit_runtime(102, 120, timing_model("falcon_ladder")), 624.6, 1e-9);
    EXPECT_NEAR(circuit_runtime(8, 10, timing_model("falcon_ladder")), 92.4, 1e-9);
    EXPECT_NEAR(circuit_runtime(0, 0, timing_model("heron")), 130.0, 1e-12);
    EXPECT_NEAR(circuit_runtime(45, 10, timing_model("falcon_short")), 89.0, 1e-9);
    EXPECT_THROW((void)timing_model("eagle"), Error);
}

TEST(Timing, RuntimePerDepthNear146ns) {
    // falcon ladder grid: N in {20, 45, 70, 102}, L in {1, ..., 120}
    const auto t = timing_model(Platform::falcon_ladder);
    const std::vector<std::size_t> ns{20, 45, 70, 102};
    std::vector<double> depth;
    std::vector<double> runtime;
    for (const auto n : ns) {
        for (std::size_t l = 1; l <= 120; l += 7) {
            depth.push_back(circuit_depth(n, l, t));
            runtime.push_back(circuit_runtime(n, l, t));
        }
    }
    // least-squares runtime = slope * depth + offset
    const double k = static_cast<double>(depth.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < depth.size(); ++i) {
        sx += depth[i];
        sy += runtime[i];
        sxx += depth[i] * depth[i];
        sxy += depth[i] * runtime[i];
    }
    const double slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
    const double offset = (sy - slope * sx) / k;
    EXPECT_NEAR(slope, 0.146, 0.05 * 0.146);
    // measured wall time adds a 250 us reset between shots
    constexpr double reset = 250.0;
    for (std::size_t i = 0; i < depth.size(); ++i) {
        const double wall = runtime[i] + reset;
        EXPECT_NEAR(0.146 * depth[i] + 305.0, wall, 0.05 * wall);
        EXPECT_NEAR(slope * depth[i] + offset + reset, wall, 0.05 * wall);
    }
}

TEST(Timing, JsonBlockOverridesDefaults) {
    const auto t = nlohmann::json::parse(R"({"platform": "heron", "runtime": [0.5, 1.0, 100]})")
                       .get<TimingModel>();
    EXPECT_EQ(t.platform, Platform::heron);
    EXPECT_DOUBLE_EQ(t.depth_b, 18.5);
    EXPECT_DOUBLE_EQ(t.runtime_per_layer, 1.0);
    EXPECT_THROW((void)nlohmann::json::parse(R"({"depth": [1, 2]})").get<TimingModel>(), Error);
    const nlohmann::json back = t;
    EXPECT_EQ(back.get<TimingModel>().runtime_offset, 100.0);
}

TEST(GateCountsTest, Examples) {
    auto g = gate_counts(20, 1);
    EXPECT_EQ(g.two_qubit, 38U);
    EXPECT_DOUBLE_EQ(g.one_qubit_estimate, 270.0);
    g = gate_counts(2, 0);
    EXPECT_EQ(g.two_qubit, 0U);
    EXPECT_DOUBLE_EQ(g.one_qubit_estimate, 0.0);
    g = gate_counts(102, 120);
    EXPECT_EQ(g.two_qubit, 24240U);
    EXPECT_DOUBLE_EQ(g.one_qubit_estimate, 165240.0);
}
