#include <algorithm>
#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "qland/ansatz.hpp"
#include "qland/sampler.hpp"
#include "support.hpp"

using namespace qland;

namespace {

DensityMatrix short_circuit_state(const IsingHamiltonian &h) {
    auto rho = new_plus_state(h.n_qubits);
    for (const auto &g : build_circuit(h, ParameterVector::make({0.4, 1.3, 2.2, 0.6}))) {
        apply_unitary(rho, g);
    }
    return rho;
}

} // namespace

TEST(SampleBitstrings, BasisStateIsDeterministicOutcome) {
    const auto batch = sample_bitstrings(basis_state(2, 1), 100, 5);
    ASSERT_EQ(batch.shots(), 100U);
    for (std::size_t s = 0; s < batch.shots(); ++s) {
        const auto z = batch.bits(s);
        EXPECT_EQ(z[0], 1);
        EXPECT_EQ(z[1], 0);
    }
}

TEST(SampleBitstrings, PlusStateIsFair) {
    const std::size_t r = 100000;
    const auto batch = sample_bitstrings(new_plus_state(1), r, 6);
    const auto zeros = std::count(batch.outcomes.begin(), batch.outcomes.end(), 0U);
    EXPECT_NEAR(static_cast<double>(zeros) / static_cast<double>(r), 0.5, 0.005);
}

TEST(SampleBitstrings, MaximallyMixedWithinBinomialBounds) {
    const std::size_t r = 80000;
    const auto batch = sample_bitstrings(maximally_mixed(3), r, 7);
    std::vector<double> counts(8, 0.0);
    for (const auto o : batch.outcomes) {
        counts.at(o) += 1.0;
    }
    const double tol = 3.0 * std::sqrt(0.125 * 0.875 / static_cast<double>(r));
    for (const double c : counts) {
        EXPECT_NEAR(c / static_cast<double>(r), 0.125, tol);
    }
}

TEST(SampleBitstrings, DeterministicGivenSeed) {
    const auto rho = qland::testing::random_state(3, 8);
    EXPECT_EQ(sample_bitstrings(rho, 500, 9).outcomes, sample_bitstrings(rho, 500, 9).outcomes);
    EXPECT_NE(sample_bitstrings(rho, 500, 9).outcomes, sample_bitstrings(rho, 500, 10).outcomes);
}

TEST(SampleBitstrings, RejectsCorruptState) {
    CMatrix m = CMatrix::Zero(2, 2);
    m(0, 0) = 1.1;
    m(1, 1) = -0.1;
    EXPECT_THROW((void)sample_bitstrings(DensityMatrix(1, m), 10, 1), NumericalError);
    EXPECT_THROW((void)sample_bitstrings(new_plus_state(1), 0, 1), Error);
}

TEST(ShotEnergy, HandEvaluations) {
    const auto h = IsingHamiltonian::make({2.0}, {0.8, -0.4});
    const std::vector<std::uint8_t> z00{0, 0};
    const std::vector<std::uint8_t> z10{1, 0};
    EXPECT_NEAR(shot_energy(z00, h), 0.8, 1e-15);
    EXPECT_NEAR(shot_energy(z10, h), -0.4, 1e-15);
    const std::vector<std::uint8_t> bad{0, 0, 0};
    EXPECT_THROW((void)shot_energy(bad, h), Error);
}

TEST(ShotEnergy, AllZerosFormula) {
    const auto h = sample_hamiltonian(6, 3);
    double sj = 0.0;
    double sh = 0.0;
    for (const double j : h.couplings) {
        sj += j;
    }
    for (const double f : h.fields) {
        sh += f;
    }
    const std::vector<std::uint8_t> z(6, 0);
    EXPECT_NEAR(shot_energy(z, h), (sj - sh) / 2.0, 1e-14);
}

TEST(ShotEnergy, SampledEnergiesWithinSpectrumBounds) {
    const auto h = sample_hamiltonian(5, 4);
    const auto table = h.energy_table();
    const auto [lo, hi] = std::minmax_element(table.begin(), table.end());
    const auto batch = sample_bitstrings(short_circuit_state(h), 2000, 11);
    for (std::size_t s = 0; s < batch.shots(); ++s) {
        const double e = shot_energy(batch.bits(s), h);
        EXPECT_GE(e, *lo);
        EXPECT_LE(e, *hi);
        EXPECT_DOUBLE_EQ(e, h.energy(batch.outcomes[s]));
    }
}

TEST(EstimateCost, BasisStateExact) {
    const auto h = sample_hamiltonian(4, 5);
    const auto est = estimate_cost(basis_state(4, 6), h, 1000, 1);
    EXPECT_DOUBLE_EQ(est.mean, h.energy(6));
    EXPECT_EQ(est.std_error, 0.0);
    EXPECT_EQ(est.shots, 1000U);
}

TEST(EstimateCost, PlusStateNearZero) {
    const auto h = sample_hamiltonian(4, 6);
    const auto est = estimate_cost(new_plus_state(4), h, 4096, 12);
    EXPECT_GT(est.std_error, 0.0);
    EXPECT_LE(std::abs(est.mean), 4.0 * est.std_error);
}

TEST(EstimateCost, LargeBatchAgreesWithExactCost) {
    const auto h = sample_hamiltonian(3, 7);
    const auto rho = short_circuit_state(h);
    const auto est = estimate_cost(rho, h, std::size_t{1} << 20, 13);
    EXPECT_LE(std::abs(est.mean - exact_cost(rho, h)), 4.0 * est.std_error);
}

TEST(EstimateCost, UnbiasedOverRepetitions) {
    const auto h = sample_hamiltonian(3, 8);
    const auto rho = short_circuit_state(h);
    const auto table = h.energy_table();
    const std::size_t reps = 200;
    double sum = 0.0;
    double sum2 = 0.0;
    for (std::size_t k = 0; k < reps; ++k) {
        const double m = estimate_cost(rho, table, 256, derive_seed(1, "rep", {k})).mean;
        sum += m;
        sum2 += m * m;
    }
    const double mean = sum / reps;
    const double sem = std::sqrt((sum2 / reps - mean * mean) / (reps - 1));
    EXPECT_LT(std::abs(mean - exact_cost(rho, h)), 4.0 * sem);
}

TEST(CostSpectrumTest, SingleShot) {
    const auto h = sample_hamiltonian(3, 9);
    const auto s = cost_spectrum(sample_bitstrings(new_plus_state(3), 1, 1), h);
    EXPECT_EQ(s.sorted_energies.size(), 1U);
}

TEST(CostSpectrumTest, MaximallyMixedCentredWithSpreadNearC0) {
    const auto h = sample_hamiltonian(8, 10);
    const auto s = cost_spectrum(sample_bitstrings(maximally_mixed(8), 50000, 2), h);
    EXPECT_TRUE(std::is_sorted(s.sorted_energies.begin(), s.sorted_energies.end()));
    double mean = 0.0;
    for (const double e : s.sorted_energies) {
        mean += e;
    }
    mean /= static_cast<double>(s.sorted_energies.size());
    double var = 0.0;
    for (const double e : s.sorted_energies) {
        var += (e - mean) * (e - mean);
    }
    const double sd = std::sqrt(var / static_cast<double>(s.sorted_energies.size()));
    EXPECT_LT(std::abs(mean), 0.05 * h.c0);
    // uniform bitstrings: variance is sum of squared coefficients / 4
    EXPECT_NEAR(sd, h.c0 / 2.0, 0.05 * h.c0);
    std::uint64_t total = 0;
    for (const auto c : s.counts) {
        total += c;
    }
    EXPECT_EQ(total, 50000U);
    EXPECT_DOUBLE_EQ(s.lo, -3.0 * h.c0);
}

TEST(CostSpectrumTest, BasisStateSingleBin) {
    const auto h = sample_hamiltonian(4, 11);
    const auto s = cost_spectrum(sample_bitstrings(basis_state(4, 5), 300, 3), h);
    EXPECT_EQ(std::count_if(s.counts.begin(), s.counts.end(), [](auto c) { return c > 0; }), 1);
}

TEST(CostSpectrumTest, CsvExports) {
    const auto h = sample_hamiltonian(2, 1);
    const auto s = cost_spectrum(sample_bitstrings(new_plus_state(2), 3, 3), h);
    std::ostringstream os;
    write_cost_spectrum_csv(os, s);
    EXPECT_EQ(os.str().substr(0, 20), "sorted_index,energy\n");

    Landscape ls;
    ls.m = 2;
    ls.points = {{0.1, 0.2}, {0.3, 0.4}, {0.5, 0.6}};
    ls.costs = {0.5, -1.0, 0.2};
    ls.cost_errors = {0.01, 0.02, 0.03};
    std::ostringstream os2;
    write_sorted_costs_csv(os2, ls);
    std::istringstream is(os2.str());
    std::string line;
    std::getline(is, line);
    EXPECT_EQ(line, "param_index,cost_mean,std_error");
    std::getline(is, line);
    EXPECT_EQ(line.substr(0, 2), "1,");
}

TEST(NoiseFloor, PositiveForFiniteShots) {
    const auto h = sample_hamiltonian(4, 12);
    const auto f = shot_noise_floor(h, 4, 1024, 5, 1);
    EXPECT_GT(f.mean, 0.0);
    EXPECT_EQ(f.per_landscape.size(), 5U);
}

TEST(NoiseFloor, VanishesForHugeShotCounts) {
    const auto h = sample_hamiltonian(4, 13);
    const auto small = shot_noise_floor(h, 2, 256, 3, 2);
    const auto huge = shot_noise_floor(h, 2, std::size_t{1} << 22, 3, 2);
    EXPECT_LT(huge.mean, small.mean / 50.0);
}

TEST(NoiseFloor, ShrinksBySqrtTwoWhenShotsDouble) {
    const auto h = sample_hamiltonian(6, 14);
    const auto a = shot_noise_floor(h, 12, 4096, 20, 3);
    const auto b = shot_noise_floor(h, 12, 8192, 20, 3);
    EXPECT_NEAR(a.mean / b.mean, std::sqrt(2.0), 0.2 * std::sqrt(2.0));
}

TEST(NoiseFloor, IndependentOfWorkerCount) {
    const auto h = sample_hamiltonian(4, 15);
    const auto a = shot_noise_floor(h, 4, 512, 3, 4, kDefaultWalks, 1);
    const auto b = shot_noise_floor(h, 4, 512, 3, 4, kDefaultWalks, 3);
    EXPECT_EQ(a.per_landscape, b.per_landscape);
}
