#pragma once

// Dense density-matrix state engine.
//
// Basis states are indexed by the integer whose bit q is the value of qubit q
// (qubit 0 is the least significant bit). Two-qubit gate matrices use the
// local index b(targets[0]) + 2 * b(targets[1]).

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "error.hpp"

#if !defined(NDEBUG) && !defined(QLAND_CHECK_INVARIANTS)
#define QLAND_CHECK_INVARIANTS 1
#endif

namespace qland {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;

inline constexpr double kHermitianTol = 1e-10;
inline constexpr double kTraceTol = 1e-9;
inline constexpr double kPsdTol = 1e-9;
inline constexpr double kUnitaryTol = 1e-10;

/// Upper bound on simulated register size. Dense matrices grow as 4^n.
struct SimulationLimits {
    std::size_t max_qubits = 12;
};

class DensityMatrix {
  public:
    DensityMatrix(std::size_t n_qubits, CMatrix data)
        : n_qubits_(n_qubits), data_(std::move(data)) {
        const auto dim = std::size_t{1} << n_qubits_;
        if (static_cast<std::size_t>(data_.rows()) != dim ||
            static_cast<std::size_t>(data_.cols()) != dim) {
            throw InvalidArgument("density matrix must be " +
                                  std::to_string(dim) + "x" +
                                  std::to_string(dim) + " for " +
                                  std::to_string(n_qubits_) + " qubits");
        }
    }

    [[nodiscard]] std::size_t n_qubits() const noexcept { return n_qubits_; }
    [[nodiscard]] std::size_t dim() const noexcept {
        return std::size_t{1} << n_qubits_;
    }

    [[nodiscard]] const CMatrix &matrix() const noexcept { return data_; }
    [[nodiscard]] CMatrix &matrix() noexcept { return data_; }

    [[nodiscard]] cplx operator()(std::size_t i, std::size_t j) const {
        return data_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
    cplx &operator()(std::size_t i, std::size_t j) {
        return data_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }

    [[nodiscard]] cplx trace() const { return data_.trace(); }

    /// Probability of the computational basis state `index` (real part of the
    /// diagonal entry).
    [[nodiscard]] double population(std::size_t index) const {
        return (*this)(index, index).real();
    }

  private:
    std::size_t n_qubits_;
    CMatrix data_;
};

/// Deviation measures of a matrix from the density-matrix invariants.
struct PhysicalityReport {
    double hermitian_deviation = 0.0; // max |rho_ij - conj(rho_ji)|
    double trace_deviation = 0.0;     // |Tr(rho) - 1|
    double min_eigenvalue = 0.0;

    [[nodiscard]] bool ok() const {
        return hermitian_deviation <= kHermitianTol &&
               trace_deviation <= kTraceTol && min_eigenvalue >= -kPsdTol;
    }
};

inline double hermitian_deviation(const DensityMatrix &rho) {
    return (rho.matrix() - rho.matrix().adjoint()).cwiseAbs().maxCoeff();
}

inline PhysicalityReport check_physical(const DensityMatrix &rho) {
    PhysicalityReport rep;
    rep.hermitian_deviation = hermitian_deviation(rho);
    rep.trace_deviation = std::abs(rho.trace() - cplx{1.0, 0.0});
    const CMatrix herm = 0.5 * (rho.matrix() + rho.matrix().adjoint());
    Eigen::SelfAdjointEigenSolver<CMatrix> solver(herm, Eigen::EigenvaluesOnly);
    rep.min_eigenvalue = solver.eigenvalues().minCoeff();
    return rep;
}

namespace detail {

inline void check_cheap_invariants([[maybe_unused]] const DensityMatrix &rho,
                                   [[maybe_unused]] const char *where) {
#if QLAND_CHECK_INVARIANTS
    const double tr = std::abs(rho.trace() - cplx{1.0, 0.0});
    const double herm = hermitian_deviation(rho);
    if (tr > kTraceTol || herm > kHermitianTol) {
        std::ostringstream os;
        os << where << ": invariant violated (trace dev " << tr
           << ", hermitian dev " << herm << ")";
        throw NumericalError(os.str());
    }
#endif
}

inline void check_register(std::size_t n_qubits, const SimulationLimits &limits) {
    if (n_qubits < 1) {
        throw InvalidArgument("register needs at least one qubit");
    }
    if (n_qubits > limits.max_qubits) {
        throw DimensionError("2^" + std::to_string(n_qubits) +
                             " exceeds the configured budget of " +
                             std::to_string(limits.max_qubits) + " qubits");
    }
}

/// k-th index (in increasing order) whose bit `q` is zero.
constexpr std::size_t insert_zero_bit(std::size_t k, std::size_t q) noexcept {
    const std::size_t low = k & ((std::size_t{1} << q) - 1);
    return ((k >> q) << (q + 1)) | low;
}

} // namespace detail

inline DensityMatrix new_plus_state(std::size_t n_qubits,
                                    const SimulationLimits &limits = {}) {
    detail::check_register(n_qubits, limits);
    const auto dim = static_cast<Eigen::Index>(std::size_t{1} << n_qubits);
    return {n_qubits,
            CMatrix::Constant(dim, dim, cplx{1.0 / static_cast<double>(dim), 0.0})};
}

inline DensityMatrix basis_state(std::size_t n_qubits, std::uint64_t index,
                                 const SimulationLimits &limits = {}) {
    detail::check_register(n_qubits, limits);
    const auto dim = static_cast<Eigen::Index>(std::size_t{1} << n_qubits);
    if (index >= static_cast<std::uint64_t>(dim)) {
        throw InvalidArgument("basis index out of range");
    }
    CMatrix m = CMatrix::Zero(dim, dim);
    m(static_cast<Eigen::Index>(index), static_cast<Eigen::Index>(index)) = 1.0;
    return {n_qubits, std::move(m)};
}

inline DensityMatrix maximally_mixed(std::size_t n_qubits,
                                     const SimulationLimits &limits = {}) {
    detail::check_register(n_qubits, limits);
    const auto dim = static_cast<Eigen::Index>(std::size_t{1} << n_qubits);
    CMatrix m = CMatrix::Identity(dim, dim) / static_cast<double>(dim);
    return {n_qubits, std::move(m)};
}

/// A 2x2 or 4x4 unitary acting on one or two qubits.
struct QubitUnitary {
    CMatrix matrix;
    std::vector<std::size_t> targets;

    [[nodiscard]] std::size_t arity() const noexcept { return targets.size(); }

    [[nodiscard]] double unitarity_deviation() const {
        const auto d = matrix.rows();
        return (matrix * matrix.adjoint() - CMatrix::Identity(d, d))
            .cwiseAbs()
            .maxCoeff();
    }

    [[nodiscard]] bool is_diagonal() const {
        for (Eigen::Index i = 0; i < matrix.rows(); ++i) {
            for (Eigen::Index j = 0; j < matrix.cols(); ++j) {
                if (i != j && matrix(i, j) != cplx{0.0, 0.0}) {
                    return false;
                }
            }
        }
        return true;
    }
};

namespace detail {

inline void validate_gate(const QubitUnitary &u, std::size_t n_qubits) {
    const auto k = u.targets.size();
    if (k != 1 && k != 2) {
        throw InvalidArgument("gate arity must be 1 or 2");
    }
    const auto d = static_cast<Eigen::Index>(std::size_t{1} << k);
    if (u.matrix.rows() != d || u.matrix.cols() != d) {
        throw InvalidArgument("gate matrix shape does not match its arity");
    }
    for (const auto t : u.targets) {
        if (t >= n_qubits) {
            throw InvalidArgument("gate target " + std::to_string(t) +
                                  " out of range for " +
                                  std::to_string(n_qubits) + " qubits");
        }
    }
    if (k == 2 && u.targets[0] == u.targets[1]) {
        throw InvalidArgument("two-qubit gate targets must be distinct");
    }
    const double dev = u.unitarity_deviation();
    if (dev > kUnitaryTol) {
        std::ostringstream os;
        os << "gate matrix is not unitary (max |UU^dag - I| = " << dev << ")";
        throw InvalidArgument(os.str());
    }
}

/// Complex product without the IEEE NaN/inf recovery path of operator*.
inline cplx mul(cplx a, cplx b) noexcept {
    return {a.real() * b.real() - a.imag() * b.imag(),
            a.real() * b.imag() + a.imag() * b.real()};
}

/// i * k * z for real k.
inline cplx mul_i(double k, cplx z) noexcept {
    return {-k * z.imag(), k * z.real()};
}

/// rho_ij *= phase_i * conj(phase_j) for a full-register diagonal unitary.
inline void apply_phases(CMatrix &m, std::span<const cplx> phase) {
    const auto dim = m.rows();
    cplx *data = m.data();
    for (Eigen::Index j = 0; j < dim; ++j) {
        const cplx cj = std::conj(phase[static_cast<std::size_t>(j)]);
        cplx *col = data + j * dim;
        for (Eigen::Index i = 0; i < dim; ++i) {
            col[i] = mul(col[i], mul(phase[static_cast<std::size_t>(i)], cj));
        }
    }
}

inline void apply_diagonal_gate(CMatrix &m, const QubitUnitary &u) {
    const auto dim = static_cast<std::size_t>(m.rows());
    std::vector<cplx> phase(dim);
    const std::size_t q0 = u.targets[0];
    if (u.arity() == 1) {
        const cplx d0 = u.matrix(0, 0);
        const cplx d1 = u.matrix(1, 1);
        for (std::size_t i = 0; i < dim; ++i) {
            phase[i] = ((i >> q0) & 1U) != 0U ? d1 : d0;
        }
    } else {
        const std::size_t q1 = u.targets[1];
        for (std::size_t i = 0; i < dim; ++i) {
            const auto loc = static_cast<Eigen::Index>(((i >> q0) & 1U) |
                                                       (((i >> q1) & 1U) << 1U));
            phase[i] = u.matrix(loc, loc);
        }
    }
    apply_phases(m, phase);
}

/// U = [[c, -i s], [-i s, c]] with real c, s: the X-rotation family.
inline bool is_x_rotation(const CMatrix &u) {
    return u(0, 0).imag() == 0.0 && u(0, 0) == u(1, 1) &&
           u(0, 1).real() == 0.0 && u(0, 1) == u(1, 0);
}

inline void apply_x_rotation(CMatrix &m, std::size_t q, double c, double s) {
    const auto dim = static_cast<std::size_t>(m.rows());
    const std::size_t mask = std::size_t{1} << q;
    const std::size_t half = dim / 2;
    const double cc = c * c;
    const double ss = s * s;
    const double cs = c * s;
    cplx *data = m.data();
    for (std::size_t kj = 0; kj < half; ++kj) {
        const std::size_t j0 = insert_zero_bit(kj, q);
        const std::size_t j1 = j0 | mask;
        cplx *col0 = data + j0 * dim;
        cplx *col1 = data + j1 * dim;
        for (std::size_t ki = 0; ki < half; ++ki) {
            const std::size_t i0 = insert_zero_bit(ki, q);
            const std::size_t i1 = i0 | mask;
            const cplx a = col0[i0];
            const cplx b = col1[i0];
            const cplx e = col0[i1];
            const cplx d = col1[i1];
            col0[i0] = cc * a + ss * d + mul_i(cs, b - e);
            col1[i0] = cc * b + ss * e + mul_i(cs, a - d);
            col0[i1] = cc * e + ss * b + mul_i(cs, d - a);
            col1[i1] = cc * d + ss * a + mul_i(cs, e - b);
        }
    }
}

inline void apply_one_qubit(CMatrix &m, const CMatrix &u, std::size_t q) {
    if (is_x_rotation(u)) {
        apply_x_rotation(m, q, u(0, 0).real(), -u(0, 1).imag());
        return;
    }
    const auto dim = static_cast<std::size_t>(m.rows());
    const std::size_t mask = std::size_t{1} << q;
    const std::size_t half = dim / 2;
    const cplx u00 = u(0, 0), u01 = u(0, 1), u10 = u(1, 0), u11 = u(1, 1);
    const cplx v00 = std::conj(u00), v01 = std::conj(u01);
    const cplx v10 = std::conj(u10), v11 = std::conj(u11);
    cplx *data = m.data();
    for (std::size_t kj = 0; kj < half; ++kj) {
        const std::size_t j0 = insert_zero_bit(kj, q);
        const std::size_t j1 = j0 | mask;
        cplx *col0 = data + j0 * dim;
        cplx *col1 = data + j1 * dim;
        for (std::size_t ki = 0; ki < half; ++ki) {
            const std::size_t i0 = insert_zero_bit(ki, q);
            const std::size_t i1 = i0 | mask;
            // B' = U B
            const cplx a = mul(u00, col0[i0]) + mul(u01, col0[i1]);
            const cplx e = mul(u10, col0[i0]) + mul(u11, col0[i1]);
            const cplx b = mul(u00, col1[i0]) + mul(u01, col1[i1]);
            const cplx d = mul(u10, col1[i0]) + mul(u11, col1[i1]);
            // B'' = B' U^dag, (B' U^dag)_{r,c} = sum_k B'_{r,k} conj(U_{c,k})
            col0[i0] = mul(a, v00) + mul(b, v01);
            col1[i0] = mul(a, v10) + mul(b, v11);
            col0[i1] = mul(e, v00) + mul(d, v01);
            col1[i1] = mul(e, v10) + mul(d, v11);
        }
    }
}

inline void apply_two_qubit(CMatrix &m, const CMatrix &u, std::size_t qa,
                            std::size_t qb) {
    const auto dim = static_cast<std::size_t>(m.rows());
    const std::size_t lo = std::min(qa, qb);
    const std::size_t hi = std::max(qa, qb);
    const std::size_t ma = std::size_t{1} << qa;
    const std::size_t mb = std::size_t{1} << qb;
    const std::size_t quarter = dim / 4;
    auto base_of = [&](std::size_t k) {
        return insert_zero_bit(insert_zero_bit(k, lo), hi);
    };
    Eigen::Matrix4cd um = u;
    Eigen::Matrix4cd block;
    std::array<std::size_t, 4> ri{};
    std::array<std::size_t, 4> ci{};
    for (std::size_t kj = 0; kj < quarter; ++kj) {
        const std::size_t j = base_of(kj);
        ci = {j, j | ma, j | mb, j | ma | mb};
        for (std::size_t ki = 0; ki < quarter; ++ki) {
            const std::size_t i = base_of(ki);
            ri = {i, i | ma, i | mb, i | ma | mb};
            for (int r = 0; r < 4; ++r) {
                for (int c = 0; c < 4; ++c) {
                    block(r, c) = m(static_cast<Eigen::Index>(ri[r]),
                                    static_cast<Eigen::Index>(ci[c]));
                }
            }
            const Eigen::Matrix4cd out = um * block * um.adjoint();
            for (int r = 0; r < 4; ++r) {
                for (int c = 0; c < 4; ++c) {
                    m(static_cast<Eigen::Index>(ri[r]),
                      static_cast<Eigen::Index>(ci[c])) = out(r, c);
                }
            }
        }
    }
}

} // namespace detail

/// rho <- U rho U^dag with U embedded on u.targets.
inline void apply_unitary(DensityMatrix &rho, const QubitUnitary &u) {
    detail::validate_gate(u, rho.n_qubits());
    if (u.is_diagonal()) {
        detail::apply_diagonal_gate(rho.matrix(), u);
    } else if (u.arity() == 1) {
        detail::apply_one_qubit(rho.matrix(), u.matrix, u.targets[0]);
    } else {
        detail::apply_two_qubit(rho.matrix(), u.matrix, u.targets[0],
                                u.targets[1]);
    }
    detail::check_cheap_invariants(rho, "apply_unitary");
}

/// rho <- D rho D^dag for a register-wide diagonal unitary D = diag(phase).
inline void apply_diagonal(DensityMatrix &rho, std::span<const cplx> phase) {
    if (phase.size() != rho.dim()) {
        throw InvalidArgument("diagonal length does not match the register");
    }
    for (const auto &p : phase) {
        if (std::abs(std::abs(p) - 1.0) > kUnitaryTol) {
            throw InvalidArgument("diagonal entries must have unit modulus");
        }
    }
    detail::apply_phases(rho.matrix(), phase);
    detail::check_cheap_invariants(rho, "apply_diagonal");
}

/// Eigenvalues in descending order, clamped to [0, 1].
///
/// Throws NumericalError when the solver fails or an eigenvalue lies below
/// -1e-9 (the matrix is not positive semidefinite).
inline std::vector<double> eigen_spectrum(const DensityMatrix &rho) {
    const CMatrix herm = 0.5 * (rho.matrix() + rho.matrix().adjoint());
    Eigen::SelfAdjointEigenSolver<CMatrix> solver(herm, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) {
        std::ostringstream os;
        os << "eigensolver did not converge (dim " << rho.dim()
           << ", Frobenius norm " << rho.matrix().norm()
           << ", hermitian dev " << hermitian_deviation(rho) << ")";
        throw NumericalError(os.str());
    }
    const Eigen::VectorXd &ev = solver.eigenvalues();
    std::vector<double> out(ev.data(), ev.data() + ev.size());
    std::sort(out.begin(), out.end(), std::greater<>());
    if (out.back() < -kPsdTol) {
        std::ostringstream os;
        os << "state is not positive semidefinite (min eigenvalue "
           << out.back() << ")";
        throw NumericalError(os.str());
    }
    for (auto &v : out) {
        v = std::clamp(v, 0.0, 1.0);
    }
    return out;
}

/// Tr(rho^2).
inline double purity(const DensityMatrix &rho) {
    // Tr(rho rho) = sum_ij rho_ij rho_ji = sum_ij |rho_ij|^2 for Hermitian rho.
    return rho.matrix().squaredNorm();
}

/// CSV with header `rank,eigenvalue`; rank 1 is the largest eigenvalue.
inline void write_spectrum_csv(std::ostream &os, std::span<const double> spectrum) {
    os << "rank,eigenvalue\n";
    os << std::setprecision(17);
    for (std::size_t i = 0; i < spectrum.size(); ++i) {
        os << (i + 1) << ',' << spectrum[i] << '\n';
    }
}

} // namespace qland
