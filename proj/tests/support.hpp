#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "qland/densmat.hpp"
#include "qland/seed.hpp"

namespace qland::testing {

/// Random full-rank density matrix G G^dag / Tr from a complex Ginibre G.
inline DensityMatrix random_state(std::size_t n, std::uint64_t seed) {
    const auto dim = static_cast<Eigen::Index>(std::size_t{1} << n);
    Rng rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    CMatrix G(dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
        for (Eigen::Index j = 0; j < dim; ++j) {
            G(i, j) = cplx{g(rng), g(rng)};
        }
    }
    CMatrix rho = G * G.adjoint();
    rho /= rho.trace();
    return DensityMatrix(n, rho);
}

/// Random pure state |psi><psi|.
inline DensityMatrix random_pure_state(std::size_t n, std::uint64_t seed) {
    const auto dim = static_cast<Eigen::Index>(std::size_t{1} << n);
    Rng rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    Eigen::VectorXcd psi(dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
        psi(i) = cplx{g(rng), g(rng)};
    }
    psi.normalize();
    return DensityMatrix(n, psi * psi.adjoint());
}

/// Full 2^n operator of a single-qubit matrix on qubit q.
inline CMatrix embed(const CMatrix &u, std::size_t q, std::size_t n) {
    CMatrix out = CMatrix::Identity(1, 1);
    for (std::size_t k = n; k-- > 0;) {
        const CMatrix f = k == q ? u : CMatrix::Identity(2, 2);
        CMatrix next(out.rows() * 2, out.cols() * 2);
        // kron(out, f): qubit k becomes the next-lower bit
        for (Eigen::Index a = 0; a < out.rows(); ++a) {
            for (Eigen::Index b = 0; b < out.cols(); ++b) {
                next.block(2 * a, 2 * b, 2, 2) = out(a, b) * f;
            }
        }
        out = next;
    }
    return out;
}

inline std::vector<double> ranks(const std::vector<double> &v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) {
            ++j;
        }
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) {
            r[idx[k]] = avg;
        }
        i = j + 1;
    }
    return r;
}

inline double pearson(const std::vector<double> &x, const std::vector<double> &y) {
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

inline double spearman(const std::vector<double> &x, const std::vector<double> &y) {
    return pearson(ranks(x), ranks(y));
}

} // namespace qland::testing
