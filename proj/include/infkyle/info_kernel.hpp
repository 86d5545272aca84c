#pragma once

// Information-intensity kernel k(s,t) = <eta(.,s), eta(.,t)>_sigma on a
// finite signal set, its centering projection, square root and
// pseudo-inverse, and the exchangeability scale c with QKQ = cQ.

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "infkyle/error.hpp"
#include "infkyle/market_model.hpp"
#include "infkyle/numeric.hpp"

namespace infkyle {

struct CanonicalKernel {
    Matrix K;       // Gram matrix under <.,.>_sigma
    Matrix Q;       // centering projection
    double c = 0.0; // QKQ = c Q when exchangeable
    Matrix L;       // positive square root of K
    Matrix L_pinv;  // Moore-Penrose inverse of L
    bool exchangeable = false;
    bool degenerate = false;
    double rank_tol = 1e-10;
    double exchange_tol = 1e-6;
    double exchange_defect = 0.0;  // ||QKQ - cQ||_F / (|c| ||Q||_F)

    int signal_count() const { return static_cast<int>(K.rows()); }
};

inline Matrix gram_matrix(const PayoffFamily& family, const NoiseProfile& noise, const StateGrid& grid) {
    const int I = family.signal_count();
    if (family.eta.cols() != grid.size()) throw Error("info_kernel", "payoff rows do not match the grid");
    Matrix K(I, I);
    for (int i = 0; i < I; ++i) {
        const Vector ri = family.row(i);
        for (int j = i; j < I; ++j) {
            K(i, j) = weighted_inner_product(ri, family.row(j), noise, grid);
            K(j, i) = K(i, j);
        }
    }
    return K;
}

/// Q = Id - (1/I) e e^T.
inline Matrix centering_matrix(int I) {
    if (I < 2) throw Error("info_kernel", "centering requires I >= 2");
    Matrix Q = Matrix::Constant(I, I, -1.0 / I);
    Q.diagonal().array() += 1.0;
    return Q;
}

struct ExchangeabilityScale {
    double c = 0.0;
    bool exchangeable = false;
    double defect = 0.0;
};

/// Least-squares fit of QKQ to cQ. For I = 2 the fit is exact:
/// c = (K11 - 2 K12 + K22) / 2.
inline ExchangeabilityScale exchangeability_scale(const Matrix& K, const Matrix& Q, double tol) {
    if (K.rows() != K.cols() || K.rows() != Q.rows() || Q.rows() != Q.cols())
        throw Error("info_kernel", "exchangeability_scale: shape mismatch");
    const Matrix M = Q * K * Q;
    ExchangeabilityScale out;
    out.c = M.trace() / Q.trace();
    const double resid = (M - out.c * Q).norm();
    const double scale = std::abs(out.c) * Q.norm();
    out.defect = scale > 0.0 ? resid / scale : (resid > 0.0 ? INFINITY : 0.0);
    out.exchangeable = K.rows() == 2 || out.defect < tol;
    return out;
}

struct SqrtPinv {
    Matrix L;
    Matrix L_pinv;
};

inline SqrtPinv sqrt_and_pinv(const Matrix& K, double rank_tol) {
    if (K.rows() != K.cols()) throw Error("info_kernel", "sqrt_and_pinv: matrix is not square");
    const double scale = std::max(1.0, K.cwiseAbs().maxCoeff());
    if ((K - K.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
        throw Error("info_kernel", "sqrt_and_pinv: matrix is not symmetric");

    Eigen::SelfAdjointEigenSolver<Matrix> es(K);
    const Vector& lambda = es.eigenvalues();
    const Matrix& U = es.eigenvectors();
    const double lmax = lambda.size() ? lambda.maxCoeff() : 0.0;

    Vector root(lambda.size()), inv_root(lambda.size());
    for (Eigen::Index k = 0; k < lambda.size(); ++k) {
        const double l = std::max(lambda[k], 0.0);
        root[k] = std::sqrt(l);
        inv_root[k] = (lmax > 0.0 && lambda[k] > rank_tol * lmax) ? 1.0 / root[k] : 0.0;
    }
    SqrtPinv out;
    out.L = U * root.asDiagonal() * U.transpose();
    out.L_pinv = U * inv_root.asDiagonal() * U.transpose();
    out.L = 0.5 * (out.L + out.L.transpose());
    out.L_pinv = 0.5 * (out.L_pinv + out.L_pinv.transpose());
    return out;
}

inline CanonicalKernel make_canonical_kernel(Matrix K, double rank_tol = 1e-10, double exchange_tol = 1e-6) {
    const int I = static_cast<int>(K.rows());
    CanonicalKernel ck;
    ck.rank_tol = rank_tol;
    ck.exchange_tol = exchange_tol;
    ck.Q = centering_matrix(I);
    auto [L, Lp] = sqrt_and_pinv(K, rank_tol);
    ck.L = std::move(L);
    ck.L_pinv = std::move(Lp);
    const auto ex = exchangeability_scale(K, ck.Q, exchange_tol);
    ck.c = ex.c;
    ck.exchange_defect = ex.defect;
    ck.exchangeable = ex.exchangeable;
    const double lmax = Eigen::SelfAdjointEigenSolver<Matrix>(K, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
    ck.degenerate = !(lmax > 0.0) || !(ck.c > rank_tol * lmax);
    ck.K = std::move(K);
    return ck;
}

inline CanonicalKernel build_canonical_kernel(const PayoffFamily& family, const NoiseProfile& noise,
                                              const StateGrid& grid, double rank_tol = 1e-10,
                                              double exchange_tol = 1e-6) {
    return make_canonical_kernel(gram_matrix(family, noise, grid), rank_tol, exchange_tol);
}

}  // namespace infkyle
