#pragma once

// Insider expected utility, the three-term first-order decomposition
// (payoff / Arrow-Debreu / price impact) checked against a common-random-number
// finite difference, and the zero-price-impact subspace.

#include <cmath>
#include <string>
#include <vector>

#include "infkyle/error.hpp"
#include "infkyle/market_model.hpp"
#include "infkyle/numeric.hpp"
#include "infkyle/orderflow_sim.hpp"

namespace infkyle {

struct UtilityEstimate {
    double J = 0.0;
    double std_err = 0.0;
    std::size_t n_paths = 0;
};

namespace detail {
inline void check_signal(int s, const PayoffFamily& family, const BeliefModel& model) {
    if (model.signal_count() != family.signal_count())
        throw Error("insider_objective", "belief and payoff family disagree on I");
    if (s < 0 || s >= family.signal_count()) throw Error("insider_objective", "signal index out of range");
}

/// a_i = int W eta_i dx under the trapezoid weights.
inline Vector payoff_pairings(const Vector& W, const PayoffFamily& family, const StateGrid& grid) {
    if (W.size() != grid.size()) throw Error("insider_objective", "portfolio does not match the grid");
    return family.eta * W.cwiseProduct(grid.weights());
}

/// Cov under weights p of vectors a and m over signal atoms.
inline double posterior_cov(const Vector& p, const Vector& a, const Vector& m) {
    const double ma = p.dot(a), mm = p.dot(m);
    double s = 0.0;
    for (Eigen::Index i = 0; i < p.size(); ++i) s += p[i] * (a[i] - ma) * (m[i] - mm);
    return s;
}
}  // namespace detail

/// J(W) = E[ int (eta(x,s) - P(x,omega)) W(x) dx ] over paths with drift W.
inline UtilityEstimate expected_utility(const Vector& W, const BeliefModel& model, int s_index,
                                        const PayoffFamily& family, const NoiseProfile& noise, const StateGrid& grid,
                                        const PathMcConfig& mc) {
    detail::check_signal(s_index, family, model);
    const Vector a = detail::payoff_pairings(W, family, grid);
    auto st = for_each_path(
        mc, ScalarStats{},
        [&](std::size_t k, ScalarStats& acc) {
            const Path p = order_flow_from_noise(W, noise, grid, path_noise(grid, path_seed(mc, k)));
            const auto post = model.posterior(p);
            acc.add(a[s_index] - post.pi1.dot(a));
        },
        [](ScalarStats& o, const ScalarStats& b) { o.merge(b); });
    return {st.mean(), st.std_err(), mc.n_paths};
}

inline UtilityEstimate expected_utility(const Vector& W, const RowMatrix& belief, int s_index,
                                        const PayoffFamily& family, const NoiseProfile& noise, const StateGrid& grid,
                                        const PathMcConfig& mc) {
    return expected_utility(W, BeliefModel(belief, noise, grid), s_index, family, noise, grid, mc);
}

struct FocReport {
    std::string direction_id;
    double payoff_term = 0.0;
    double ad_term = 0.0;
    double impact_term = 0.0;
    double fd_total = 0.0;
    double residual = 0.0;  // fd_total - (payoff - ad - impact)
    double std_err = 0.0;   // combined
    double fd_std_err = 0.0;
    double epsilon = 0.0;
    std::size_t n_paths = 0;
};

inline double foc_epsilon(const Vector& W, const Vector& v) {
    const double vmax = v.cwiseAbs().maxCoeff();
    if (!(vmax > 0.0)) throw Error("insider_objective", "finite-difference step underflows: direction is zero");
    return std::max(1e-3 * W.cwiseAbs().maxCoeff() / vmax, 1e-4);
}

inline FocReport foc_terms(const Vector& W, const BeliefModel& model, int s_index, const Vector& v,
                           const PayoffFamily& family, const NoiseProfile& noise, const StateGrid& grid,
                           const PathMcConfig& mc, std::string direction_id = "v") {
    detail::check_signal(s_index, family, model);
    if (v.size() != grid.size()) throw Error("insider_objective", "direction does not match the grid");
    const double eps = foc_epsilon(W, v);
    const Vector a = detail::payoff_pairings(W, family, grid);
    const Vector b = detail::payoff_pairings(v, family, grid);
    const Vector m = pi_insider(v, model.belief(), noise, grid);
    const Vector Wp = W + eps * v, Wm = W - eps * v;
    const Vector ap = a + eps * b, am = a - eps * b;

    struct Acc {
        ScalarStats fd, ad, imp;
    };
    const Acc acc = for_each_path(
        mc, Acc{},
        [&](std::size_t k, Acc& o) {
            const Vector xi = path_noise(grid, path_seed(mc, k));
            const auto post = model.posterior(order_flow_from_noise(W, noise, grid, xi));
            o.ad.add(post.pi1.dot(b));
            o.imp.add(detail::posterior_cov(post.pi1, a, m));
            const auto pp = model.posterior(order_flow_from_noise(Wp, noise, grid, xi));
            const auto pm = model.posterior(order_flow_from_noise(Wm, noise, grid, xi));
            const double up = ap[s_index] - pp.pi1.dot(ap);
            const double um = am[s_index] - pm.pi1.dot(am);
            o.fd.add((up - um) / (2.0 * eps));
        },
        [](Acc& o, const Acc& blk) {
            o.fd.merge(blk.fd);
            o.ad.merge(blk.ad);
            o.imp.merge(blk.imp);
        });

    FocReport r;
    r.direction_id = std::move(direction_id);
    r.payoff_term = b[s_index];
    r.ad_term = acc.ad.mean();
    r.impact_term = acc.imp.mean();
    r.fd_total = acc.fd.mean();
    r.residual = r.fd_total - (r.payoff_term - r.ad_term - r.impact_term);
    r.fd_std_err = acc.fd.std_err();
    r.std_err = std::sqrt(acc.fd.variance() / acc.fd.n + acc.ad.variance() / acc.ad.n +
                          acc.imp.variance() / acc.imp.n);
    r.epsilon = eps;
    r.n_paths = mc.n_paths;
    return r;
}

/// Legendre polynomials P_0..P_{d-1} mapped from [x_min, x_max] to [-1, 1].
inline std::vector<Vector> legendre_dictionary(int d, const StateGrid& grid) {
    if (d < 1) throw Error("insider_objective", "empty dictionary");
    std::vector<Vector> out;
    const Vector t = (2.0 * (grid.nodes().array() - grid.x_min()) / grid.span() - 1.0).matrix();
    Vector p0 = Vector::Ones(grid.size()), p1 = t;
    out.push_back(p0);
    if (d > 1) out.push_back(p1);
    for (int k = 2; k < d; ++k) {
        Vector p2 = (((2.0 * k - 1.0) * t.array() * p1.array() - (k - 1.0) * p0.array()) / k).matrix();
        out.push_back(p2);
        p0 = std::move(p1);
        p1 = std::move(p2);
    }
    return out;
}

struct ZeroImpactBasis {
    std::vector<Vector> directions;  // sigma-orthonormal, orthogonal to every belief row
    int dictionary_size = 0;
    int belief_rank = 0;
};

/// Orthogonal complement of span{belief rows} inside the Legendre dictionary,
/// by twice-iterated modified Gram-Schmidt under <.,.>_sigma.
inline ZeroImpactBasis zero_impact_basis(const RowMatrix& belief, const NoiseProfile& noise, const StateGrid& grid,
                                         int dictionary_size = 0) {
    if (belief.cols() != grid.size()) throw Error("insider_objective", "belief rows do not match the grid");
    if (dictionary_size == 0) dictionary_size = 2 * static_cast<int>(belief.rows());
    const auto dict = legendre_dictionary(dictionary_size, grid);
    auto ip = [&](const Vector& f, const Vector& g) { return weighted_inner_product(f, g, noise, grid); };
    auto reduce = [&](Vector r, const std::vector<Vector>& basis) {
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& e : basis) r -= ip(r, e) * e;
        return r;
    };

    std::vector<Vector> span;
    for (Eigen::Index i = 0; i < belief.rows(); ++i) {
        const Vector row = belief.row(i).transpose();
        const double n0 = std::sqrt(ip(row, row));
        if (!(n0 > 0.0)) continue;
        Vector r = reduce(row, span);
        const double nr = std::sqrt(ip(r, r));
        if (nr > 1e-8 * n0) span.push_back(r / nr);
    }
    ZeroImpactBasis out;
    out.dictionary_size = dictionary_size;
    out.belief_rank = static_cast<int>(span.size());
    for (const auto& d : dict) {
        const double n0 = std::sqrt(ip(d, d));
        Vector r = reduce(reduce(d, span), out.directions);
        r = reduce(r, span);
        const double nr = std::sqrt(ip(r, r));
        if (nr > 1e-8 * n0) out.directions.push_back(r / nr);
    }
    return out;
}

/// Payoff pairings int V eta(., s_i) dx for each zero-impact direction
/// (rows: directions, columns: signals).
inline Matrix zero_impact_payoff_pairings(const ZeroImpactBasis& basis, const PayoffFamily& family,
                                          const StateGrid& grid) {
    Matrix out(static_cast<Eigen::Index>(basis.directions.size()), family.signal_count());
    for (std::size_t k = 0; k < basis.directions.size(); ++k)
        out.row(static_cast<Eigen::Index>(k)) = detail::payoff_pairings(basis.directions[k], family, grid).transpose();
    return out;
}

/// True when some zero-impact direction pays differently across signals.
/// A pairing that is the same for every signal is priced in full by any
/// posterior and earns nothing, so only the signal-centered part counts.
inline bool viability_violation(const ZeroImpactBasis& basis, const PayoffFamily& family, const StateGrid& grid,
                                double tol = 1e-8) {
    const Matrix P = zero_impact_payoff_pairings(basis, family, grid);
    if (P.size() == 0) return false;
    const Matrix centered = P.colwise() - P.rowwise().mean();
    return centered.cwiseAbs().maxCoeff() > tol * std::max(1.0, P.cwiseAbs().maxCoeff());
}

}  // namespace infkyle
