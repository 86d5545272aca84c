#pragma once

// Scalar equilibrium equation Phi(a) = 0 under the symmetric ansatz, the
// bracketing/bisection solver on a frozen noise stream, equilibrium demand
// synthesis, and the single-asset Kyle benchmark.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "infkyle/error.hpp"
#include "infkyle/info_kernel.hpp"
#include "infkyle/market_model.hpp"
#include "infkyle/numeric.hpp"
#include "infkyle/posterior_engine.hpp"

namespace infkyle {

/// Phi(a) = 1 - E[q_true] - a^2 (Q cbar Q)_{true,true}.
/// Phi(0) = 1 - 1/I; for I = 2 this is 1 - phi1 - a^2 phi2.
inline double phi(double alpha_eff, int I, const MomentEstimates& m) {
    if (m.I != I) throw Error("equilibrium_solver", "moments were computed for a different I");
    if (m.alpha_eff != alpha_eff) throw Error("equilibrium_solver", "moments were computed at a different alpha");
    return 1.0 - m.m1[m.true_index] - alpha_eff * alpha_eff * m.qcq_diag;
}

struct SolverConfig {
    std::size_t n_samples = 200000;
    std::uint64_t seed = 0;
    unsigned workers = 1;
    int true_index = 0;
    double phi_tol = 1e-4;
    double bisect_tol = 1e-6;
    double bracket_cap = 1048576.0;  // 2^20
    int max_bisections = 200;
};

struct Bracket {
    double lo = 0.0, hi = 0.0;
    double phi_lo = 0.0, phi_hi = 0.0;
};

/// Root of the canonical game; depends on I and the noise stream only.
struct CanonicalRoot {
    int I = 0;
    double alpha_eff_star = 0.0;
    double phi_residual = 0.0;
    std::vector<Bracket> brackets;  // brackets found; the first one is certified
    Bracket final_bracket;
    int evaluations = 0;
    std::size_t n_samples = 0;
    std::uint64_t seed = 0;
};

inline CanonicalRoot solve_canonical_root(int I, const CrnNoise& noise, const SolverConfig& cfg) {
    if (noise.signal_count() != I) throw Error("equilibrium_solver", "noise stream has the wrong width");
    CanonicalRoot r;
    r.I = I;
    r.n_samples = noise.size();
    r.seed = noise.seed();
    auto eval = [&](double a) {
        ++r.evaluations;
        return phi(a, I, posterior_moments(a, cfg.true_index, noise, cfg.workers));
    };

    double lo = 0.0, f_lo = eval(0.0);
    if (!(f_lo > 0.0)) throw Error("equilibrium_solver", "Phi(0) is not positive");
    double hi = 1.0, f_hi = eval(hi);
    while (!(f_hi < 0.0)) {
        if (f_hi > 0.0) {
            lo = hi;
            f_lo = f_hi;
        }
        hi *= 2.0;
        if (hi > cfg.bracket_cap)
            throw Error("equilibrium_solver", "no sign change of Phi below alpha = " + csv::format(cfg.bracket_cap) +
                                                  " (degenerate kernel)");
        f_hi = eval(hi);
    }
    r.brackets.push_back({lo, hi, f_lo, f_hi});

    double mid = 0.5 * (lo + hi), f_mid = eval(mid);
    for (int it = 0; it < cfg.max_bisections; ++it) {
        if (std::abs(f_mid) < cfg.phi_tol && hi - lo < cfg.bisect_tol) break;
        if (f_mid > 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
            f_hi = f_mid;
        }
        const double next = 0.5 * (lo + hi);
        if (next == mid) break;
        mid = next;
        f_mid = eval(mid);
    }
    r.alpha_eff_star = mid;
    r.phi_residual = f_mid;
    r.final_bracket = {lo, hi, f_lo, f_hi};
    return r;
}

inline CanonicalRoot solve_canonical_root(int I, const SolverConfig& cfg) {
    const CrnNoise noise(I, cfg.n_samples, cfg.seed, cfg.workers);
    return solve_canonical_root(I, noise, cfg);
}

struct Equilibrium {
    int I = 0;
    double alpha_eff_star = 0.0;  // whitened scale
    double alpha_star = 0.0;      // physical scale, alpha_eff_star / sqrt(c)
    double c = 0.0;
    Matrix theta_star;  // columns: alpha_eff_star * Q e_i
    Matrix beta_star;   // columns: alpha_star * Q e_i, coefficients on the payoff rows
    RowMatrix demand;   // I x n, W*(x_j, s_i); empty until synthesized
    double phi_residual = 0.0;
    std::vector<Bracket> brackets;
    std::size_t n_samples = 0;
    std::uint64_t seed = 0;
};

inline void require_solvable(const CanonicalKernel& kernel) {
    if (kernel.degenerate)
        throw Error("equilibrium_solver", "degenerate kernel: signals are observationally identical (c = " +
                                              csv::format(kernel.c) + ")");
    if (!kernel.exchangeable && kernel.signal_count() >= 3)
        throw Error("equilibrium_solver", "kernel is not exchangeable (defect " + csv::format(kernel.exchange_defect) +
                                              "); the symmetric ansatz does not apply");
}

/// Equilibrium scales and coefficients; demand is left empty.
inline Equilibrium equilibrium_from_root(const CanonicalKernel& kernel, const CanonicalRoot& root) {
    require_solvable(kernel);
    const int I = kernel.signal_count();
    if (root.I != I) throw Error("equilibrium_solver", "root was solved for a different I");
    Equilibrium eq;
    eq.I = I;
    eq.c = kernel.c;
    eq.alpha_eff_star = root.alpha_eff_star;
    eq.alpha_star = root.alpha_eff_star / std::sqrt(kernel.c);
    eq.theta_star = eq.alpha_eff_star * kernel.Q;
    eq.beta_star = eq.alpha_star * kernel.Q;
    eq.phi_residual = root.phi_residual;
    eq.brackets = root.brackets;
    eq.n_samples = root.n_samples;
    eq.seed = root.seed;
    return eq;
}

inline Equilibrium solve_alpha_star(const CanonicalKernel& kernel, const SolverConfig& cfg) {
    require_solvable(kernel);
    return equilibrium_from_root(kernel, solve_canonical_root(kernel.signal_count(), cfg));
}

/// W*(., s_i) = sum_u beta*(s_i)[u] eta(., s_u) = alpha* (eta_i - m).
inline RowMatrix equilibrium_demand(const Equilibrium& eq, const CanonicalKernel& kernel, const PayoffFamily& family,
                                    const StateGrid& grid) {
    const int I = family.signal_count();
    if (I != kernel.signal_count() || eq.beta_star.rows() != I)
        throw Error("equilibrium_solver", "equilibrium, kernel and family disagree on I");
    if (family.eta.cols() != grid.size()) throw Error("equilibrium_solver", "family does not match grid");
    // The whitened images L beta must span range(Q); otherwise L lost rank.
    const Matrix whitened = kernel.L * eq.beta_star;
    const Matrix gram = whitened.transpose() * whitened;
    const double target = eq.alpha_eff_star * eq.alpha_eff_star;
    if (target > 0.0 && (gram - target * kernel.Q).norm() > 1e-6 * target * kernel.Q.norm() && kernel.exchangeable)
        throw Error("equilibrium_solver", "whitened demand Gram does not match alpha^2 Q (rank deficiency in L)");
    RowMatrix W = eq.beta_star.transpose() * family.eta;
    return W;
}

/// Solves the scale and synthesizes the demand surface.
inline Equilibrium solve_equilibrium(const CanonicalKernel& kernel, const PayoffFamily& family, const StateGrid& grid,
                                     const SolverConfig& cfg) {
    Equilibrium eq = solve_alpha_star(kernel, cfg);
    eq.demand = equilibrium_demand(eq, kernel, family, grid);
    return eq;
}

/// Gram of the demand rows under <.,.>_sigma; equals alpha_eff^2 Q in equilibrium.
inline Matrix demand_gram(const RowMatrix& demand, const NoiseProfile& noise, const StateGrid& grid) {
    const int I = static_cast<int>(demand.rows());
    Matrix G(I, I);
    for (int i = 0; i < I; ++i)
        for (int j = i; j < I; ++j) {
            G(i, j) = weighted_inner_product(demand.row(i).transpose(), demand.row(j).transpose(), noise, grid);
            G(j, i) = G(i, j);
        }
    return G;
}

struct KyleBenchmark {
    double sigma_v = 0.0;
    double sigma_eps = 0.0;
    double beta = 0.0;
    double lambda = 0.0;
};

inline KyleBenchmark kyle_single_asset(double sigma_v, double sigma_eps) {
    if (!(sigma_v > 0.0) || !(sigma_eps > 0.0) || !std::isfinite(sigma_v) || !std::isfinite(sigma_eps))
        throw Error("equilibrium_solver", "Kyle benchmark needs positive finite volatilities");
    return {sigma_v, sigma_eps, sigma_eps / sigma_v, sigma_v / (2.0 * sigma_eps)};
}

}  // namespace infkyle
