#pragma once

// Equilibrium price-impact kernel Lambda_{x,y}, derivative-to-derivative
// impact, information efficiency across |S|, and the invariance experiment.

#include <cmath>
#include <cstdint>
#include <vector>

#include "infkyle/equilibrium_solver.hpp"
#include "infkyle/error.hpp"
#include "infkyle/info_kernel.hpp"
#include "infkyle/market_model.hpp"
#include "infkyle/numeric.hpp"
#include "infkyle/orderflow_sim.hpp"
#include "infkyle/posterior_engine.hpp"

namespace infkyle {

struct ImpactEstimate {
    int x_index = 0;
    int y_index = 0;
    double lambda = 0.0;
    double std_err = 0.0;
    std::size_t n_paths = 0;
    double min_path_value = 0.0;  // smallest per-path estimate
};

struct ImpactConfig {
    PathMcConfig mc;
    int conditional_signal = -1;  // -1: signal drawn uniformly per path
};

/// Signal driving path k: uniform over I from the path's own stream, or fixed.
inline int impact_path_signal(const ImpactConfig& cfg, std::size_t k, int I) {
    if (cfg.conditional_signal >= 0) return cfg.conditional_signal;
    const std::uint64_t u = splitmix64(substream_seed(cfg.mc.seed ^ 0x5EC0DE5EC0DEull, k));
    return static_cast<int>((u >> 11) % static_cast<std::uint64_t>(I));
}

/// Lambda over all (x, y) pairs from shared equilibrium-law paths.
/// Entry [a][b] is for (x_indices[a], y_indices[b]).
inline std::vector<std::vector<ImpactEstimate>> impact_kernel(const std::vector<int>& x_indices,
                                                              const std::vector<int>& y_indices,
                                                              const Equilibrium& eq, const PayoffFamily& family,
                                                              const NoiseProfile& noise, const StateGrid& grid,
                                                              const ImpactConfig& cfg) {
    const int I = family.signal_count();
    if (eq.demand.rows() != I || eq.demand.cols() != grid.size())
        throw Error("analytics", "equilibrium demand is missing or does not match the family");
    if (cfg.conditional_signal >= I) throw Error("analytics", "conditional signal out of range");
    for (int j : x_indices)
        if (j < 0 || j >= grid.size()) throw Error("analytics", "x index " + std::to_string(j) + " out of range");
    for (int j : y_indices)
        if (j < 0 || j >= grid.size()) throw Error("analytics", "y index " + std::to_string(j) + " out of range");

    const BeliefModel model(eq.demand, noise, grid);
    const std::size_t nx = x_indices.size(), ny = y_indices.size();
    Matrix F(I, nx), G(I, ny);  // eta(x, .) and W*(y, .) / sigma^2(y) at the probes
    for (std::size_t a = 0; a < nx; ++a) F.col(a) = family.eta.col(x_indices[a]);
    for (std::size_t b = 0; b < ny; ++b)
        G.col(b) = eq.demand.col(y_indices[b]) * noise.inverse_variance()[y_indices[b]];

    struct Acc {
        std::vector<ScalarStats> cells;
        std::vector<double> min_val;
    };
    Acc init{std::vector<ScalarStats>(nx * ny), std::vector<double>(nx * ny, INFINITY)};
    const Acc acc = for_each_path(
        cfg.mc, init,
        [&](std::size_t k, Acc& o) {
            const int s = impact_path_signal(cfg, k, I);
            const Path p = order_flow_from_noise(eq.demand.row(s).transpose(), noise, grid,
                                                 path_noise(grid, path_seed(cfg.mc, k)));
            const Vector pi = model.posterior(p).pi1;
            const Vector fm = F.transpose() * pi, gm = G.transpose() * pi;
            const Matrix Fc = F.rowwise() - fm.transpose();
            const Matrix Gc = G.rowwise() - gm.transpose();
            const Matrix cov = Fc.transpose() * pi.asDiagonal() * Gc;
            for (std::size_t a = 0; a < nx; ++a)
                for (std::size_t b = 0; b < ny; ++b) {
                    const double v = cov(a, b);
                    o.cells[a * ny + b].add(v);
                    o.min_val[a * ny + b] = std::min(o.min_val[a * ny + b], v);
                }
        },
        [](Acc& o, const Acc& blk) {
            for (std::size_t c = 0; c < o.cells.size(); ++c) {
                o.cells[c].merge(blk.cells[c]);
                o.min_val[c] = std::min(o.min_val[c], blk.min_val[c]);
            }
        });

    std::vector<std::vector<ImpactEstimate>> out(nx, std::vector<ImpactEstimate>(ny));
    for (std::size_t a = 0; a < nx; ++a)
        for (std::size_t b = 0; b < ny; ++b) {
            const auto& st = acc.cells[a * ny + b];
            out[a][b] = {x_indices[a], y_indices[b], st.mean(), st.std_err(), cfg.mc.n_paths, acc.min_val[a * ny + b]};
        }
    return out;
}

inline ImpactEstimate cross_price_impact(int x_index, int y_index, const Equilibrium& eq, const PayoffFamily& family,
                                         const NoiseProfile& noise, const StateGrid& grid, const ImpactConfig& cfg) {
    return impact_kernel({x_index}, {y_index}, eq, family, noise, grid, cfg)[0][0];
}

/// m evenly spaced grid indices including both endpoints.
inline std::vector<int> impact_subgrid(const StateGrid& grid, int m) {
    if (m < 2 || m > grid.size()) throw Error("analytics", "sub-grid size must lie in [2, n]");
    std::vector<int> idx(m);
    for (int a = 0; a < m; ++a)
        idx[a] = static_cast<int>(std::lround(static_cast<double>(a) * (grid.size() - 1) / (m - 1)));
    return idx;
}

namespace detail {
inline std::vector<double> subgrid_weights(const std::vector<double>& x) {
    std::vector<double> w(x.size(), 0.0);
    for (std::size_t a = 0; a + 1 < x.size(); ++a) {
        const double h = x[a + 1] - x[a];
        w[a] += 0.5 * h;
        w[a + 1] += 0.5 * h;
    }
    return w;
}

/// Number of sub-grid panels meeting the support of f (|f| > tiny).
inline int support_panels(const Vector& f, const std::vector<int>& idx, const StateGrid& grid) {
    const double tiny = 1e-12 * std::max(f.cwiseAbs().maxCoeff(), 1e-300);
    int first = -1, last = -1;
    for (Eigen::Index j = 0; j < f.size(); ++j)
        if (std::abs(f[j]) > tiny) {
            if (first < 0) first = static_cast<int>(j);
            last = static_cast<int>(j);
        }
    if (first < 0) return -1;
    if (first < idx.front() || last > idx.back())
        throw Error("analytics", "impact sub-grid does not cover the support of the payoff");
    const double lo = grid.node(first), hi = grid.node(last);
    int panels = 0;
    for (std::size_t a = 0; a + 1 < idx.size(); ++a)
        if (grid.node(idx[a + 1]) > lo && grid.node(idx[a]) < hi) ++panels;
    return std::max(panels, 1);
}
}  // namespace detail

/// sum_x sum_y phi1(x) phi2(y) Lambda(x, y) w_x w_y over the sub-grid, with
/// trapezoid weights on the sub-grid nodes.
inline double derivative_cross_impact(const Vector& phi1, const Vector& phi2, const Matrix& impact,
                                      const std::vector<int>& x_indices, const std::vector<int>& y_indices,
                                      const StateGrid& grid) {
    if (phi1.size() != grid.size() || phi2.size() != grid.size())
        throw Error("analytics", "derivative payoffs must be grid functions");
    if (impact.rows() != static_cast<Eigen::Index>(x_indices.size()) ||
        impact.cols() != static_cast<Eigen::Index>(y_indices.size()))
        throw Error("analytics", "impact matrix does not match the sub-grid");
    if (x_indices.size() < 2 || y_indices.size() < 2) throw Error("analytics", "impact sub-grid too small");
    const int px = detail::support_panels(phi1, x_indices, grid);
    const int py = detail::support_panels(phi2, y_indices, grid);
    if (px < 0 || py < 0) return 0.0;
    if (px < 9 || py < 9)
        throw Error("analytics", "impact sub-grid too coarse: " + std::to_string(px) + " x " + std::to_string(py) +
                                     " panels over the supports, need at least 9 x 9");
    std::vector<double> xs, ys;
    for (int j : x_indices) xs.push_back(grid.node(j));
    for (int j : y_indices) ys.push_back(grid.node(j));
    const auto wx = detail::subgrid_weights(xs), wy = detail::subgrid_weights(ys);
    CompensatedSum s;
    for (std::size_t a = 0; a < xs.size(); ++a) {
        const double fa = phi1[x_indices[a]] * wx[a];
        if (fa == 0.0) continue;
        for (std::size_t b = 0; b < ys.size(); ++b) s.add(fa * phi2[y_indices[b]] * wy[b] * impact(a, b));
    }
    return s.value();
}

inline Matrix impact_values(const std::vector<std::vector<ImpactEstimate>>& est) {
    Matrix M(static_cast<Eigen::Index>(est.size()), est.empty() ? 0 : static_cast<Eigen::Index>(est[0].size()));
    for (std::size_t a = 0; a < est.size(); ++a)
        for (std::size_t b = 0; b < est[a].size(); ++b) M(a, b) = est[a][b].lambda;
    return M;
}

struct EfficiencyRow {
    int I = 0;
    double alpha_eff_star = 0.0;
    double ie = 0.0;
    double std_err = 0.0;
};

struct EfficiencyConfig {
    std::size_t n_samples = 200000;
    std::uint64_t seed = 0;
    unsigned workers = 1;
    int true_index = 0;
};

/// IE = E[q_true | s_true] at alpha_eff.
inline EfficiencyRow information_efficiency(int I, double alpha_eff_star, const CrnNoise& noise, int true_index = 0,
                                            unsigned workers = 1) {
    if (!(alpha_eff_star >= 0.0)) throw Error("analytics", "alpha_eff_star must be nonnegative");
    const auto m = posterior_moments(alpha_eff_star, true_index, noise, workers);
    return {I, alpha_eff_star, m.m1[true_index], m.std_err_m1};
}

inline EfficiencyRow information_efficiency(int I, double alpha_eff_star, const EfficiencyConfig& cfg) {
    const CrnNoise noise(I, cfg.n_samples, cfg.seed, cfg.workers);
    return information_efficiency(I, alpha_eff_star, noise, cfg.true_index, cfg.workers);
}

struct EfficiencySweep {
    std::vector<EfficiencyRow> rows;
    std::vector<double> first_diff;
    std::vector<double> second_diff;
};

/// Solves alpha_eff*(I) on each I's exchangeable kernel (disjoint bumps on
/// `grid`) and evaluates IE there. Every I uses the same master seed, so a row
/// equals the standalone information_efficiency call at that seed.
inline EfficiencySweep efficiency_sweep(const std::vector<int>& I_list, const StateGrid& grid,
                                        const NoiseProfile& noise, const SolverConfig& cfg) {
    EfficiencySweep out;
    for (int I : I_list) {
        if (I < 2) throw Error("analytics", "efficiency sweep needs I >= 2");
        const auto family = disjoint_bump_family(I, grid);
        const auto kernel = build_canonical_kernel(family, noise, grid);
        require_solvable(kernel);
        const CrnNoise crn(I, cfg.n_samples, cfg.seed, cfg.workers);
        const auto root = solve_canonical_root(I, crn, cfg);
        out.rows.push_back(information_efficiency(I, root.alpha_eff_star, crn, cfg.true_index, cfg.workers));
    }
    for (std::size_t k = 1; k < out.rows.size(); ++k) out.first_diff.push_back(out.rows[k].ie - out.rows[k - 1].ie);
    for (std::size_t k = 1; k < out.first_diff.size(); ++k)
        out.second_diff.push_back(out.first_diff[k] - out.first_diff[k - 1]);
    return out;
}

struct InvarianceSide {
    double alpha_eff_star = 0.0;
    double alpha_star = 0.0;
    double c = 0.0;
    double ie = 0.0;
    double ie_std_err = 0.0;
};

struct InvarianceReport {
    InvarianceSide a, b;
    double alpha_eff_gap = 0.0;
    double ie_gap = 0.0;
    double physical_ratio = 0.0;  // alpha*_a / alpha*_b
    double predicted_ratio = 0.0;  // sqrt(c_b / c_a)
};

/// Runs both pipelines end to end on the same seed.
inline InvarianceReport invariance_experiment(const PayoffFamily& family_a, const NoiseProfile& noise_a,
                                              const PayoffFamily& family_b, const NoiseProfile& noise_b,
                                              const StateGrid& grid, const SolverConfig& cfg) {
    if (family_a.signal_count() != family_b.signal_count())
        throw Error("analytics", "invariance experiment needs equal I");
    auto side = [&](const PayoffFamily& f, const NoiseProfile& nz) {
        const auto kernel = build_canonical_kernel(f, nz, grid);
        if (!kernel.exchangeable) throw Error("analytics", "invariance experiment refuses a non-exchangeable kernel");
        const int I = f.signal_count();
        const CrnNoise crn(I, cfg.n_samples, cfg.seed, cfg.workers);
        const auto eq = equilibrium_from_root(kernel, solve_canonical_root(I, crn, cfg));
        const auto row = information_efficiency(I, eq.alpha_eff_star, crn, cfg.true_index, cfg.workers);
        return InvarianceSide{eq.alpha_eff_star, eq.alpha_star, eq.c, row.ie, row.std_err};
    };
    InvarianceReport r;
    r.a = side(family_a, noise_a);
    r.b = side(family_b, noise_b);
    r.alpha_eff_gap = std::abs(r.a.alpha_eff_star - r.b.alpha_eff_star);
    r.ie_gap = std::abs(r.a.ie - r.b.ie);
    r.physical_ratio = r.a.alpha_star / r.b.alpha_star;
    r.predicted_ratio = std::sqrt(r.b.c / r.a.c);
    return r;
}

}  // namespace infkyle
