#pragma once

// Order-flow paths dY_x = W(x) dx + sigma(x) dB_x on the state grid, the
// pathwise projections Pi_mm / Pi_insider, the market maker's posterior and
// the Arrow-Debreu price schedule.

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "infkyle/error.hpp"
#include "infkyle/market_model.hpp"
#include "infkyle/numeric.hpp"

namespace infkyle {

struct Path {
    Vector increments;  // n - 1 cells
    Vector cumulative;  // n nodes, starts at 0
    std::uint64_t seed = 0;
    std::optional<int> drift_signal;
};

namespace detail {
inline void check_profile(const Vector& f, const StateGrid& grid, const char* what) {
    if (f.size() != grid.size())
        throw Error("orderflow_sim", std::string(what) + " has " + std::to_string(f.size()) + " entries, grid has " +
                                         std::to_string(grid.size()));
}
inline void check_belief(const RowMatrix& belief, const StateGrid& grid) {
    if (belief.cols() != grid.size()) throw Error("orderflow_sim", "belief rows do not match the grid");
    if (belief.rows() < 1) throw Error("orderflow_sim", "belief has no rows");
}
}  // namespace detail

/// Builds a path from explicit standard-normal cell draws xi (n - 1 entries).
inline Path order_flow_from_noise(const Vector& W, const NoiseProfile& noise, const StateGrid& grid,
                                  const Vector& xi) {
    detail::check_profile(W, grid, "drift profile");
    if (noise.size() != grid.size()) throw Error("orderflow_sim", "noise profile does not match the grid");
    const int n = grid.size();
    if (xi.size() != n - 1) throw Error("orderflow_sim", "need one normal draw per grid cell");
    const double h = grid.step(), sh = std::sqrt(h);
    Path p;
    p.increments.resize(n - 1);
    p.cumulative.resize(n);
    p.cumulative[0] = 0.0;
    for (int j = 0; j < n - 1; ++j) {
        p.increments[j] = W[j] * h + noise.sigma()[j] * sh * xi[j];
        p.cumulative[j + 1] = p.cumulative[j] + p.increments[j];
    }
    return p;
}

/// Cell draws for one path seed.
inline Vector path_noise(const StateGrid& grid, std::uint64_t seed) {
    Vector xi(grid.size() - 1);
    NormalStream rng(seed);
    rng.fill(xi.data(), static_cast<std::size_t>(xi.size()));
    return xi;
}

inline Path simulate_order_flow(const Vector& W, const NoiseProfile& noise, const StateGrid& grid,
                                std::uint64_t seed) {
    Path p = order_flow_from_noise(W, noise, grid, path_noise(grid, seed));
    p.seed = seed;
    return p;
}

/// Left-point Riemann sum sum_j f(x_j) (omega_{j+1} - omega_j).
inline double young_integral(const Vector& f, const Path& path) {
    if (f.size() != path.cumulative.size()) throw Error("orderflow_sim", "integrand does not match path length");
    CompensatedSum s;
    for (Eigen::Index j = 0; j < path.increments.size(); ++j) s.add(f[j] * path.increments[j]);
    return s.value();
}

inline Vector pi_mm(const Path& path, const RowMatrix& belief, const NoiseProfile& noise, const StateGrid& grid) {
    detail::check_belief(belief, grid);
    if (path.cumulative.size() != grid.size()) throw Error("orderflow_sim", "path does not match the grid");
    const Eigen::Index m = path.increments.size();
    const Vector scaled = noise.inverse_variance().head(m).cwiseProduct(path.increments);
    return belief.leftCols(m) * scaled;
}

inline Vector pi_insider(const Vector& W, const RowMatrix& belief, const NoiseProfile& noise, const StateGrid& grid) {
    detail::check_belief(belief, grid);
    detail::check_profile(W, grid, "portfolio");
    const Vector wv = W.cwiseProduct(noise.inverse_variance()).cwiseProduct(grid.weights());
    return belief * wv;
}

struct PathPosterior {
    Vector pi1;
    Vector log_likelihoods;
    Vector pi_mm;
};

/// Precomputed per-belief quantities for repeated posterior evaluation.
class BeliefModel {
  public:
    BeliefModel(RowMatrix belief, const NoiseProfile& noise, const StateGrid& grid)
        : belief_(std::move(belief)), inv_var_(noise.inverse_variance()) {
        detail::check_belief(belief_, grid);
        if (noise.size() != grid.size()) throw Error("orderflow_sim", "noise profile does not match the grid");
        half_norm_.resize(belief_.rows());
        for (Eigen::Index i = 0; i < belief_.rows(); ++i) {
            const Vector r = belief_.row(i).transpose();
            half_norm_[i] = 0.5 * weighted_inner_product(r, r, noise, grid);
        }
        weighted_left_ = belief_.leftCols(grid.size() - 1);
        for (Eigen::Index j = 0; j < weighted_left_.cols(); ++j) weighted_left_.col(j) *= inv_var_[j];
    }

    const RowMatrix& belief() const { return belief_; }
    int signal_count() const { return static_cast<int>(belief_.rows()); }

    PathPosterior posterior(const Path& path) const {
        if (path.increments.size() != weighted_left_.cols())
            throw Error("orderflow_sim", "path does not match the belief grid");
        PathPosterior out;
        out.pi_mm = weighted_left_ * path.increments;
        out.log_likelihoods = out.pi_mm - half_norm_;
        for (Eigen::Index i = 0; i < out.log_likelihoods.size(); ++i)
            if (!std::isfinite(out.log_likelihoods[i]))
                throw Error("orderflow_sim", "non-finite log-likelihood for signal " + std::to_string(i));
        softmax(out.log_likelihoods, out.pi1);
        return out;
    }

  private:
    RowMatrix belief_;
    Vector inv_var_;
    Vector half_norm_;
    RowMatrix weighted_left_;
};

inline PathPosterior pathwise_posterior(const Path& path, const RowMatrix& belief, const NoiseProfile& noise,
                                        const StateGrid& grid) {
    return BeliefModel(belief, noise, grid).posterior(path);
}

/// P(x) = sum_i pi_i eta(x, s_i).
inline Vector price_schedule(const PathPosterior& post, const PayoffFamily& family, const StateGrid& grid) {
    if (post.pi1.size() != family.signal_count())
        throw Error("orderflow_sim", "posterior and payoff family disagree on I");
    if (family.eta.cols() != grid.size()) throw Error("orderflow_sim", "payoff family does not match the grid");
    return family.eta.transpose() * post.pi1;
}

/// Monte Carlo settings for path-based estimators. Path k draws its cell
/// noise from substream k of `seed`, so every estimator sharing a config sees
/// the same noise (common random numbers) regardless of worker count.
struct PathMcConfig {
    std::size_t n_paths = 20000;
    std::uint64_t seed = 0;
    unsigned workers = 1;
    std::size_t block_paths = 256;
};

inline std::uint64_t path_seed(const PathMcConfig& mc, std::size_t k) { return substream_seed(mc.seed, k); }

/// Runs fn(k, acc) over all paths in blocks; per-block accumulators are
/// merged in block order so results are bitwise independent of `workers`.
template <class Acc, class Fn, class Merge>
Acc for_each_path(const PathMcConfig& mc, const Acc& init, Fn&& fn, Merge&& merge) {
    if (mc.n_paths == 0) throw Error("orderflow_sim", "n_paths must be positive");
    const std::size_t bp = std::max<std::size_t>(1, mc.block_paths);
    const std::size_t nb = (mc.n_paths + bp - 1) / bp;
    std::vector<Acc> blocks(nb, init);
    parallel_blocks(nb, mc.workers, [&](std::size_t b) {
        const std::size_t hi = std::min(mc.n_paths, (b + 1) * bp);
        for (std::size_t k = b * bp; k < hi; ++k) fn(k, blocks[b]);
    });
    Acc out = init;
    for (const auto& blk : blocks) merge(out, blk);
    return out;
}

/// Whitened canonical noise induced by the cell draws xi under the belief
/// rows: N_i = sum_j belief_i(x_j) sqrt(h) xi_j / sigma_j, divided by alpha_eff.
/// With the equilibrium demand as belief, the canonical posterior driven by
/// this vector reproduces the pathwise posterior.
inline Vector whitened_noise(const Vector& xi, const RowMatrix& belief, const NoiseProfile& noise,
                             const StateGrid& grid, double alpha_eff) {
    detail::check_belief(belief, grid);
    if (xi.size() != grid.size() - 1) throw Error("orderflow_sim", "need one normal draw per grid cell");
    if (!(alpha_eff > 0.0)) throw Error("orderflow_sim", "whitening needs alpha_eff > 0");
    const Eigen::Index m = xi.size();
    const Vector scaled = (std::sqrt(grid.step()) * xi).cwiseQuotient(noise.sigma().head(m));
    return (belief.leftCols(m) * scaled) / alpha_eff;
}

}  // namespace infkyle
