#pragma once

// Logistic-normal posterior of the whitened (canonical) game with a uniform
// prior over I signals. Conditional on the true signal s, the posterior is
// q = softmax(a Q xi + a^2 e_s) with xi ~ N(0, Id), so Cov(Z) = a^2 Q.

#include <cmath>
#include <cstdint>
#include <memory>
#include <numbers>
#include <vector>

#include "infkyle/error.hpp"
#include "infkyle/numeric.hpp"
#include "infkyle/quadrature.hpp"

namespace infkyle {

struct PosteriorSample {
    Vector q;
    int true_index = 0;
};

/// One posterior draw, deterministic in `noise` (I standard normals).
inline PosteriorSample sample_posterior(double alpha_eff, int I, int true_index, const Vector& noise) {
    if (!(alpha_eff >= 0.0)) throw Error("posterior_engine", "alpha_eff must be nonnegative");
    if (I < 2) throw Error("posterior_engine", "need I >= 2 signals");
    if (true_index < 0 || true_index >= I) throw Error("posterior_engine", "true_index out of range");
    if (noise.size() != I) throw Error("posterior_engine", "noise vector must have I entries");
    Vector logits = alpha_eff * (noise.array() - noise.mean()).matrix();
    logits[true_index] += alpha_eff * alpha_eff;
    PosteriorSample s;
    s.true_index = true_index;
    softmax(logits, s.q);
    return s;
}

/// Common-random-number noise: an n_samples x I matrix of standard normals
/// generated blockwise from (seed, block) substreams. Reusing one instance
/// across alpha values makes alpha -> Phi_hat(alpha) deterministic and smooth.
class CrnNoise {
  public:
    static constexpr std::size_t block_size = 8192;

    CrnNoise(int I, std::size_t n_samples, std::uint64_t seed, unsigned workers = 1)
        : I_(I), n_(n_samples), seed_(seed), data_(n_samples * static_cast<std::size_t>(I)) {
        if (I < 2) throw Error("posterior_engine", "need I >= 2 signals");
        if (n_samples == 0) throw Error("posterior_engine", "n_samples must be positive");
        parallel_blocks(block_count(), workers, [this](std::size_t b) {
            NormalStream rng(substream_seed(seed_, b));
            const auto [lo, hi] = block_range(b);
            rng.fill(data_.data() + lo * I_, (hi - lo) * I_);
        });
    }

    int signal_count() const { return I_; }
    std::size_t size() const { return n_; }
    std::uint64_t seed() const { return seed_; }
    std::size_t block_count() const { return (n_ + block_size - 1) / block_size; }
    std::pair<std::size_t, std::size_t> block_range(std::size_t b) const {
        return {b * block_size, std::min(n_, (b + 1) * block_size)};
    }
    Eigen::Map<const Vector> draw(std::size_t k) const { return {data_.data() + k * I_, I_}; }

  private:
    int I_;
    std::size_t n_;
    std::uint64_t seed_;
    std::vector<double> data_;
};

struct MomentEstimates {
    double alpha_eff = 0.0;
    int I = 0;
    int true_index = 0;
    Vector m1;          // E[q_j | s_true]
    Vector m1_std_err;  // per-entry standard errors
    Matrix cbar;        // E[diag(q) - q q^T | s_true]
    double qcq_diag = 0.0;  // (Q cbar Q)_{true,true}
    std::size_t n_samples = 0;
    std::uint64_t seed = 0;
    double std_err_m1 = 0.0;   // standard error of m1[true]
    double std_err_phi = 0.0;  // standard error of the per-sample Phi summand
};

/// Monte Carlo posterior moments at alpha_eff over a fixed noise stream.
inline MomentEstimates posterior_moments(double alpha_eff, int true_index, const CrnNoise& noise,
                                         unsigned workers = 1) {
    const int I = noise.signal_count();
    if (!(alpha_eff >= 0.0)) throw Error("posterior_engine", "alpha_eff must be nonnegative");
    if (true_index < 0 || true_index >= I) throw Error("posterior_engine", "true_index out of range");

    struct Block {
        Vector q_sum, q_sq;
        Matrix c_sum;
        ScalarStats phi;
    };
    std::vector<Block> blocks(noise.block_count());
    const double a2 = alpha_eff * alpha_eff;

    parallel_blocks(blocks.size(), workers, [&](std::size_t b) {
        Block& acc = blocks[b];
        acc.q_sum = Vector::Zero(I);
        acc.q_sq = Vector::Zero(I);
        acc.c_sum = Matrix::Zero(I, I);
        Vector logits(I), q(I);
        const auto [lo, hi] = noise.block_range(b);
        for (std::size_t k = lo; k < hi; ++k) {
            const auto xi = noise.draw(k);
            logits = alpha_eff * (xi.array() - xi.mean()).matrix();
            logits[true_index] += a2;
            softmax(logits, q);
            acc.q_sum += q;
            acc.q_sq += q.cwiseProduct(q);
            acc.c_sum.diagonal() += q;
            acc.c_sum.noalias() -= q * q.transpose();
            const double qt = q[true_index];
            acc.phi.add(1.0 - qt - a2 * (qt - qt * qt));
        }
    });

    std::vector<CompensatedSum> qs(I), qq(I), cs(static_cast<std::size_t>(I) * I);
    ScalarStats phi;
    for (const auto& blk : blocks) {
        for (int i = 0; i < I; ++i) {
            qs[i].add(blk.q_sum[i]);
            qq[i].add(blk.q_sq[i]);
            for (int j = 0; j < I; ++j) cs[static_cast<std::size_t>(i) * I + j].add(blk.c_sum(i, j));
        }
        phi.merge(blk.phi);
    }

    const double n = static_cast<double>(noise.size());
    MomentEstimates m;
    m.alpha_eff = alpha_eff;
    m.I = I;
    m.true_index = true_index;
    m.n_samples = noise.size();
    m.seed = noise.seed();
    m.m1.resize(I);
    m.m1_std_err.resize(I);
    m.cbar.resize(I, I);
    for (int i = 0; i < I; ++i) {
        m.m1[i] = qs[i].value() / n;
        const double var = noise.size() > 1 ? std::max(0.0, (qq[i].value() - n * m.m1[i] * m.m1[i]) / (n - 1.0)) : 0.0;
        m.m1_std_err[i] = std::sqrt(var / n);
        for (int j = 0; j < I; ++j) m.cbar(i, j) = cs[static_cast<std::size_t>(i) * I + j].value() / n;
    }
    m.cbar = 0.5 * (m.cbar + m.cbar.transpose());
    Matrix Q = Matrix::Constant(I, I, -1.0 / I);
    Q.diagonal().array() += 1.0;
    m.qcq_diag = (Q * m.cbar * Q)(true_index, true_index);
    m.std_err_m1 = m.m1_std_err[true_index];
    m.std_err_phi = phi.std_err();
    return m;
}

inline MomentEstimates posterior_moments(double alpha_eff, int I, int true_index, std::size_t n_samples,
                                         std::uint64_t seed, unsigned workers = 1) {
    if (n_samples == 0) throw Error("posterior_engine", "n_samples must be positive");
    const CrnNoise noise(I, n_samples, seed, workers);
    return posterior_moments(alpha_eff, true_index, noise, workers);
}

struct BinaryMoments {
    double phi1 = 0.5;            // E[e^Z/(e^Z+1)]
    double phi2 = 0.25;           // E[e^Z/(e^Z+1)^2]
    double one_minus_phi1 = 0.5;  // evaluated directly to avoid cancellation
};

/// Binary-signal moments with Z ~ N(a^2, 2a^2), by Gauss-Hermite quadrature
/// in Z: Z = a^2 + 2 a t against the weight exp(-t^2).
inline BinaryMoments binary_moments_quadrature(double alpha, const quadrature::Rule& rule) {
    BinaryMoments out;
    if (alpha == 0.0) return out;
    const double inv_sqrt_pi = 1.0 / std::sqrt(std::numbers::pi);
    CompensatedSum p1, p2, p1c;
    for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
        const double z = alpha * alpha + 2.0 * alpha * rule.nodes[k];
        const double up = 1.0 / (1.0 + std::exp(-z));  // e^Z/(e^Z+1)
        const double dn = 1.0 / (1.0 + std::exp(z));   // 1/(e^Z+1)
        p1.add(rule.weights[k] * up);
        p1c.add(rule.weights[k] * dn);
        p2.add(rule.weights[k] * up * dn);
    }
    out.phi1 = p1.value() * inv_sqrt_pi;
    out.one_minus_phi1 = p1c.value() * inv_sqrt_pi;
    out.phi2 = p2.value() * inv_sqrt_pi;
    return out;
}

inline BinaryMoments binary_moments_quadrature(double alpha, int n_nodes) {
    if (n_nodes < 64) throw Error("posterior_engine", "binary quadrature needs at least 64 nodes");
    return binary_moments_quadrature(alpha, quadrature::gauss_hermite(n_nodes));
}

/// Binary Phi from the quadrature oracle: 1 - phi1 - a^2 phi2.
inline double binary_phi_quadrature(double alpha, const quadrature::Rule& rule) {
    const auto m = binary_moments_quadrature(alpha, rule);
    return m.one_minus_phi1 - alpha * alpha * m.phi2;
}

}  // namespace infkyle
