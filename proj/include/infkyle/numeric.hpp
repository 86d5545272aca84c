#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <thread>
#include <vector>

#include <Eigen/Dense>

namespace infkyle {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Neumaier-compensated accumulator.
class CompensatedSum {
  public:
    void add(double x) {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

  private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

/// Running first and second moments of a scalar estimator.
struct ScalarStats {
    CompensatedSum sum;
    CompensatedSum sum_sq;
    std::size_t n = 0;

    void add(double x) {
        sum.add(x);
        sum_sq.add(x * x);
        ++n;
    }
    void merge(const ScalarStats& o) {
        sum.add(o.sum.value());
        sum_sq.add(o.sum_sq.value());
        n += o.n;
    }
    double mean() const { return n ? sum.value() / static_cast<double>(n) : 0.0; }
    double variance() const {
        if (n < 2) return 0.0;
        const double m = mean();
        const double v = (sum_sq.value() - static_cast<double>(n) * m * m) / static_cast<double>(n - 1);
        return std::max(v, 0.0);
    }
    double std_err() const { return n ? std::sqrt(variance() / static_cast<double>(n)) : 0.0; }
};

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// Seed of the independent substream `stream` under `master`.
inline std::uint64_t substream_seed(std::uint64_t master, std::uint64_t stream) {
    return splitmix64(splitmix64(master) ^ splitmix64(stream + 0x632BE59BD9B4E019ull));
}

/// Standard normal generator bound to one substream.
class NormalStream {
  public:
    explicit NormalStream(std::uint64_t seed) : engine_(seed) {}
    double operator()() { return dist_(engine_); }
    void fill(double* out, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) out[i] = dist_(engine_);
    }

  private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> dist_{0.0, 1.0};
};

/// Runs `fn(block)` for every block in [0, n_blocks) on up to `workers`
/// threads. Callers write per-block results into preallocated slots and merge
/// them in block order, so results do not depend on the worker count.
inline void parallel_blocks(std::size_t n_blocks, unsigned workers,
                            const std::function<void(std::size_t)>& fn) {
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, n_blocks));
    if (workers <= 1) {
        for (std::size_t b = 0; b < n_blocks; ++b) fn(b);
        return;
    }
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t b = w; b < n_blocks; b += workers) fn(b);
        });
    }
}

/// Softmax with max-subtraction; writes into `out`.
inline void softmax(const Vector& logits, Vector& out) {
    const double m = logits.maxCoeff();
    out = (logits.array() - m).exp();
    out /= out.sum();
}

}  // namespace infkyle
