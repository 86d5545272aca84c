#pragma once

// Economic primitives: the state grid, noise-trading intensity, and the
// signal-contingent payoff density families, together with the
// noise-weighted inner product <f,g>_sigma = int f g / sigma^2 dx.

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "infkyle/csv.hpp"
#include "infkyle/error.hpp"
#include "infkyle/numeric.hpp"

namespace infkyle {

/// Uniform grid on [x_min, x_max] with composite trapezoid weights.
class StateGrid {
  public:
    StateGrid(double x_min, double x_max, int n) : x_min_(x_min), x_max_(x_max), n_(n) {
        if (!std::isfinite(x_min) || !std::isfinite(x_max))
            throw Error("market_model", "grid bounds must be finite");
        if (!(x_min < x_max)) throw Error("market_model", "grid requires x_min < x_max");
        if (n < 3) throw Error("market_model", "grid requires n >= 3, got " + std::to_string(n));
        h_ = (x_max - x_min) / (n - 1);
        nodes_.resize(n);
        weights_.resize(n);
        for (int j = 0; j < n; ++j) {
            nodes_[j] = (j == n - 1) ? x_max : x_min + j * h_;
            weights_[j] = h_;
        }
        weights_[0] = weights_[n - 1] = 0.5 * h_;
    }

    double x_min() const { return x_min_; }
    double x_max() const { return x_max_; }
    double span() const { return x_max_ - x_min_; }
    int size() const { return n_; }
    double step() const { return h_; }
    const Vector& nodes() const { return nodes_; }
    const Vector& weights() const { return weights_; }
    double node(int j) const { return nodes_[j]; }

    /// Index of the node closest to x (clamped to the grid).
    int nearest_index(double x) const {
        const double t = std::round((x - x_min_) / h_);
        return static_cast<int>(std::clamp(t, 0.0, static_cast<double>(n_ - 1)));
    }

    bool same_as(const StateGrid& o) const {
        return n_ == o.n_ && x_min_ == o.x_min_ && x_max_ == o.x_max_;
    }

  private:
    double x_min_;
    double x_max_;
    int n_;
    double h_;
    Vector nodes_;
    Vector weights_;
};

inline StateGrid build_state_grid(double x_min, double x_max, int n) { return StateGrid(x_min, x_max, n); }

/// Noise-trading intensity sigma(x) on the grid nodes; strictly positive.
class NoiseProfile {
  public:
    explicit NoiseProfile(Vector sigma) : sigma_(std::move(sigma)) {
        if (sigma_.size() == 0) throw Error("market_model", "noise profile is empty");
        for (Eigen::Index j = 0; j < sigma_.size(); ++j)
            if (!(sigma_[j] > 0.0) || !std::isfinite(sigma_[j]))
                throw Error("market_model", "noise intensity must be positive and finite at node " +
                                                std::to_string(j));
        inv_var_ = sigma_.array().square().inverse();
    }

    static NoiseProfile constant(const StateGrid& grid, double sigma) {
        return NoiseProfile(Vector::Constant(grid.size(), sigma));
    }

    const Vector& sigma() const { return sigma_; }
    /// 1 / sigma(x_j)^2
    const Vector& inverse_variance() const { return inv_var_; }
    int size() const { return static_cast<int>(sigma_.size()); }

    NoiseProfile scaled(double gamma) const { return NoiseProfile(sigma_ * gamma); }

  private:
    Vector sigma_;
    Vector inv_var_;
};

enum class FamilyKind { gaussian_mean_shift, gaussian_variance, skew_normal, tabulated };

inline std::string to_string(FamilyKind k) {
    switch (k) {
        case FamilyKind::gaussian_mean_shift: return "gaussian_mean_shift";
        case FamilyKind::gaussian_variance: return "gaussian_variance";
        case FamilyKind::skew_normal: return "skew_normal";
        case FamilyKind::tabulated: return "tabulated";
    }
    return "unknown";
}

inline FamilyKind parse_family_kind(std::string_view s) {
    if (s == "gaussian_mean_shift") return FamilyKind::gaussian_mean_shift;
    if (s == "gaussian_variance") return FamilyKind::gaussian_variance;
    if (s == "skew_normal") return FamilyKind::skew_normal;
    if (s == "tabulated") return FamilyKind::tabulated;
    throw Error("market_model", "unknown family kind '" + std::string(s) + "'");
}

/// Signal-contingent payoff densities eta(x_j, s_i), one row per signal.
struct PayoffFamily {
    std::vector<std::string> labels;
    RowMatrix eta;  // I x n
    FamilyKind kind = FamilyKind::tabulated;

    int signal_count() const { return static_cast<int>(eta.rows()); }
    Vector row(int i) const { return eta.row(i).transpose(); }
};

/// Parameters for the generated families. Which fields are read depends on
/// the kind: mean shift uses `means` and a common `sds`; variance uses a
/// common `means` and per-signal `sds`; skew-normal uses per-signal `shapes`
/// with either explicit `locations`/`scales` or a moment-matched target
/// mean/sd taken from `means`/`sds`.
struct FamilyParams {
    std::vector<double> means;
    std::vector<double> sds;
    std::vector<double> shapes;
    std::vector<double> locations;
    std::vector<double> scales;
};

inline double trapezoid(const Vector& f, const StateGrid& grid) {
    if (f.size() != grid.size()) throw Error("market_model", "grid function length mismatch");
    CompensatedSum s;
    for (int j = 0; j < grid.size(); ++j) s.add(grid.weights()[j] * f[j]);
    return s.value();
}

/// <f,g>_sigma = sum_j w_j f_j g_j / sigma_j^2.
inline double weighted_inner_product(const Vector& f, const Vector& g, const NoiseProfile& noise,
                                     const StateGrid& grid) {
    const int n = grid.size();
    if (f.size() != n || g.size() != n || noise.size() != n)
        throw Error("market_model", "weighted_inner_product: length mismatch");
    const auto& w = grid.weights();
    const auto& iv = noise.inverse_variance();
    // Pairwise-symmetric products keep <f,g> == <g,f> bit for bit.
    CompensatedSum s;
    for (int j = 0; j < n; ++j) s.add(w[j] * (f[j] * g[j]) * iv[j]);
    return s.value();
}

namespace detail {

inline double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }
inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

inline double pick(const std::vector<double>& v, std::size_t i, const char* what) {
    if (v.size() == 1) return v[0];
    if (i < v.size()) return v[i];
    throw Error("market_model", std::string("missing parameter ") + what);
}

inline void check_location(double mu, const StateGrid& grid) {
    const double mid = 0.5 * (grid.x_min() + grid.x_max());
    if (!std::isfinite(mu) || std::abs(mu - mid) > grid.span())
        throw Error("market_model", "location " + csv::format(mu) + " is far outside the grid");
}

inline void check_scale(double s) {
    if (!(s > 0.0) || !std::isfinite(s)) throw Error("market_model", "nonpositive variance/scale parameter");
}

// Renormalizes each row to unit trapezoid mass.
inline void normalize_rows(RowMatrix& eta, const StateGrid& grid) {
    for (Eigen::Index i = 0; i < eta.rows(); ++i) {
        Vector r = eta.row(i).transpose();
        const double mass = trapezoid(r, grid);
        if (!(mass > 0.0) || !std::isfinite(mass))
            throw Error("market_model", "density row " + std::to_string(i) + " has no mass on the grid");
        eta.row(i) /= mass;
    }
}

inline std::vector<std::string> default_labels(int I) {
    std::vector<std::string> labels;
    for (int i = 0; i < I; ++i) labels.push_back("s" + std::to_string(i + 1));
    return labels;
}

}  // namespace detail

/// Skew-normal density with location xi, scale omega, shape a.
inline double skew_normal_pdf(double x, double xi, double omega, double a) {
    const double z = (x - xi) / omega;
    return 2.0 / omega * detail::normal_pdf(z) * detail::normal_cdf(a * z);
}

/// Location and scale giving a skew-normal with shape `a` the target mean and sd.
inline std::pair<double, double> skew_normal_moment_match(double a, double mean, double sd) {
    const double delta = a / std::sqrt(1.0 + a * a);
    const double omega = sd / std::sqrt(1.0 - 2.0 * delta * delta / std::numbers::pi);
    const double xi = mean - omega * delta * std::sqrt(2.0 / std::numbers::pi);
    return {xi, omega};
}

inline PayoffFamily make_tabulated_family(std::vector<std::string> labels, RowMatrix eta, const StateGrid& grid) {
    if (eta.cols() != grid.size()) throw Error("market_model", "tabulated family does not match grid size");
    if (eta.rows() < 2) throw Error("market_model", "a payoff family needs at least two signals");
    if (labels.empty()) labels = detail::default_labels(static_cast<int>(eta.rows()));
    if (static_cast<Eigen::Index>(labels.size()) != eta.rows())
        throw Error("market_model", "label count does not match density rows");
    for (Eigen::Index i = 0; i < eta.rows(); ++i)
        for (Eigen::Index j = 0; j < eta.cols(); ++j)
            if (!(eta(i, j) >= 0.0) || !std::isfinite(eta(i, j)))
                throw Error("market_model", "tabulated density is negative or non-finite at row " +
                                                std::to_string(i) + ", node " + std::to_string(j));
    detail::normalize_rows(eta, grid);
    return PayoffFamily{std::move(labels), std::move(eta), FamilyKind::tabulated};
}

inline PayoffFamily make_payoff_family(FamilyKind kind, const FamilyParams& p, const StateGrid& grid) {
    if (kind == FamilyKind::tabulated)
        throw Error("market_model", "tabulated families are built from data, not parameters");

    std::size_t I = 0;
    switch (kind) {
        case FamilyKind::gaussian_mean_shift: I = p.means.size(); break;
        case FamilyKind::gaussian_variance: I = p.sds.size(); break;
        case FamilyKind::skew_normal: I = p.shapes.size(); break;
        default: break;
    }
    if (I < 2) throw Error("market_model", "a payoff family needs at least two signals");

    const int n = grid.size();
    RowMatrix eta(static_cast<Eigen::Index>(I), n);
    for (std::size_t i = 0; i < I; ++i) {
        double loc = 0.0, scale = 1.0, shape = 0.0;
        switch (kind) {
            case FamilyKind::gaussian_mean_shift:
                loc = p.means[i];
                scale = detail::pick(p.sds, i, "sds");
                break;
            case FamilyKind::gaussian_variance:
                loc = detail::pick(p.means, i, "means");
                scale = p.sds[i];
                break;
            case FamilyKind::skew_normal: {
                shape = p.shapes[i];
                if (!p.locations.empty() || !p.scales.empty()) {
                    loc = detail::pick(p.locations, i, "locations");
                    scale = detail::pick(p.scales, i, "scales");
                } else {
                    const double m = p.means.empty() ? 0.0 : detail::pick(p.means, i, "means");
                    const double s = p.sds.empty() ? 1.0 : detail::pick(p.sds, i, "sds");
                    detail::check_scale(s);
                    std::tie(loc, scale) = skew_normal_moment_match(shape, m, s);
                }
                break;
            }
            default: break;
        }
        detail::check_scale(scale);
        detail::check_location(loc, grid);
        for (int j = 0; j < n; ++j) {
            const double x = grid.node(j);
            eta(static_cast<Eigen::Index>(i), j) = kind == FamilyKind::skew_normal
                                                       ? skew_normal_pdf(x, loc, scale, shape)
                                                       : detail::normal_pdf((x - loc) / scale) / scale;
        }
    }
    detail::normalize_rows(eta, grid);
    return PayoffFamily{detail::default_labels(static_cast<int>(I)), std::move(eta), kind};
}

/// I identical compactly supported cosine-squared bumps on disjoint, equally
/// sized cells of the grid. Their Gram matrix is a multiple of the identity.
inline PayoffFamily disjoint_bump_family(int I, const StateGrid& grid) {
    if (I < 2) throw Error("market_model", "a payoff family needs at least two signals");
    const int cell = (grid.size() - 1) / I;
    if (cell < 4) throw Error("market_model", "grid too coarse for " + std::to_string(I) + " disjoint bumps");
    RowMatrix eta = RowMatrix::Zero(I, grid.size());
    for (int i = 0; i < I; ++i) {
        for (int k = 0; k <= cell; ++k) {
            const double c = std::sin(std::numbers::pi * k / cell);
            eta(i, i * cell + k) = c * c;
        }
    }
    return make_tabulated_family({}, std::move(eta), grid);
}

/// Prior-mean payoff density m(x) = (1/I) sum_i eta(x, s_i).
inline Vector prior_mixture(const PayoffFamily& family) {
    return family.eta.colwise().mean().transpose();
}

inline double prior_mean(const PayoffFamily& family, const StateGrid& grid) {
    const Vector m = prior_mixture(family);
    return trapezoid(m.cwiseProduct(grid.nodes()), grid);
}

inline double prior_sd(const PayoffFamily& family, const StateGrid& grid) {
    const Vector m = prior_mixture(family);
    const double mu = trapezoid(m.cwiseProduct(grid.nodes()), grid);
    const Vector d2 = (grid.nodes().array() - mu).square();
    return std::sqrt(trapezoid(m.cwiseProduct(d2), grid));
}

/// Reads a tabulated family from CSV with header `x,eta_s1,...,eta_sI`.
/// The x column must coincide with the grid nodes.
inline PayoffFamily load_tabulated_family(const std::string& path, const StateGrid& grid) {
    const auto t = csv::read(path);
    if (t.header.size() < 3 || t.header[0] != "x")
        throw Error("market_model", "'" + path + "' must have header x,eta_s1,...,eta_sI with I >= 2");
    if (static_cast<int>(t.rows.size()) != grid.size())
        throw Error("market_model", "'" + path + "' has " + std::to_string(t.rows.size()) + " rows, grid has " +
                                        std::to_string(grid.size()));
    const int I = static_cast<int>(t.header.size()) - 1;
    RowMatrix eta(I, grid.size());
    std::vector<std::string> labels;
    for (int i = 0; i < I; ++i) {
        const auto& h = t.header[i + 1];
        labels.push_back(h.rfind("eta_", 0) == 0 ? h.substr(4) : h);
    }
    for (int j = 0; j < grid.size(); ++j) {
        if (std::abs(t.rows[j][0] - grid.node(j)) > 1e-9 * std::max(1.0, grid.span()))
            throw Error("market_model", "'" + path + "' x column does not match grid node " + std::to_string(j));
        for (int i = 0; i < I; ++i) eta(i, j) = t.rows[j][i + 1];
    }
    return make_tabulated_family(std::move(labels), std::move(eta), grid);
}

/// Reads sigma(x) from CSV with header `x,sigma` aligned with the grid.
inline NoiseProfile load_noise_profile(const std::string& path, const StateGrid& grid) {
    const auto t = csv::read(path);
    if (t.header.size() != 2 || t.header[0] != "x" || t.header[1] != "sigma")
        throw Error("market_model", "'" + path + "' must have header x,sigma");
    if (static_cast<int>(t.rows.size()) != grid.size())
        throw Error("market_model", "'" + path + "' row count does not match grid");
    Vector s(grid.size());
    for (int j = 0; j < grid.size(); ++j) {
        if (std::abs(t.rows[j][0] - grid.node(j)) > 1e-9 * std::max(1.0, grid.span()))
            throw Error("market_model", "'" + path + "' x column does not match grid node " + std::to_string(j));
        s[j] = t.rows[j][1];
    }
    return NoiseProfile(std::move(s));
}

}  // namespace infkyle
