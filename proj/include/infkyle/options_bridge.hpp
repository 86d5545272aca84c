#pragma once

// Breeden-Litzenberger translation of a state-contingent demand W(x) into a
// bond, the underlying, and signed put/call strike densities, plus sign
// signatures used to read equilibrium demand as option strategies.

#include <array>
#include <cmath>
#include <string>

#include "infkyle/error.hpp"
#include "infkyle/market_model.hpp"
#include "infkyle/numeric.hpp"

namespace infkyle {

struct OptionStrip {
    double k0 = 0.0;
    int k0_index = 0;
    bool snapped = false;  // requested k0 was moved to the nearest node
    double bond = 0.0;        // W(K0) - K0 W'(K0)
    double underlying = 0.0;  // W'(K0)
    Vector put_density;   // W''(K) on nodes 0..k0_index
    Vector call_density;  // W''(K) on nodes k0_index..n-1
    int n = 0;
};

/// First derivative: central differences inside, second-order one-sided ends.
inline Vector grid_first_derivative(const Vector& f, double h) {
    const Eigen::Index n = f.size();
    Vector d(n);
    for (Eigen::Index j = 1; j + 1 < n; ++j) d[j] = (f[j + 1] - f[j - 1]) / (2.0 * h);
    d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
    d[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h);
    return d;
}

/// Second derivative: central differences inside, second-order one-sided ends.
inline Vector grid_second_derivative(const Vector& f, double h) {
    const Eigen::Index n = f.size();
    Vector d(n);
    const double h2 = h * h;
    for (Eigen::Index j = 1; j + 1 < n; ++j) d[j] = (f[j + 1] - 2.0 * f[j] + f[j - 1]) / h2;
    d[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / h2;
    d[n - 1] = (2.0 * f[n - 1] - 5.0 * f[n - 2] + 4.0 * f[n - 3] - f[n - 4]) / h2;
    return d;
}

inline OptionStrip bl_decompose(const Vector& W, double k0, const StateGrid& grid) {
    if (grid.size() < 5) throw Error("options_bridge", "grid too short for the difference stencils (n < 5)");
    if (W.size() != grid.size()) throw Error("options_bridge", "demand does not match the grid");
    if (!(k0 > grid.x_min() && k0 < grid.x_max())) throw Error("options_bridge", "k0 must lie strictly inside the grid");
    OptionStrip s;
    s.n = grid.size();
    s.k0_index = grid.nearest_index(k0);
    if (s.k0_index == 0 || s.k0_index == grid.size() - 1)
        throw Error("options_bridge", "k0 snaps to a boundary node");
    s.snapped = std::abs(grid.node(s.k0_index) - k0) > 1e-12 * grid.span();
    s.k0 = grid.node(s.k0_index);
    const Vector d1 = grid_first_derivative(W, grid.step());
    const Vector d2 = grid_second_derivative(W, grid.step());
    s.underlying = d1[s.k0_index];
    s.bond = W[s.k0_index] - s.k0 * s.underlying;
    s.put_density = d2.head(s.k0_index + 1);
    s.call_density = d2.tail(grid.size() - s.k0_index);
    return s;
}

/// W(x) = bond + underlying x + int_{x_min}^{K0} W''(K)(K - x)+ dK
///                            + int_{K0}^{x_max} W''(K)(x - K)+ dK,
/// each integral by the trapezoid rule on its own node range.
inline Vector bl_reconstruct(const OptionStrip& s, const StateGrid& grid) {
    if (s.n != grid.size() || s.put_density.size() != s.k0_index + 1 ||
        s.call_density.size() != grid.size() - s.k0_index || grid.node(s.k0_index) != s.k0)
        throw Error("options_bridge", "strip does not match the grid");
    const int n = grid.size(), k = s.k0_index;
    const double h = grid.step();
    Vector W(n);
    for (int i = 0; i < n; ++i) {
        const double x = grid.node(i);
        CompensatedSum acc;
        acc.add(s.bond + s.underlying * x);
        for (int j = 0; j <= k; ++j) {
            const double pay = std::max(grid.node(j) - x, 0.0);
            if (pay == 0.0) continue;
            acc.add((j == 0 || j == k ? 0.5 * h : h) * s.put_density[j] * pay);
        }
        for (int j = k; j < n; ++j) {
            const double pay = std::max(x - grid.node(j), 0.0);
            if (pay == 0.0) continue;
            acc.add((j == k || j == n - 1 ? 0.5 * h : h) * s.call_density[j - k] * pay);
        }
        W[i] = acc.value();
    }
    return W;
}

struct DemandSignature {
    std::array<double, 5> probes{};  // mu - 2 sbar, mu - sbar, mu, mu + sbar, mu + 2 sbar
    std::array<double, 5> values{};
    std::array<int, 5> signs{};
    std::string label;
};

namespace detail {
inline double interpolate(const Vector& f, double x, const StateGrid& grid) {
    const double t = (x - grid.x_min()) / grid.step();
    const int j = std::clamp(static_cast<int>(std::floor(t)), 0, grid.size() - 2);
    const double u = t - j;
    return (1.0 - u) * f[j] + u * f[j + 1];
}
}  // namespace detail

/// Reads the sign pattern of W at five probes. Tails decide direction or
/// volatility; the inner probes separate a skew (ratio-spread) shape from a
/// plain vertical spread.
inline DemandSignature demand_signature(const Vector& W, double mu, double sbar, const StateGrid& grid) {
    if (W.size() != grid.size()) throw Error("options_bridge", "demand does not match the grid");
    if (!(sbar > 0.0)) throw Error("options_bridge", "probe spacing must be positive");
    if (mu - 2.0 * sbar < grid.x_min() || mu + 2.0 * sbar > grid.x_max())
        throw Error("options_bridge", "signature probes fall outside the grid");
    DemandSignature sig;
    const double wmax = W.cwiseAbs().maxCoeff();
    for (int k = 0; k < 5; ++k) {
        sig.probes[k] = mu + (k - 2) * sbar;
        sig.values[k] = detail::interpolate(W, sig.probes[k], grid);
        const double v = sig.values[k];
        sig.signs[k] = (std::abs(v) < 1e-9 * wmax || wmax == 0.0) ? 0 : (v > 0.0 ? 1 : -1);
    }
    const auto [l2, l1, c, r1, r2] = sig.signs;
    if (l2 == 0 && l1 == 0 && c == 0 && r1 == 0 && r2 == 0)
        sig.label = "flat";
    else if (l2 < 0 && r2 > 0)
        sig.label = (l1 > 0 && r1 < 0) ? "right-skew" : "bullish";
    else if (l2 > 0 && r2 < 0)
        sig.label = (l1 < 0 && r1 > 0) ? "left-skew" : "bearish";
    else if (l2 > 0 && r2 > 0 && c < 0)
        sig.label = "long-vol";
    else if (l2 < 0 && r2 < 0 && c > 0)
        sig.label = "short-vol";
    else
        sig.label = "unclassified";
    return sig;
}

}  // namespace infkyle
