#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Eigenvalues>

#include "infkyle/error.hpp"
#include "infkyle/numeric.hpp"

namespace infkyle::quadrature {

struct Rule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

namespace detail {

// Eigenvalues of the symmetric Jacobi matrix with zero diagonal and the given
// off-diagonal; used as starting points for Newton polishing.
inline std::vector<double> jacobi_eigenvalues(const Vector& off) {
    const Eigen::Index n = off.size() + 1;
    Vector diag = Vector::Zero(n);
    Eigen::SelfAdjointEigenSolver<Matrix> es;
    es.computeFromTridiagonal(diag, off, Eigen::EigenvaluesOnly);
    return {es.eigenvalues().data(), es.eigenvalues().data() + n};
}

}  // namespace detail

/// Gauss-Hermite rule for int exp(-t^2) f(t) dt.
inline Rule gauss_hermite(int n) {
    if (n < 1) throw Error("quadrature", "Gauss-Hermite needs n >= 1");
    Vector off(n - 1);
    for (int k = 1; k < n; ++k) off[k - 1] = std::sqrt(k / 2.0);
    auto roots = detail::jacobi_eigenvalues(off);

    Rule r;
    r.nodes.resize(n);
    r.weights.resize(n);
    const double p0 = std::pow(std::numbers::pi, -0.25);
    for (int i = 0; i < n; ++i) {
        double x = roots[i];
        double pp = 0.0;
        for (int it = 0; it < 20; ++it) {
            // Orthonormal Hermite recurrence.
            double p1 = p0, p2 = 0.0;
            for (int k = 0; k < n; ++k) {
                const double p3 = p2;
                p2 = p1;
                p1 = x * std::sqrt(2.0 / (k + 1)) * p2 - std::sqrt(static_cast<double>(k) / (k + 1)) * p3;
            }
            pp = std::sqrt(2.0 * n) * p2;
            const double dx = p1 / pp;
            x -= dx;
            if (std::abs(dx) <= 1e-15 * std::max(1.0, std::abs(x))) break;
        }
        r.nodes[i] = x;
        r.weights[i] = 2.0 / (pp * pp);
    }
    return r;
}

/// Gauss-Legendre rule on [-1, 1].
inline Rule gauss_legendre(int n) {
    if (n < 1) throw Error("quadrature", "Gauss-Legendre needs n >= 1");
    Vector off(n - 1);
    for (int k = 1; k < n; ++k) off[k - 1] = k / std::sqrt(4.0 * k * k - 1.0);
    auto roots = detail::jacobi_eigenvalues(off);

    Rule r;
    r.nodes.resize(n);
    r.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        double x = roots[i];
        double dp = 0.0;
        for (int it = 0; it < 20; ++it) {
            double p1 = 1.0, p2 = 0.0;
            for (int k = 0; k < n; ++k) {
                const double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * k + 1.0) * x * p2 - k * p3) / (k + 1.0);
            }
            dp = n * (x * p1 - p2) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) <= 1e-16) break;
        }
        r.nodes[i] = x;
        r.weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    return r;
}

/// Composite Gauss-Legendre on [a, b] with `panels` equal panels.
template <class F>
double gauss_legendre_panels(F&& f, double a, double b, int panels, int order = 8) {
    const Rule r = gauss_legendre(order);
    const double width = (b - a) / panels;
    CompensatedSum s;
    for (int p = 0; p < panels; ++p) {
        const double lo = a + p * width;
        const double mid = lo + 0.5 * width;
        for (int k = 0; k < order; ++k) s.add(0.5 * width * r.weights[k] * f(mid + 0.5 * width * r.nodes[k]));
    }
    return s.value();
}

}  // namespace infkyle::quadrature
