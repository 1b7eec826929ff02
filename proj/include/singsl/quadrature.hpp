#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

#include "singsl/scaled.hpp"

namespace singsl {

/// Gauss-Legendre rule on [-1, 1].
struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

inline GaussRule gauss_legendre(int n) {
    if (n < 1) throw std::invalid_argument("gauss_legendre: n must be positive");
    GaussRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if (n == 1) p0 = 1.0;
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        rule.nodes[i] = -x;
        rule.nodes[n - 1 - i] = x;
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.weights[i] = w;
        rule.weights[n - 1 - i] = w;
    }
    if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
    return rule;
}

/// Quadrature points and positive weights on a set of panels.
struct QuadratureGrid {
    std::vector<double> nodes;
    std::vector<double> weights;

    [[nodiscard]] std::size_t size() const { return nodes.size(); }
};

/// Composite Gauss-Legendre rule over consecutive breakpoints.
inline QuadratureGrid composite_gauss(const std::vector<double>& breaks, int order) {
    const GaussRule rule = gauss_legendre(order);
    QuadratureGrid grid;
    for (std::size_t p = 0; p + 1 < breaks.size(); ++p) {
        const double a = breaks[p], b = breaks[p + 1];
        if (!(b > a)) continue;
        const double c = 0.5 * (a + b), h = 0.5 * (b - a);
        for (int i = 0; i < order; ++i) {
            grid.nodes.push_back(c + h * rule.nodes[i]);
            grid.weights.push_back(h * rule.weights[i]);
        }
    }
    return grid;
}

/// Breakpoints on [a, b] clustered algebraically at both ends:
/// s -> s^p / (s^p + (1-s)^p) on a uniform s-grid.
inline std::vector<double> graded_breaks(double a, double b, int panels, double grading = 2.0) {
    std::vector<double> br(panels + 1);
    for (int k = 0; k <= panels; ++k) {
        const double s = static_cast<double>(k) / panels;
        const double sp = std::pow(s, grading), cp = std::pow(1.0 - s, grading);
        br[k] = a + (b - a) * sp / (sp + cp);
    }
    return br;
}

/// Nodes on [-1, 1] avoiding x = 0, graded toward 0 and +-1, symmetric about 0.
inline QuadratureGrid symmetric_graded_grid(int panels_per_side, int order, double grading = 2.0) {
    const auto right = composite_gauss(graded_breaks(0.0, 1.0, panels_per_side, grading), order);
    QuadratureGrid grid;
    const std::size_t n = right.size();
    grid.nodes.resize(2 * n);
    grid.weights.resize(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
        grid.nodes[n - 1 - i] = -right.nodes[i];
        grid.weights[n - 1 - i] = right.weights[i];
        grid.nodes[n + i] = right.nodes[i];
        grid.weights[n + i] = right.weights[i];
    }
    return grid;
}

/// Complex samples on a quadrature grid; norm() is the discrete L^2(-1,1) norm.
struct GridFunction {
    std::vector<double> x;
    std::vector<double> w;
    std::vector<cplx> values;

    GridFunction() = default;
    explicit GridFunction(const QuadratureGrid& grid)
        : x(grid.nodes), w(grid.weights), values(grid.nodes.size(), cplx{0.0, 0.0}) {}

    template <class F>
    static GridFunction sample(const QuadratureGrid& grid, F&& fn) {
        GridFunction g(grid);
        for (std::size_t i = 0; i < g.x.size(); ++i) g.values[i] = fn(g.x[i]);
        return g;
    }

    [[nodiscard]] std::size_t size() const { return x.size(); }

    [[nodiscard]] double norm() const {
        double s = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) s += w[i] * std::norm(values[i]);
        return std::sqrt(s);
    }
};

/// Integral of fn over [a, b] with a fixed composite Gauss rule.
template <class F>
auto integrate(F&& fn, double a, double b, int panels = 8, int order = 16) {
    const auto grid = composite_gauss(graded_breaks(a, b, panels, 1.0), order);
    using R = decltype(fn(a));
    R s{};
    for (std::size_t i = 0; i < grid.size(); ++i) s += grid.weights[i] * fn(grid.nodes[i]);
    return s;
}

}  // namespace singsl
