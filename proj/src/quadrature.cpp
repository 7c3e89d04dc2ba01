#include "memnet/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <Eigen/Dense>

#include "memnet/error.hpp"

namespace memnet {

QuadratureRule gauss_legendre(int n) {
    if (n < 1) throw ParameterError("gauss_legendre: n must be >= 1");
    QuadratureRule rule;
    rule.nodes.resize(static_cast<std::size_t>(n));
    rule.weights.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0;
            double p1 = x;
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
        // Recompute the derivative at the converged node.
        double p0 = 1.0;
        double p1 = x;
        for (int k = 2; k <= n; ++k) {
            const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        dp = n == 1 ? 1.0 : n * (x * p1 - p0) / (x * x - 1.0);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        const auto lo = static_cast<std::size_t>(i);
        const auto hi = static_cast<std::size_t>(n - 1 - i);
        rule.nodes[lo] = -x;
        rule.nodes[hi] = x;
        rule.weights[lo] = w;
        rule.weights[hi] = w;
    }
    if (n == 1) {
        rule.nodes[0] = 0.0;
        rule.weights[0] = 2.0;
    }
    return rule;
}

QuadratureRule gauss_hermite(int n) {
    if (n < 1) throw ParameterError("gauss_hermite: n must be >= 1");
    // Jacobi matrix of the monic probabilists' Hermite recursion.
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd sub(std::max(n - 1, 1));
    for (int k = 1; k < n; ++k) sub(k - 1) = std::sqrt(static_cast<double>(k));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;
    eig.computeFromTridiagonal(diag, sub.head(n - 1), Eigen::ComputeEigenvectors);
    QuadratureRule rule;
    for (int i = 0; i < n; ++i) {
        rule.nodes.push_back(eig.eigenvalues()(i));
        const double v = eig.eigenvectors()(0, i);
        rule.weights.push_back(v * v);
    }
    return rule;
}

namespace {

const QuadratureRule& panel_rule() {
    static const QuadratureRule rule = gauss_legendre(16);
    return rule;
}

double composite(const ScalarFunction& f, double a, double b, int panels) {
    const auto& rule = panel_rule();
    const double h = (b - a) / panels;
    double total = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double mid = a + (p + 0.5) * h;
        double s = 0.0;
        for (std::size_t q = 0; q < rule.nodes.size(); ++q)
            s += rule.weights[q] * f(mid + 0.5 * h * rule.nodes[q]);
        total += 0.5 * h * s;
    }
    return total;
}

std::vector<double> segment_edges(double a, double b, std::span<const double> breakpoints) {
    std::vector<double> edges{a};
    for (double x : breakpoints)
        if (x > a && x < b) edges.push_back(x);
    edges.push_back(b);
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    return edges;
}

}  // namespace

Integral integrate(const ScalarFunction& f, double a, double b, std::span<const double> breakpoints,
                   double rel_tol, double abs_tol, int max_panels) {
    if (!(b >= a)) throw ParameterError("integrate: need a <= b");
    Integral result;
    result.converged = true;
    const auto edges = segment_edges(a, b, breakpoints);
    for (std::size_t s = 0; s + 1 < edges.size(); ++s) {
        const double lo = edges[s];
        const double hi = edges[s + 1];
        if (hi <= lo) continue;
        int panels = 1;
        double previous = composite(f, lo, hi, panels);
        bool done = false;
        while (!done) {
            panels *= 2;
            const double current = composite(f, lo, hi, panels);
            const double change = std::abs(current - previous);
            previous = current;
            if (change <= std::max(rel_tol * std::abs(current), abs_tol)) done = true;
            else if (panels >= max_panels) {
                result.converged = false;
                done = true;
            }
        }
        result.value += previous;
        result.panels += panels;
    }
    return result;
}

std::vector<double> sign_changes(const ScalarFunction& f, double a, double b, int samples) {
    std::vector<double> roots;
    if (!(b > a) || samples < 1) return roots;
    const double h = (b - a) / samples;
    double x0 = a;
    double f0 = f(x0);
    for (int k = 1; k <= samples; ++k) {
        const double x1 = k == samples ? b : a + k * h;
        const double f1 = f(x1);
        if (f0 == 0.0 && k > 1) roots.push_back(x0);
        else if ((f0 < 0.0 && f1 > 0.0) || (f0 > 0.0 && f1 < 0.0)) {
            double lo = x0;
            double hi = x1;
            double flo = f0;
            for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(lo)); ++it) {
                const double mid = 0.5 * (lo + hi);
                const double fm = f(mid);
                if ((fm < 0.0) == (flo < 0.0) && fm != 0.0) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            roots.push_back(0.5 * (lo + hi));
        }
        x0 = x1;
        f0 = f1;
    }
    return roots;
}

Integral integrate_abs(const ScalarFunction& f, double a, double b,
                       std::span<const double> breakpoints, double rel_tol, int samples) {
    std::vector<double> cuts(breakpoints.begin(), breakpoints.end());
    const auto edges = segment_edges(a, b, breakpoints);
    for (std::size_t s = 0; s + 1 < edges.size(); ++s) {
        const int cells = std::max(16, static_cast<int>(samples * (edges[s + 1] - edges[s]) / (b - a)));
        for (double r : sign_changes(f, edges[s], edges[s + 1], cells)) cuts.push_back(r);
    }
    return integrate([&f](double x) { return std::abs(f(x)); }, a, b, cuts, rel_tol);
}

}  // namespace memnet
