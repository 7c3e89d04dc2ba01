#pragma once

#include <functional>
#include <span>
#include <vector>

namespace memnet {

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [-1, 1].
QuadratureRule gauss_legendre(int n);

/// n-point Gauss-Hermite rule for the standard normal density (weights sum to 1),
/// from the Golub-Welsch eigenproblem.
QuadratureRule gauss_hermite(int n);

struct Integral {
    double value = 0.0;
    int panels = 0;
    bool converged = false;
};

using ScalarFunction = std::function<double(double)>;

/// Composite Gauss-Legendre (order 16) over [a, b], split at `breakpoints`,
/// doubling the panel count of every segment until successive estimates agree
/// to rel_tol (or abs_tol).
Integral integrate(const ScalarFunction& f, double a, double b,
                   std::span<const double> breakpoints = {}, double rel_tol = 1e-10,
                   double abs_tol = 0.0, int max_panels = 1 << 14);

/// Roots of f in (a, b) located by sign changes on a uniform grid of `samples`
/// cells and refined by bisection. Roots of even multiplicity are missed.
std::vector<double> sign_changes(const ScalarFunction& f, double a, double b, int samples = 2048);

/// integral of |f| over [a, b], splitting at the sign changes of f so every
/// piece is smooth.
Integral integrate_abs(const ScalarFunction& f, double a, double b,
                       std::span<const double> breakpoints = {}, double rel_tol = 1e-10,
                       int samples = 2048);

}  // namespace memnet
