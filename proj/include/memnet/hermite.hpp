#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include "memnet/error.hpp"
#include "memnet/quadrature.hpp"

namespace memnet {

// Hermite polynomials are normalized project-wide as H_m = He_m / sqrt(m!)
// (probabilists' polynomials, orthonormal under the standard Gaussian), so
// H'_m = sqrt(m) H_{m-1} and E[H_m(X) H_k(Y)] = delta_{mk} rho^m.

inline constexpr int kMaxHermiteDegree = 40;

/// He_40 has coefficients near 3e23, beyond 64 bits.
using HermiteInt = __int128;

/// Exact monomial coefficients of He_0..He_max as integers; the normalizing
/// 1/sqrt(m!) is kept separate and applied only when converting to double.
class HermiteBasis {
public:
    explicit HermiteBasis(int max_degree);

    int max_degree() const { return static_cast<int>(integer_.size()) - 1; }

    /// Coefficients of He_m, index = power of x.
    const std::vector<HermiteInt>& integer_coefficients(int m) const;

    /// 1 / sqrt(m!).
    double normalization(int m) const;

    /// Monomial coefficients of H_m as doubles.
    std::vector<double> coefficients(int m) const;

    /// H_m(z) by Horner evaluation of the monomial form.
    template <typename T>
    T eval_monomial(int m, T z) const {
        const auto& c = integer_coefficients(m);
        T acc = T(0);
        for (auto k = c.size(); k-- > 0;) acc = acc * z + T(static_cast<double>(c[k]));
        return acc * T(normalization(m));
    }

private:
    std::vector<std::vector<HermiteInt>> integer_;
};

/// Shared basis up to kMaxHermiteDegree.
const HermiteBasis& hermite_basis();

/// H_0(z), ..., H_m(z) by the normalized three-term recursion
/// H_k = (z H_{k-1} - sqrt(k-1) H_{k-2}) / sqrt(k).
template <typename T>
void hermite_values(int m, T z, std::span<T> out) {
    if (m < 0) throw ParameterError("hermite: degree must be >= 0");
    out[0] = T(1);
    if (m == 0) return;
    out[1] = z;
    for (int k = 2; k <= m; ++k)
        out[k] = (z * out[k - 1] - T(std::sqrt(k - 1.0)) * out[k - 2]) / T(std::sqrt(double(k)));
}

/// H_m(z) for real or complex z.
template <typename T>
T hermite_eval(int m, T z) {
    if (m < 0) throw ParameterError("hermite: degree must be >= 0");
    if (m == 0) return T(1);
    T prev = T(1);
    T cur = z;
    for (int k = 2; k <= m; ++k) {
        T next = (z * cur - T(std::sqrt(k - 1.0)) * prev) / T(std::sqrt(double(k)));
        prev = cur;
        cur = next;
    }
    return cur;
}

struct MonteCarloEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t samples = 0;

    bool within(double target, double sigmas = 3.0) const {
        return std::abs(mean - target) <= sigmas * std_error;
    }
};

/// Monte Carlo estimate of E[H_m(X) H_k(Y)] for standard normals with correlation rho.
MonteCarloEstimate orthogonality_check(int m, int k, double rho, std::size_t samples,
                                       std::uint64_t seed);

/// Hermite coefficients a_l = E[psi'(X) H_l(X)] of an activation derivative.
struct HermiteExpansion {
    std::vector<double> coeffs;
    int truncation_degree = 0;
    double energy = 0.0;     ///< E[psi'(X)^2]
    double tail_mass = 0.0;  ///< energy - sum_{l <= L} a_l^2 (Parseval remainder), clamped at 0
    int nodes = 0;           ///< quadrature nodes of the accepted estimate
};

/// Gauss-Hermite quadrature doubled until every a_l moves by < 1e-8. If
/// `breakpoints` lists points where psi' is discontinuous, a composite
/// Gauss-Legendre rule against the Gaussian density, split at those points,
/// is used instead (Gauss-Hermite converges only algebraically there).
HermiteExpansion expand_activation_derivative(const ScalarFunction& psi_prime, int truncation,
                                              std::span<const double> breakpoints = {});

}  // namespace memnet
