#include "memnet/hermite.hpp"

#include <algorithm>
#include <numbers>
#include <random>
#include <stdexcept>

#include "memnet/random.hpp"

namespace memnet {

HermiteBasis::HermiteBasis(int max_degree) {
    if (max_degree < 0 || max_degree > kMaxHermiteDegree)
        throw ParameterError("HermiteBasis: degree must lie in [0, " +
                             std::to_string(kMaxHermiteDegree) + "]");
    integer_.push_back({1});
    if (max_degree >= 1) integer_.push_back({0, 1});
    // He_m = x He_{m-1} - (m-1) He_{m-2}
    for (int m = 2; m <= max_degree; ++m) {
        const auto& a = integer_[static_cast<std::size_t>(m - 1)];
        const auto& b = integer_[static_cast<std::size_t>(m - 2)];
        std::vector<HermiteInt> next(static_cast<std::size_t>(m + 1), 0);
        for (std::size_t k = 0; k < a.size(); ++k) next[k + 1] = a[k];
        for (std::size_t k = 0; k < b.size(); ++k) {
            HermiteInt term;
            if (__builtin_mul_overflow(b[k], static_cast<HermiteInt>(m - 1), &term) ||
                __builtin_sub_overflow(next[k], term, &next[k]))
                throw std::overflow_error("HermiteBasis: coefficient overflow");
        }
        integer_.push_back(std::move(next));
    }
}

const std::vector<HermiteInt>& HermiteBasis::integer_coefficients(int m) const {
    if (m < 0 || m > max_degree())
        throw ParameterError("HermiteBasis: degree " + std::to_string(m) + " out of range");
    return integer_[static_cast<std::size_t>(m)];
}

double HermiteBasis::normalization(int m) const {
    return 1.0 / std::sqrt(std::tgamma(m + 1.0));
}

std::vector<double> HermiteBasis::coefficients(int m) const {
    const auto& c = integer_coefficients(m);
    const double scale = normalization(m);
    std::vector<double> out(c.size());
    for (std::size_t k = 0; k < c.size(); ++k) out[k] = static_cast<double>(c[k]) * scale;
    return out;
}

const HermiteBasis& hermite_basis() {
    static const HermiteBasis basis(kMaxHermiteDegree);
    return basis;
}

MonteCarloEstimate orthogonality_check(int m, int k, double rho, std::size_t samples,
                                       std::uint64_t seed) {
    if (samples == 0) throw ParameterError("orthogonality_check: samples must be > 0");
    if (!(std::abs(rho) <= 1.0)) throw ParameterError("orthogonality_check: |rho| must be <= 1");
    if (m < 0 || k < 0) throw ParameterError("orthogonality_check: degrees must be >= 0");
    Rng rng = make_rng(derive_seed(seed, streams::monte_carlo));
    std::normal_distribution<double> normal;
    const double orth = std::sqrt(std::max(0.0, 1.0 - rho * rho));
    double sum = 0.0;
    double sum_sq = 0.0;
    for (std::size_t s = 0; s < samples; ++s) {
        const double x = normal(rng);
        const double y = rho * x + orth * normal(rng);
        const double v = hermite_eval(m, x) * hermite_eval(k, y);
        sum += v;
        sum_sq += v * v;
    }
    const double n = static_cast<double>(samples);
    MonteCarloEstimate est;
    est.samples = samples;
    est.mean = sum / n;
    const double var = samples > 1 ? std::max(0.0, (sum_sq - n * est.mean * est.mean) / (n - 1.0)) : 0.0;
    est.std_error = std::sqrt(var / n);
    return est;
}

namespace {

struct CoefficientEstimate {
    std::vector<double> coeffs;
    double energy = 0.0;
};

// Accumulates a_l and E[psi'^2] from nodes/weights that integrate against the
// standard Gaussian density.
template <typename NodeVisitor>
CoefficientEstimate accumulate(const ScalarFunction& psi_prime, int truncation, NodeVisitor&& visit) {
    CoefficientEstimate est;
    est.coeffs.assign(static_cast<std::size_t>(truncation + 1), 0.0);
    std::vector<double> h(static_cast<std::size_t>(truncation + 1));
    visit([&](double x, double w) {
        const double value = psi_prime(x);
        if (!std::isfinite(value))
            throw DataError("expand_activation_derivative: non-finite value at node " + std::to_string(x));
        if (w == 0.0 || value == 0.0) return;
        hermite_values<double>(truncation, x, h);
        for (int l = 0; l <= truncation; ++l) est.coeffs[static_cast<std::size_t>(l)] += w * value * h[static_cast<std::size_t>(l)];
        est.energy += w * value * value;
    });
    return est;
}

double max_change(const std::vector<double>& a, const std::vector<double>& b) {
    double out = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) out = std::max(out, std::abs(a[i] - b[i]));
    return out;
}

}  // namespace

HermiteExpansion expand_activation_derivative(const ScalarFunction& psi_prime, int truncation,
                                              std::span<const double> breakpoints) {
    if (truncation < 0) throw ParameterError("expand_activation_derivative: truncation must be >= 0");
    constexpr double kTolerance = 1e-8;
    HermiteExpansion out;
    out.truncation_degree = truncation;

    CoefficientEstimate previous;
    CoefficientEstimate current;
    bool converged = false;

    if (breakpoints.empty()) {
        int nodes = std::max(32, 2 * (truncation + 1));
        previous = accumulate(psi_prime, truncation, [&](auto&& sink) {
            const auto rule = gauss_hermite(nodes);
            for (std::size_t q = 0; q < rule.nodes.size(); ++q) sink(rule.nodes[q], rule.weights[q]);
        });
        for (int round = 0; round < 4 && !converged; ++round) {
            nodes *= 2;
            current = accumulate(psi_prime, truncation, [&](auto&& sink) {
                const auto rule = gauss_hermite(nodes);
                for (std::size_t q = 0; q < rule.nodes.size(); ++q) sink(rule.nodes[q], rule.weights[q]);
            });
            converged = max_change(current.coeffs, previous.coeffs) < kTolerance;
            previous = current;
        }
        out.nodes = nodes;
    } else {
        // The Gaussian-weighted H_l decays past |x| ~ 2 sqrt(l); integrate well beyond that.
        const double radius = 2.0 * std::sqrt(static_cast<double>(truncation) + 1.0) + 12.0;
        std::vector<double> edges{-radius};
        for (double b : breakpoints)
            if (b > -radius && b < radius) edges.push_back(b);
        edges.push_back(radius);
        std::sort(edges.begin(), edges.end());
        const auto gl = gauss_legendre(16);
        const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
        auto composite = [&](int panels) {
            return accumulate(psi_prime, truncation, [&](auto&& sink) {
                for (std::size_t s = 0; s + 1 < edges.size(); ++s) {
                    const double h = (edges[s + 1] - edges[s]) / panels;
                    for (int p = 0; p < panels; ++p) {
                        const double mid = edges[s] + (p + 0.5) * h;
                        for (std::size_t q = 0; q < gl.nodes.size(); ++q) {
                            const double x = mid + 0.5 * h * gl.nodes[q];
                            sink(x, 0.5 * h * gl.weights[q] * inv_sqrt_2pi * std::exp(-0.5 * x * x));
                        }
                    }
                }
            });
        };
        int panels = 8 + truncation / 2;
        previous = composite(panels);
        for (int round = 0; round < 8 && !converged; ++round) {
            panels *= 2;
            current = composite(panels);
            converged = max_change(current.coeffs, previous.coeffs) < kTolerance;
            previous = current;
        }
        out.nodes = panels * 16 * static_cast<int>(edges.size() - 1);
    }
    if (!converged)
        throw QuadratureError("expand_activation_derivative: coefficients did not stabilize; "
                              "pass the discontinuities of psi' as breakpoints");
    out.coeffs = std::move(previous.coeffs);
    out.energy = previous.energy;
    double captured = 0.0;
    for (double a : out.coeffs) captured += a * a;
    out.tail_mass = std::max(0.0, out.energy - captured);
    return out;
}

}  // namespace memnet
