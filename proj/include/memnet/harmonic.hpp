#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "memnet/constants.hpp"
#include "memnet/data.hpp"
#include "memnet/network.hpp"
#include "memnet/rational.hpp"
#include "memnet/stats.hpp"

namespace memnet {

using Complex = std::complex<double>;

/// Smallest m >= 3 with n gamma^{m-2} <= 1/2.
int choose_degree(Index n, double gamma);

/// v(w) = (1 / sqrt(n gamma^2)) sum_i r_i H_{m-1}(w . x_i) x_i.
Eigen::VectorXd perturbation_vector(const Eigen::MatrixXd& points, const Eigen::VectorXd& residual,
                                    const Eigen::VectorXd& w, int m, double gamma);

/// H_ij = (x_i . x_j)^m, the closed form of E_w[H_{m-1}(w . x_i) H_{m-1}(w . x_j)] x_i . x_j
/// for unit rows.
Eigen::MatrixXd hermite_gram(const Eigen::MatrixXd& points, int m);

/// phi = H_m / sqrt(m), extended to complex arguments.
Complex phi(int m, Complex z);

/// g(x) = Re(z phi(w_re . x + i w_im . x)).
struct ComplexNeuron {
    Eigen::VectorXd w_re;
    Eigen::VectorXd w_im;
    Complex z{1.0, 0.0};
    int m = 3;

    Eigen::VectorXd evaluate(const Eigen::MatrixXd& points) const;
};

/// The sampled form Re(a^{-1} phi((w + a v) . x)): w_re = w + Re(a) v, w_im = Im(a) v, z = conj(a).
ComplexNeuron complex_neuron(const Eigen::VectorXd& w, const Eigen::VectorXd& v, Complex a, int m);

/// Mean over `phases` equally spaced unit a of a^{-1} phi(p + a q).
Complex phase_average(int m, double p, double q, int phases);

/// Per-step parameters of the harmonic construction.
struct HarmonicSettings {
    int m = 3;
    double gamma = 0.5;
    HarmonicConstants constants;
    int candidates = 256;
    int grid_size = 512;

    /// (4 C log n)^{m/2}.
    double cutoff(Index n) const;
    /// 2 m cutoff: every point of a non-cut candidate is admissible.
    double radius(Index n) const;
};

HarmonicSettings harmonic_settings(Index n, double gamma, std::optional<int> m = std::nullopt);

struct ComplexSample {
    ComplexNeuron neuron;
    Eigen::VectorXd values;  ///< g(x_i)
    double correlation = 0.0;
    double floor = 0.0;      ///< |r|^2 / (2 C sqrt(n gamma^2))
    Index index = 0;         ///< winning candidate
    Index cut = 0;           ///< candidates removed by the projection cutoff
};

/// Draws `settings.candidates` pairs (w ~ N(0, I), a uniform on the circle) and
/// returns the maximizer of F (1 - G); throws SamplerFailure when every
/// candidate is cut or the winner falls below the correlation floor.
ComplexSample sample_complex_neuron(const Eigen::MatrixXd& points, const Eigen::VectorXd& residual,
                                    const HarmonicSettings& settings, std::uint64_t seed);

/// Re(z phi(x + i y)) = sum_j p_j(x + j y) with p_j of degree <= m.
struct DirectionalDecomposition {
    int m = 0;
    Complex z{1.0, 0.0};
    std::vector<std::vector<double>> polys;  ///< monomial coefficients of p_0..p_m

    double evaluate(double x, double y) const;
};

/// Exact weights c_j with sum_j c_j (x + j y)^k = Re((x + i y)^k) (real part)
/// or Im((x + i y)^k) (imaginary part), j = 0..k.
struct VandermondeWeights {
    std::vector<Rational> real;
    std::vector<Rational> imag;
};

VandermondeWeights vandermonde_weights(int k);

DirectionalDecomposition decompose_directions(Complex z, int m);

double polynomial_value(const std::vector<double>& coeffs, double t);
std::vector<double> polynomial_derivative(const std::vector<double>& coeffs);

/// chi_M: 1 on [-M, M], 0 outside [-2M, 2M], smooth transition 1 - S((|t| - M) / M)
/// with S(s) = h(s) / (h(s) + h(1 - s)), h(s) = exp(-1/s).
struct BumpValue {
    double value = 0.0;
    double d1 = 0.0;
    double d2 = 0.0;
};

BumpValue bump(double t, double radius);

struct MixtureComponent {
    int j = 0;
    double prob = 0.0;
    double integral = 0.0;           ///< int |f_j''|
    std::vector<double> poly;        ///< p_j
    std::vector<double> breakpoints; ///< sign changes of f_j'' and +-M
    std::vector<double> grid;        ///< bias quantiles of |f_j''| / integral
    std::vector<int> sign_at;        ///< sign(f_j''(B)) on the grid
};

/// f_j = p_j chi_M represented as E[S relu(t - B)] int |f_j''|, with J drawn
/// proportionally to int |f_j''|. On admissible points
/// E[S relu(W_J . x - B)] = scale * Re(z phi(w_re . x + i w_im . x)).
struct ReluMixture {
    double radius = 0.0;  ///< M
    double scale = 0.0;   ///< 1 / sum_j int |f_j''|
    std::vector<MixtureComponent> components;

    double second_derivative(int j, double t) const;
    /// int f_j''(B) relu(t - B) dB / int |f_j''| by deterministic quadrature.
    double component_expectation(int j, double t) const;
    /// sum_j P(J = j) component_expectation(j, x + j y).
    double expectation(double x, double y) const;
};

ReluMixture relu_mixture(const DirectionalDecomposition& dd, double radius, int grid_size = 512);

struct NeuronStep {
    Neuron neuron;  ///< sigma relu(W . x - b), stored as {sigma, W, -b}
    int j = 0;
    Eigen::VectorXd values;
    double correlation = 0.0;          ///< r . f
    double mixture_correlation = 0.0;  ///< scale * (r . g)
    double radius = 0.0;
    ComplexSample sample;
};

/// Realizes the mixture by search over j, sigma and b in the mixture grid plus
/// the data breakpoints; among biases whose correlation reaches the mixture
/// mean the one with the largest r . f / sqrt(|W|^2 + b^2) wins.
NeuronStep single_neuron_step(const Eigen::MatrixXd& points, const Eigen::VectorXd& residual,
                              const HarmonicSettings& settings, std::uint64_t seed);

struct HarmonicOptions {
    double epsilon = 0.25;
    int max_iters = 20000;
    int retry_budget = 20;
    int candidates = 256;
    int grid_size = 512;
    std::optional<int> degree;
    std::optional<double> fixed_eta;
};

struct HarmonicFitResult {
    TwoLayerNetwork net;
    FitTrace trace;
    std::vector<Index> active;
    int m = 0;
    double gamma = 0.0;
    double label_scale = 1.0;   ///< labels were multiplied by this before fitting
    double trimmed_error_ratio = 0.0;  ///< |f_A - y_A|^2 / |y|^2
    double error_ratio = 0.0;          ///< over all points
    Index trimmed_out = 0;
    Index trim_allowance = 0;   ///< ceil(1 / gamma^2)
    double iteration_cap = 0.0;
};

/// Trimmed boosting with single ReLU neurons. Throws ConvergenceError at the cap.
HarmonicFitResult harmonic_fit(const Dataset& ds, std::uint64_t seed, const HarmonicOptions& options = {});

struct TailRow {
    double s = 0.0;
    double freq_re = 0.0;
    double freq_im = 0.0;
};

struct TailDiagnostic {
    std::vector<TailRow> rows;
    LineFit fit;  ///< log(freq_re) against s^{2/m} beyond the first decade
};

/// Exceedance frequencies of |Re((w + a v(w)) . x_i)| and |Im(.)| over
/// `samples` draws of (w, a).
TailDiagnostic tail_diagnostic(const Eigen::MatrixXd& points, const Eigen::VectorXd& residual, int m,
                               double gamma, int samples, std::uint64_t seed);

struct CalibrationOptions {
    Index n = 100;
    Index d = 50;
    int draws = 500;
    int m_min = 3;
    int m_max = 20;
    std::uint64_t seed = 2026;
    std::string date = "2026-10-15";
};

ConstantsTable calibrate(const CalibrationOptions& options = {});

}  // namespace memnet
