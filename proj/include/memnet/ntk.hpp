#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "memnet/constructive.hpp"
#include "memnet/data.hpp"
#include "memnet/hermite.hpp"
#include "memnet/network.hpp"

namespace memnet {

/// One random-initialization derivative neuron: u ~ N(0, I),
/// v = sum_{i : u . x_i >= 0} r_i x_i, bias 0.
struct NtkStep {
    DerivativeNeuronPair pair;
    Eigen::VectorXd values;  ///< realized two-ReLU outputs on the data
    double correlation = 0.0;
    double v_norm_sq = 0.0;
    int resamples = 0;       ///< draws of u discarded because some u . x_i == 0
};

/// Throws ZeroStepError when v = 0.
NtkStep ntk_step(const Dataset& ds, const Eigen::VectorXd& residual, std::uint64_t seed);

struct NtkOptions {
    int candidates = 1;  ///< u draws per iteration; the largest |v|^2 wins
    int max_iters = 100000;
    std::optional<double> fixed_eta;
};

struct NtkFitResult {
    TwoLayerNetwork net;
    FitTrace trace;
    GenericityReport genericity;
    double gamma = 0.0;     ///< clamped gamma used in the bound
    Index kd = 0;           ///< neurons times dimension
    double kd_bound = 0.0;  ///< 20 omega n log(1/eps) log(2n) / log(1/gamma)
};

NtkFitResult ntk_fit(const Dataset& ds, double epsilon, std::uint64_t seed,
                     const NtkOptions& options = {});

/// 20 omega n log(1/eps) log(2n) / log(1/gamma).
double ntk_kd_bound(double omega, double gamma, Index n, double epsilon);

/// (1/10) sqrt(log(1/gamma) / log(2n)).
double ntk_correlation_bound(double gamma, Index n);

/// H_ij = E_u[x_i . x_j 1{u . x_i >= 0} 1{u . x_j >= 0}]
///      = x_i . x_j (1/4 + arcsin(rho_ij) / (2 pi)).
Eigen::MatrixXd arcsin_gram(const Eigen::MatrixXd& points);

/// Monte Carlo estimate of one arcsin Gram entry over Gaussian u.
MonteCarloEstimate arcsin_gram_entry_mc(const Eigen::VectorXd& xi, const Eigen::VectorXd& xj,
                                        std::size_t samples, std::uint64_t seed);

struct GramBound {
    double lambda_min = 0.0;  ///< of D^{-1} H D^{-1}, D = diag |x_i|
    double bound = 0.0;

    bool holds() const { return lambda_min >= bound; }
};

GramBound gram_lower_bound_check(const Dataset& ds);

/// V_ij = x_i . x_j / (|x_i| |x_j|).
Eigen::MatrixXd coherence_matrix(const Eigen::MatrixXd& points);

/// Entrywise power V^{o power}.
Eigen::MatrixXd hadamard_power(const Eigen::MatrixXd& v, int power);

struct HadamardBound {
    int power = 0;  ///< ceil(log(2n) / log(1/gamma))
    double lambda_min = 0.0;

    bool holds() const { return lambda_min >= 0.5; }
};

HadamardBound hadamard_power_check(const Dataset& ds);

double min_eigenvalue(const Eigen::MatrixXd& symmetric);
double max_eigenvalue(const Eigen::MatrixXd& symmetric);

/// Derivative-neuron step for a general activation: u ~ N(0, I),
/// v = sum_i psi'(u . x_i) r_i x_i, f = [psi((u + delta v) . x) - psi(u . x)] / delta.
struct GeneralStep {
    Eigen::VectorXd u;
    Eigen::VectorXd v;
    double delta = 0.0;
    TwoLayerNetwork net;
    Eigen::VectorXd values;
    double correlation = 0.0;
};

GeneralStep general_ntk_step(const Dataset& ds, const Eigen::VectorXd& residual,
                             const Activation& psi, const ScalarFunction& psi_prime,
                             std::uint64_t seed, double delta = 1e-6);

struct GeneralNtkBound {
    int threshold_index = 0;  ///< ceil(log(2n) / (2 log(1/gamma)))
    double tail_sum = 0.0;    ///< sum_{l >= threshold} a_l^2, Parseval remainder included
    double required_kd = 0.0; ///< 16 omega L n log(1/eps) / tail_sum
    double gamma = 0.0;
    double omega = 0.0;
    double mean_correlation_ratio = 0.0;       ///< mean of r . f / |r|^2 over the probe steps
    double predicted_correlation_ratio = 0.0;  ///< tail_sum / 4
};

/// Throws UninformativeBoundError when the tail sum vanishes and ParameterError
/// when the expansion is truncated below the threshold index. With `psi` set,
/// `probe_steps` generalized steps on the labels estimate the mean correlation.
GeneralNtkBound general_ntk_bound(const Dataset& ds, const HermiteExpansion& expansion,
                                  double lipschitz, double epsilon,
                                  const Activation* psi = nullptr,
                                  const ScalarFunction& psi_prime = {}, int probe_steps = 0,
                                  std::uint64_t seed = 0);

}  // namespace memnet
