#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "memnet/data.hpp"
#include "memnet/error.hpp"

namespace memnet {

enum class ActivationKind { relu, threshold, hermite, tabulated };

/// Scalar non-linearity psi. `hermite` is the normalized Hermite polynomial
/// H_m; `tabulated` is piecewise linear through (knots, values) and constant
/// beyond the end knots.
struct Activation {
    ActivationKind kind = ActivationKind::relu;
    int degree = 0;
    std::vector<double> knots;
    std::vector<double> values;

    static Activation relu() { return {}; }
    static Activation threshold() { return {ActivationKind::threshold, 0, {}, {}}; }
    static Activation hermite(int m);
    static Activation tabulated(std::vector<double> knots, std::vector<double> values);

    double operator()(double t) const;

    /// Lipschitz constant; +inf for threshold and hermite.
    double lipschitz() const;

    std::string name() const;
};

/// One hidden unit a * psi(w . x + b).
struct Neuron {
    double a = 0.0;
    Eigen::VectorXd w;
    double b = 0.0;
};

struct TwoLayerNetwork {
    Activation activation;
    Index dim = 0;
    std::vector<Neuron> neurons;

    std::size_t size() const { return neurons.size(); }
    bool empty() const { return neurons.empty(); }

    /// Appends `other` with its outer coefficients multiplied by `scale`.
    void append(const TwoLayerNetwork& other, double scale = 1.0);
};

TwoLayerNetwork concatenate(const TwoLayerNetwork& first, const TwoLayerNetwork& second);

/// f(x_i) = sum_l a_l psi(w_l . x_i + b_l) for every row of `points`.
Eigen::VectorXd evaluate(const TwoLayerNetwork& net, const Eigen::MatrixXd& points);
Eigen::VectorXd evaluate(const TwoLayerNetwork& net, const Dataset& ds);

/// W(f) = sum_l |a_l| sqrt(|w_l|^2 + b_l^2).
double total_weight(const TwoLayerNetwork& net);

/// |f - y|^2 / |y|^2 (0 when y = 0 and f = 0).
double error_ratio(const Eigen::VectorXd& values, const Eigen::VectorXd& labels);

struct FitIteration {
    double residual_sq = 0.0;   ///< |r|^2 after the step (on the active set)
    double correlation = 0.0;   ///< r . f before the step
    double step_norm_sq = 0.0;  ///< |f|^2
    double eta = 0.0;
    int neurons_added = 0;
    Index active_set_size = 0;
    double added_weight = 0.0;  ///< |eta| * W(f)
};

struct FitTrace {
    std::vector<FitIteration> iterations;
    double initial_residual_sq = 0.0;
    double final_error_ratio = 0.0;
    double total_weight = 0.0;
    int rejected_steps = 0;
    bool converged = false;
    std::vector<std::string> notes;
};

/// Raised when a fit exhausts its iteration cap or retry budget.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, FitTrace trace)
        : Error(what), trace_(std::move(trace)) {}
    const FitTrace& trace() const noexcept { return trace_; }

private:
    FitTrace trace_;
};

/// A small network proposed for the current residual, with its values on the data.
struct Step {
    TwoLayerNetwork net;
    Eigen::VectorXd values;
};

/// Builds a step for residual r. `iteration` and `attempt` index a
/// deterministic seed; throwing ZeroStepError requests a resample.
using StepBuilder =
    std::function<Step(const Eigen::VectorXd& residual, int iteration, int attempt)>;

struct BoostOptions {
    double epsilon = 0.1;
    int max_iters = 10000;
    /// Unset: exact line search eta = (r.f)/|f|^2. Set: the constant eta of Lemma-style boosting.
    std::optional<double> fixed_eta;
    int retry_budget = 50;
};

struct FitResult {
    TwoLayerNetwork net;
    FitTrace trace;
};

/// Greedy residual boosting: r <- r - eta f until |r|^2 <= epsilon |y|^2.
/// Steps with r.f <= 0 are resampled. Throws ConvergenceError with the trace
/// when max_iters or the retry budget is exhausted.
FitResult boost_fit(const StepBuilder& builder, const Dataset& ds, const BoostOptions& options);

// Serialization: JSON {activation, degree?, dim, neurons:[{a, w:[...], b}]}.
std::string network_to_json(const TwoLayerNetwork& net);
TwoLayerNetwork network_from_json(const std::string& text);
void save_network(const TwoLayerNetwork& net, const std::filesystem::path& path);
TwoLayerNetwork load_network(const std::filesystem::path& path);

/// One row per iteration: iteration,residual_sq,correlation,step_norm_sq,eta,
/// neurons_added,active_set_size,added_weight.
std::string trace_to_csv(const FitTrace& trace);

}  // namespace memnet
