#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "memnet/data.hpp"
#include "memnet/network.hpp"

namespace memnet {

enum class Method { exact, baum_threshold, baum_relu, ntk, harmonic };

std::string_view to_string(Method method);
Method method_from_string(std::string_view name);

/// True for the boosted constructions that take an epsilon.
bool needs_epsilon(Method method);

/// One fitted construction and the quantities compared against the bounds.
struct FitOutcome {
    Method method = Method::exact;
    TwoLayerNetwork net;
    std::optional<FitTrace> trace;
    Index n = 0;
    Index d = 0;
    std::uint64_t seed = 0;
    std::optional<double> epsilon;
    double gamma = 0.0;
    double omega = 0.0;
    int m = 0;
    Index k = 0;
    double kd_bound = 0.0;    ///< Thm-style k d requirement (ntk only)
    double total_weight = 0.0;
    double error_ratio = 0.0;  ///< trimmed for harmonic
    double max_residual = 0.0;
    Index trimmed_out = 0;
    Index trim_allowance = 0;
    double weight_floor = 0.0;  ///< sqrt(n) / (8 L)
    bool floor_hypothesis_met = false;
};

/// Runs one construction on `ds`. epsilon is required for ntk and harmonic
/// and rejected for the exact constructions.
FitOutcome run_method(Method method, const Dataset& ds, std::optional<double> epsilon, std::uint64_t seed);

/// Summary JSON with the bound-comparison fields.
std::string outcome_to_json(const FitOutcome& outcome);

struct SweepConfig {
    Method method = Method::baum_relu;
    Index d = 20;
    std::vector<Index> n_list;
    std::vector<std::uint64_t> seeds;
    std::optional<double> epsilon;
    LabelKind labels = LabelKind::rademacher;
    bool parallel = false;
};

/// Sphere data with the requested labels for every (n, seed) cell; rows
/// sorted by (n, seed) whatever the execution order.
std::vector<FitOutcome> run_sweep(const SweepConfig& config);

/// Columns method,n,d,seed,epsilon,m,k,kd_bound,total_weight,error_ratio,max_residual,trimmed_out.
std::string sweep_to_csv(const std::vector<FitOutcome>& rows);

/// Sphere points with labels of the given kind; binary labels use 30% ones.
Dataset make_experiment_data(Index n, Index d, LabelKind labels, std::uint64_t seed);

}  // namespace memnet
