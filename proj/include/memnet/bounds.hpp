#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "memnet/data.hpp"
#include "memnet/network.hpp"

namespace memnet {

struct NamedNetwork {
    std::string name;
    TwoLayerNetwork net;
};

struct WeightBoundEntry {
    std::string name;
    double total_weight = 0.0;
    double error_ratio = 0.0;
    double lipschitz = 1.0;
    double bound = 0.0;           ///< sqrt(n) / (8 L)
    bool hypothesis_met = false;  ///< error ratio <= 1/2 and L finite
    bool falsified = false;       ///< hypothesis met but weight below the bound
};

struct WeightBoundReport {
    Index n = 0;
    double lipschitz = 1.0;
    double bound = 0.0;
    std::vector<WeightBoundEntry> entries;

    bool falsified() const;
};

/// Weight floor W(f) >= sqrt(n) / (8 L) for every network with
/// |f - y|^2 <= |y|^2 / 2. L defaults to each activation's Lipschitz constant.
/// Labels must be +-1.
WeightBoundReport verify_weight_bound(const Dataset& ds, const std::vector<NamedNetwork>& nets,
                                      std::optional<double> lipschitz = std::nullopt);

std::string report_to_json(const WeightBoundReport& report);

/// sum_i y_i relu(w . x_i - b) / sqrt(|w|^2 + b^2).
double single_neuron_correlation(const Dataset& ds, const Eigen::VectorXd& w, double b);

struct CorrelationCap {
    double value = 0.0;
    Eigen::VectorXd w;
    double b = 0.0;
};

/// Largest normalized ReLU correlation found by `trials` random unit (w, b)
/// plus the linear neuron along sum_i y_i x_i, each refined by coordinate
/// search. A lower estimate of the true maximum.
CorrelationCap single_neuron_correlation_cap(const Dataset& ds, int trials, std::uint64_t seed,
                                             int refine = 8);

}  // namespace memnet
