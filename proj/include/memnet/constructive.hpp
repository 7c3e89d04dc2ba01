#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "memnet/data.hpp"
#include "memnet/network.hpp"

namespace memnet {

/// f(x) = [relu((u + delta v) . x - b) - relu(u . x - b)] / delta.
/// On points where delta |v . x| < |u . x - b| this equals
/// relu'(u . x - b) (v . x) exactly.
struct DerivativeNeuronPair {
    Eigen::VectorXd u;
    Eigen::VectorXd v;
    double b = 0.0;
    double delta = 1.0;

    /// The two ReLU neurons with outer coefficients +1/delta and -1/delta.
    TwoLayerNetwork network(double scale = 1.0) const;

    /// relu'(u . x_i - b) (v . x_i), with relu'(0) = 1.
    Eigen::VectorXd derivative_values(const Eigen::MatrixXd& points) const;
};

/// delta = (1/2) min_i |u . x_i - b| / |v . x_i| over terms with |v . x_i| >= 1e-14;
/// 1 when every term is skipped. Throws DegenerateDataError when some point
/// with a kept term lies on the plane u . x = b.
double safe_delta(const Eigen::MatrixXd& points, const Eigen::VectorXd& u,
                  const Eigen::VectorXd& v, double b);

/// Random (w, b) features, n columns picked by column-pivoted QR from
/// `candidate_factor * n` candidates, outer coefficients by a square solve.
TwoLayerNetwork exact_fit_generic(const Dataset& ds, const Activation& activation,
                                  std::uint64_t seed, int candidate_factor = 10);

/// Threshold network equal to y on the data for labels in {0, 1}: two
/// neurons per group of <= d minority points plus a constant neuron when
/// label 1 is the majority.
TwoLayerNetwork baum_threshold_fit(const Dataset& ds, std::uint64_t seed = 0);

/// ReLU network equal to y on the data: per group of <= d points, two
/// derivative-neuron pairs fire on a slab around a hyperplane through the group.
TwoLayerNetwork baum_relu_fit(const Dataset& ds, std::uint64_t seed = 0);

struct ScalingRow {
    Index n = 0;
    Index d = 0;
    std::uint64_t seed = 0;
    Index k = 0;
    double total_weight = 0.0;
    double max_residual = 0.0;
};

/// baum_relu_fit on sphere data with Rademacher labels for every (n, seed).
/// Rows are ordered by n, then seed.
std::vector<ScalingRow> measure_baum_weight_scaling(Index d, std::span<const Index> n_list,
                                                    std::span<const std::uint64_t> seeds);

/// Median total weight per n, in the order of first appearance.
std::vector<std::pair<Index, double>> median_weight_by_n(std::span<const ScalingRow> rows);

}  // namespace memnet
