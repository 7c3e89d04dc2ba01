#include "memnet/constructive.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>

#include "memnet/parallel.hpp"
#include "memnet/random.hpp"
#include "memnet/stats.hpp"

namespace memnet {

TwoLayerNetwork DerivativeNeuronPair::network(double scale) const {
    TwoLayerNetwork net;
    net.activation = Activation::relu();
    net.dim = u.size();
    net.neurons.push_back({scale / delta, u + delta * v, -b});
    net.neurons.push_back({-scale / delta, u, -b});
    return net;
}

Eigen::VectorXd DerivativeNeuronPair::derivative_values(const Eigen::MatrixXd& points) const {
    const Eigen::VectorXd pre = (points * u).array() - b;
    const Eigen::VectorXd slope = points * v;
    return (pre.array() >= 0.0).select(slope, 0.0);
}

double safe_delta(const Eigen::MatrixXd& points, const Eigen::VectorXd& u,
                  const Eigen::VectorXd& v, double b) {
    const Eigen::VectorXd pre = (points * u).array() - b;
    const Eigen::VectorXd slope = points * v;
    double best = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < pre.size(); ++i) {
        if (std::abs(slope(i)) < 1e-14) continue;
        if (pre(i) == 0.0)
            throw DegenerateDataError("safe_delta: point " + std::to_string(i) + " lies on the plane");
        best = std::min(best, std::abs(pre(i)) / std::abs(slope(i)));
    }
    return std::isfinite(best) ? 0.5 * best : 1.0;
}

TwoLayerNetwork exact_fit_generic(const Dataset& ds, const Activation& activation,
                                  std::uint64_t seed, int candidate_factor) {
    if (activation.kind == ActivationKind::hermite)
        throw ParameterError("exact_fit_generic needs a non-polynomial activation");
    if (candidate_factor < 1) throw ParameterError("exact_fit_generic: candidate_factor must be >= 1");
    const Index n = ds.n();
    const Index d = ds.d();
    const Index k = candidate_factor * n;

    Rng rng = make_rng(derive_seed(seed, streams::generic_fit));
    Eigen::MatrixXd w(d, k);
    Eigen::RowVectorXd bias(k);
    fill_gaussian(w, rng);
    fill_gaussian(bias, rng);

    Eigen::MatrixXd features = ds.points * w;
    features.rowwise() += bias;
    features = features.unaryExpr([&activation](double t) { return activation(t); });

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(features);
    if (qr.rank() < n)
        throw RankDeficiencyError("exact_fit_generic: evaluation matrix has rank " +
                                  std::to_string(qr.rank()) + " < n = " + std::to_string(n) +
                                  " after " + std::to_string(k) + " candidates");
    const auto& perm = qr.colsPermutation().indices();
    Eigen::MatrixXd square(n, n);
    for (Index j = 0; j < n; ++j) square.col(j) = features.col(perm(j));
    const Eigen::VectorXd a = square.fullPivLu().solve(ds.labels);

    TwoLayerNetwork net;
    net.activation = activation;
    net.dim = d;
    for (Index j = 0; j < n; ++j) net.neurons.push_back({a(j), w.col(perm(j)), bias(perm(j))});
    return net;
}

namespace {

/// Hyperplane u . x = b (|u| = 1) through the points of a group and the half
/// width tau = (1/2) min distance of any other point to it.
struct Slab {
    Eigen::VectorXd u;
    double b = 0.0;
    double tau = 0.0;
};

std::optional<Slab> slab_through(const Eigen::MatrixXd& points, std::span<const Index> group,
                                 Rng& rng) {
    const Index d = points.cols();
    const auto g = static_cast<Index>(group.size());
    Eigen::MatrixXd system(g, d + 1);
    for (Index r = 0; r < g; ++r) {
        system.row(r).head(d) = points.row(group[static_cast<std::size_t>(r)]);
        system(r, d) = -1.0;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(system, Eigen::ComputeFullV);
    if (svd.rank() < g) return std::nullopt;
    const Eigen::MatrixXd null_space = svd.matrixV().rightCols(d + 1 - g);
    const Eigen::VectorXd coef = gaussian_vector(null_space.cols(), rng);
    const Eigen::VectorXd normal = null_space * coef;

    Slab slab;
    const double scale = normal.head(d).norm();
    if (scale < 1e-12) return std::nullopt;
    slab.u = normal.head(d) / scale;
    slab.b = normal(d) / scale;

    std::vector<bool> member(static_cast<std::size_t>(points.rows()), false);
    for (Index i : group) member[static_cast<std::size_t>(i)] = true;
    const Eigen::VectorXd offset = (points * slab.u).array() - slab.b;
    double on_plane = 0.0;
    double nearest = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < points.rows(); ++i) {
        if (member[static_cast<std::size_t>(i)]) on_plane = std::max(on_plane, std::abs(offset(i)));
        else nearest = std::min(nearest, std::abs(offset(i)));
    }
    if (!std::isfinite(nearest)) nearest = 2.0;
    if (nearest <= 1e-10 || on_plane > 1e-3 * nearest) return std::nullopt;
    slab.tau = 0.5 * nearest;
    return slab;
}

std::vector<std::vector<Index>> shuffled_groups(std::span<const Index> indices, Index size, Rng& rng) {
    std::vector<Index> order(indices.begin(), indices.end());
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::vector<Index>> groups;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(size)) {
        const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(size));
        groups.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                            order.begin() + static_cast<std::ptrdiff_t>(stop));
    }
    return groups;
}

std::string describe_group(std::size_t index, std::span<const Index> group) {
    std::string out = "group " + std::to_string(index) + " {";
    for (std::size_t i = 0; i < group.size(); ++i) out += (i ? "," : "") + std::to_string(group[i]);
    return out + "}";
}

constexpr int kPartitionRetries = 20;

}  // namespace

TwoLayerNetwork baum_threshold_fit(const Dataset& ds, std::uint64_t seed) {
    const Index n = ds.n();
    const Index d = ds.d();
    std::vector<Index> ones, zeros;
    for (Index i = 0; i < n; ++i) {
        const double y = ds.labels(i);
        if (y == 1.0) ones.push_back(i);
        else if (y == 0.0) zeros.push_back(i);
        else throw DataError("baum_threshold_fit needs labels in {0, 1}; label " + std::to_string(i) +
                             " is " + std::to_string(y));
    }
    const bool ones_minority = ones.size() <= zeros.size();
    const std::vector<Index>& minority = ones_minority ? ones : zeros;
    const double sign = ones_minority ? 1.0 : -1.0;

    std::string failure;
    for (int attempt = 0; attempt < kPartitionRetries; ++attempt) {
        Rng rng = make_rng(derive_seed(seed, streams::baum, static_cast<std::uint64_t>(attempt)));
        TwoLayerNetwork net;
        net.activation = Activation::threshold();
        net.dim = d;
        if (!ones_minority) net.neurons.push_back({1.0, Eigen::VectorXd::Zero(d), 0.0});
        const auto groups = shuffled_groups(minority, d, rng);
        bool ok = true;
        for (std::size_t gi = 0; gi < groups.size() && ok; ++gi) {
            const auto slab = slab_through(ds.points, groups[gi], rng);
            if (!slab) {
                failure = describe_group(gi, groups[gi]);
                ok = false;
                break;
            }
            net.neurons.push_back({sign, slab->u, -slab->b + slab->tau});
            net.neurons.push_back({-sign, slab->u, -slab->b - slab->tau});
        }
        if (ok) return net;
    }
    throw DegenerateDataError("baum_threshold_fit: no hyperplane avoids the other points for " +
                              failure + " after " + std::to_string(kPartitionRetries) + " partitions");
}

TwoLayerNetwork baum_relu_fit(const Dataset& ds, std::uint64_t seed) {
    const Index n = ds.n();
    const Index d = ds.d();
    std::vector<Index> all(static_cast<std::size_t>(n));
    std::iota(all.begin(), all.end(), Index{0});
    const double label_scale = std::max(1.0, ds.labels.cwiseAbs().maxCoeff());

    std::string failure;
    for (int attempt = 0; attempt < kPartitionRetries; ++attempt) {
        Rng rng = make_rng(derive_seed(seed, streams::baum, static_cast<std::uint64_t>(attempt)));
        const auto groups = shuffled_groups(all, d, rng);
        std::vector<std::optional<Slab>> slabs;
        for (const auto& group : groups) slabs.push_back(slab_through(ds.points, group, rng));

        TwoLayerNetwork net;
        net.activation = Activation::relu();
        net.dim = d;
        bool ok = true;
        for (std::size_t gi = 0; gi < groups.size() && ok; ++gi) {
            const auto& group = groups[gi];
            const auto& slab = slabs[gi];
            failure = describe_group(gi, group);
            if (!slab) {
                ok = false;
                break;
            }
            const auto g = static_cast<Index>(group.size());
            Eigen::MatrixXd xg(g, d);
            Eigen::VectorXd yg(g);
            for (Index r = 0; r < g; ++r) {
                xg.row(r) = ds.points.row(group[static_cast<std::size_t>(r)]);
                yg(r) = ds.labels(group[static_cast<std::size_t>(r)]);
            }
            const Eigen::VectorXd v = xg.completeOrthogonalDecomposition().solve(yg);
            if ((xg * v - yg).cwiseAbs().maxCoeff() > 1e-9 * label_scale) {
                ok = false;
                break;
            }
            try {
                for (const double shift : {-slab->tau, slab->tau}) {
                    DerivativeNeuronPair pair{slab->u, v, slab->b + shift, 1.0};
                    pair.delta = safe_delta(ds.points, pair.u, pair.v, pair.b);
                    net.append(pair.network(shift < 0.0 ? 1.0 : -1.0));
                }
            } catch (const DegenerateDataError&) {
                ok = false;
            }
        }
        if (!ok) continue;
        const double residual = (evaluate(net, ds) - ds.labels).cwiseAbs().maxCoeff();
        if (residual <= 1e-6 * label_scale) return net;
        failure = "the assembled network (max residual " + std::to_string(residual) + ")";
    }
    throw DegenerateDataError("baum_relu_fit: construction failed for " + failure + " after " +
                              std::to_string(kPartitionRetries) + " partitions");
}

std::vector<ScalingRow> measure_baum_weight_scaling(Index d, std::span<const Index> n_list,
                                                    std::span<const std::uint64_t> seeds) {
    if (n_list.empty() || seeds.empty()) throw ParameterError("scaling sweep needs n values and seeds");
    std::vector<std::pair<Index, std::uint64_t>> cells;
    for (Index n : n_list)
        for (std::uint64_t seed : seeds) cells.emplace_back(n, seed);
    std::sort(cells.begin(), cells.end());
    std::vector<ScalingRow> rows(cells.size());
    parallel_for(rows.size(), [&](std::size_t cell) {
        const auto [n, seed] = cells[cell];
        const Dataset ds = rademacher_labels(sample_sphere(n, d, seed), seed);
        const TwoLayerNetwork net = baum_relu_fit(ds, seed);
        rows[cell] = {n, d, seed, static_cast<Index>(net.size()), total_weight(net),
                      (evaluate(net, ds) - ds.labels).cwiseAbs().maxCoeff()};
    });
    return rows;
}

std::vector<std::pair<Index, double>> median_weight_by_n(std::span<const ScalingRow> rows) {
    std::vector<std::pair<Index, double>> out;
    std::map<Index, std::vector<double>> by_n;
    for (const auto& row : rows) {
        if (!by_n.contains(row.n)) out.emplace_back(row.n, 0.0);
        by_n[row.n].push_back(row.total_weight);
    }
    for (auto& [n, value] : out) value = median(by_n[n]);
    return out;
}

}  // namespace memnet
