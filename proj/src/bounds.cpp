#include "memnet/bounds.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "memnet/parallel.hpp"
#include "memnet/random.hpp"

namespace memnet {

bool WeightBoundReport::falsified() const {
    return std::any_of(entries.begin(), entries.end(), [](const WeightBoundEntry& e) { return e.falsified; });
}

WeightBoundReport verify_weight_bound(const Dataset& ds, const std::vector<NamedNetwork>& nets,
                                      std::optional<double> lipschitz) {
    for (Index i = 0; i < ds.n(); ++i)
        if (std::abs(ds.labels(i)) != 1.0)
            throw DataError("verify_weight_bound needs +-1 labels; label " + std::to_string(i) + " is " +
                            std::to_string(ds.labels(i)));
    if (lipschitz && !(*lipschitz > 0.0)) throw ParameterError("verify_weight_bound: L must be > 0");
    const double root_n = std::sqrt(static_cast<double>(ds.n()));
    WeightBoundReport report;
    report.n = ds.n();
    report.lipschitz = lipschitz.value_or(1.0);
    report.bound = root_n / (8.0 * report.lipschitz);
    for (const auto& [name, net] : nets) {
        WeightBoundEntry entry;
        entry.name = name;
        entry.total_weight = total_weight(net);
        entry.error_ratio = error_ratio(evaluate(net, ds), ds.labels);
        entry.lipschitz = lipschitz.value_or(net.activation.lipschitz());
        const bool finite = std::isfinite(entry.lipschitz) && entry.lipschitz > 0.0;
        entry.bound = finite ? root_n / (8.0 * entry.lipschitz) : 0.0;
        entry.hypothesis_met = finite && entry.error_ratio <= 0.5;
        entry.falsified = entry.hypothesis_met && entry.total_weight < entry.bound;
        report.entries.push_back(entry);
    }
    return report;
}

std::string report_to_json(const WeightBoundReport& report) {
    nlohmann::ordered_json doc;
    doc["n"] = report.n;
    doc["lipschitz"] = report.lipschitz;
    doc["bound"] = report.bound;
    doc["falsified"] = report.falsified();
    auto& list = doc["constructions"] = nlohmann::ordered_json::array();
    for (const auto& e : report.entries) {
        nlohmann::ordered_json item;
        item["name"] = e.name;
        item["total_weight"] = e.total_weight;
        item["error_ratio"] = e.error_ratio;
        item["lipschitz"] = e.lipschitz;
        item["bound"] = e.bound;
        item["hypothesis_met"] = e.hypothesis_met;
        item["status"] = e.falsified ? "FALSIFICATION" : (e.hypothesis_met ? "ok" : "exempt");
        list.push_back(std::move(item));
    }
    return doc.dump(2);
}

double single_neuron_correlation(const Dataset& ds, const Eigen::VectorXd& w, double b) {
    const double norm = std::sqrt(w.squaredNorm() + b * b);
    if (norm == 0.0) return 0.0;
    const Eigen::VectorXd act = ((ds.points * w).array() - b).cwiseMax(0.0);
    return ds.labels.dot(act) / norm;
}

namespace {

CorrelationCap refine_candidate(const Dataset& ds, Eigen::VectorXd w, double b, int sweeps) {
    double best = single_neuron_correlation(ds, w, b);
    double step = 0.25;
    const Index d = ds.d();
    for (int sweep = 0; sweep < sweeps; ++sweep) {
        bool improved = false;
        for (Index k = 0; k <= d; ++k) {
            for (const double sign : {1.0, -1.0}) {
                Eigen::VectorXd w_try = w;
                double b_try = b;
                if (k < d) w_try(k) += sign * step;
                else b_try += sign * step;
                const double value = single_neuron_correlation(ds, w_try, b_try);
                if (value > best) {
                    best = value;
                    const double norm = std::sqrt(w_try.squaredNorm() + b_try * b_try);
                    w = w_try / norm;
                    b = b_try / norm;
                    improved = true;
                }
            }
        }
        if (!improved) step *= 0.5;
    }
    return {best, w, b};
}

}  // namespace

CorrelationCap single_neuron_correlation_cap(const Dataset& ds, int trials, std::uint64_t seed, int refine) {
    if (trials < 1) throw ParameterError("single_neuron_correlation_cap: trials must be >= 1");
    const Index d = ds.d();
    std::vector<CorrelationCap> results(static_cast<std::size_t>(trials) + 2);
    parallel_for(results.size(), [&](std::size_t t) {
        Eigen::VectorXd w;
        double b = 0.0;
        if (t + 2 < results.size()) {
            Rng rng = make_rng(derive_seed(seed, streams::bounds, t));
            Eigen::VectorXd z = gaussian_vector(d + 1, rng);
            z.normalize();
            w = z.head(d);
            b = z(d);
        } else {
            w = ds.points.transpose() * ds.labels;
            if (w.norm() == 0.0) w = Eigen::VectorXd::Unit(d, 0);
            w.normalize();
            b = t + 2 == results.size() ? 0.0 : -1.0;
        }
        results[t] = refine_candidate(ds, w, b, refine);
    });
    std::size_t best = 0;
    for (std::size_t t = 1; t < results.size(); ++t)
        if (results[t].value > results[best].value) best = t;
    return results[best];
}

}  // namespace memnet
