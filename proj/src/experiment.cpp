#include "memnet/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "memnet/constructive.hpp"
#include "memnet/harmonic.hpp"
#include "memnet/ntk.hpp"
#include "memnet/parallel.hpp"

namespace memnet {

std::string_view to_string(Method method) {
    switch (method) {
        case Method::exact: return "exact";
        case Method::baum_threshold: return "baum-threshold";
        case Method::baum_relu: return "baum-relu";
        case Method::ntk: return "ntk";
        case Method::harmonic: return "harmonic";
    }
    return "exact";
}

Method method_from_string(std::string_view name) {
    for (Method m : {Method::exact, Method::baum_threshold, Method::baum_relu, Method::ntk, Method::harmonic})
        if (to_string(m) == name) return m;
    throw ParameterError("unknown method '" + std::string(name) +
                         "' (expected exact, baum-threshold, baum-relu, ntk or harmonic)");
}

bool needs_epsilon(Method method) { return method == Method::ntk || method == Method::harmonic; }

FitOutcome run_method(Method method, const Dataset& ds, std::optional<double> epsilon, std::uint64_t seed) {
    if (needs_epsilon(method) && !epsilon)
        throw ParameterError(std::string(to_string(method)) + " needs --epsilon");
    if (!needs_epsilon(method) && epsilon)
        throw ParameterError(std::string(to_string(method)) + " is an exact construction and takes no epsilon");

    FitOutcome out;
    out.method = method;
    out.n = ds.n();
    out.d = ds.d();
    out.seed = seed;
    out.epsilon = epsilon;
    const auto report = genericity(ds, seed);
    out.gamma = clamped_gamma(report, ds.n());
    out.omega = report.omega;

    switch (method) {
        case Method::exact: out.net = exact_fit_generic(ds, Activation::relu(), seed); break;
        case Method::baum_threshold: out.net = baum_threshold_fit(ds, seed); break;
        case Method::baum_relu: out.net = baum_relu_fit(ds, seed); break;
        case Method::ntk: {
            auto fit = ntk_fit(ds, *epsilon, seed);
            out.net = std::move(fit.net);
            out.trace = std::move(fit.trace);
            out.kd_bound = fit.kd_bound;
            break;
        }
        case Method::harmonic: {
            HarmonicOptions options;
            options.epsilon = *epsilon;
            auto fit = harmonic_fit(ds, seed, options);
            out.net = std::move(fit.net);
            out.trace = std::move(fit.trace);
            out.m = fit.m;
            out.trimmed_out = fit.trimmed_out;
            out.trim_allowance = fit.trim_allowance;
            break;
        }
    }
    out.k = static_cast<Index>(out.net.size());
    out.total_weight = total_weight(out.net);
    const Eigen::VectorXd values = evaluate(out.net, ds);
    out.max_residual = ds.n() ? (values - ds.labels).cwiseAbs().maxCoeff() : 0.0;
    out.error_ratio = out.trace && method == Method::harmonic ? out.trace->final_error_ratio
                                                              : error_ratio(values, ds.labels);
    const double lipschitz = out.net.activation.lipschitz();
    const bool signs = (ds.labels.array().abs() == 1.0).all();
    out.weight_floor = std::isfinite(lipschitz) ? std::sqrt(static_cast<double>(ds.n())) / (8.0 * lipschitz) : 0.0;
    out.floor_hypothesis_met = signs && std::isfinite(lipschitz) && error_ratio(values, ds.labels) <= 0.5;
    return out;
}

std::string outcome_to_json(const FitOutcome& o) {
    nlohmann::ordered_json doc;
    doc["method"] = std::string(to_string(o.method));
    doc["n"] = o.n;
    doc["d"] = o.d;
    doc["seed"] = o.seed;
    if (o.epsilon) doc["epsilon"] = *o.epsilon;
    else doc["epsilon"] = nullptr;
    doc["activation"] = o.net.activation.name();
    doc["k"] = o.k;
    doc["total_weight"] = o.total_weight;
    doc["error_ratio"] = o.error_ratio;
    doc["max_residual"] = o.max_residual;
    doc["gamma"] = o.gamma;
    doc["omega"] = o.omega;
    if (o.trace) {
        doc["iterations"] = o.trace->iterations.size();
        doc["rejected_steps"] = o.trace->rejected_steps;
        doc["notes"] = o.trace->notes;
    }

    auto& bounds = doc["bounds"];
    {
        auto& b = bounds["weight_floor"];
        b["bound"] = o.weight_floor;
        b["hypothesis_met"] = o.floor_hypothesis_met;
        b["satisfied"] = !o.floor_hypothesis_met || o.total_weight >= o.weight_floor;
    }
    {
        auto& b = bounds["ntk_size"];
        const bool met = o.method == Method::ntk;
        b["kd"] = o.k * o.d;
        b["kd_bound"] = met ? o.kd_bound : 0.0;
        b["hypothesis_met"] = met;
        b["satisfied"] = !met || static_cast<double>(o.k * o.d) <= o.kd_bound;
    }
    {
        auto& b = bounds["harmonic_trim"];
        const bool met = o.method == Method::harmonic;
        b["m"] = o.m;
        b["active_size"] = o.n - o.trimmed_out;
        b["min_active_size"] = o.n - o.trim_allowance;
        b["hypothesis_met"] = met;
        b["satisfied"] = !met || o.trimmed_out <= o.trim_allowance;
    }
    {
        auto& b = bounds["exact_size"];
        Index limit = 0;
        if (o.method == Method::exact) limit = o.n;
        if (o.method == Method::baum_relu) limit = 4 * ((o.n + o.d - 1) / o.d);
        b["k_limit"] = limit;
        b["hypothesis_met"] = limit > 0;
        b["satisfied"] = limit == 0 || o.k <= limit;
    }
    return doc.dump(2);
}

Dataset make_experiment_data(Index n, Index d, LabelKind labels, std::uint64_t seed) {
    Dataset ds = sample_sphere(n, d, seed);
    switch (labels) {
        case LabelKind::rademacher: return rademacher_labels(std::move(ds), seed);
        case LabelKind::gaussian: return gaussian_labels(std::move(ds), seed);
        case LabelKind::binary: return binary_labels(std::move(ds), (3 * n) / 10, seed);
        default: throw ParameterError("sweeps generate rademacher, gaussian or binary labels");
    }
}

std::vector<FitOutcome> run_sweep(const SweepConfig& config) {
    if (config.n_list.empty()) throw ParameterError("sweep: the n list is empty");
    if (config.seeds.empty()) throw ParameterError("sweep: the seed list is empty");
    if (needs_epsilon(config.method) != config.epsilon.has_value())
        throw ParameterError(needs_epsilon(config.method) ? "sweep: this method needs --epsilon"
                                                          : "sweep: exact constructions take no epsilon");
    LabelKind labels = config.labels;
    if (config.method == Method::baum_threshold) labels = LabelKind::binary;

    struct Cell {
        Index n;
        std::uint64_t seed;
    };
    std::vector<Cell> cells;
    for (Index n : config.n_list)
        for (std::uint64_t seed : config.seeds) cells.push_back({n, seed});
    std::sort(cells.begin(), cells.end(),
              [](const Cell& a, const Cell& b) { return a.n != b.n ? a.n < b.n : a.seed < b.seed; });

    std::vector<FitOutcome> rows(cells.size());
    auto run = [&](std::size_t i) {
        const Dataset ds = make_experiment_data(cells[i].n, config.d, labels, cells[i].seed);
        rows[i] = run_method(config.method, ds, config.epsilon, cells[i].seed);
        rows[i].net = {};
    };
    if (config.parallel) parallel_for(cells.size(), run);
    else
        for (std::size_t i = 0; i < cells.size(); ++i) run(i);
    return rows;
}

std::string sweep_to_csv(const std::vector<FitOutcome>& rows) {
    std::string out = "method,n,d,seed,epsilon,m,k,kd_bound,total_weight,error_ratio,max_residual,trimmed_out\n";
    char buffer[512];
    for (const auto& r : rows) {
        const std::string eps = r.epsilon ? std::to_string(*r.epsilon) : "";
        std::snprintf(buffer, sizeof buffer, "%s,%td,%td,%llu,%s,%d,%td,%.10g,%.10g,%.10g,%.10g,%td\n",
                      std::string(to_string(r.method)).c_str(), static_cast<std::ptrdiff_t>(r.n),
                      static_cast<std::ptrdiff_t>(r.d), static_cast<unsigned long long>(r.seed), eps.c_str(), r.m,
                      static_cast<std::ptrdiff_t>(r.k), r.kd_bound, r.total_weight, r.error_ratio, r.max_residual,
                      static_cast<std::ptrdiff_t>(r.trimmed_out));
        out += buffer;
    }
    return out;
}

}  // namespace memnet
