#include "memnet/network.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "memnet/hermite.hpp"

namespace memnet {

Activation Activation::hermite(int m) {
    if (m < 0) throw ParameterError("hermite activation needs degree >= 0");
    return {ActivationKind::hermite, m, {}, {}};
}

Activation Activation::tabulated(std::vector<double> knots, std::vector<double> values) {
    if (knots.size() < 2 || knots.size() != values.size())
        throw ParameterError("tabulated activation needs >= 2 matching knots and values");
    if (!std::is_sorted(knots.begin(), knots.end()) ||
        std::adjacent_find(knots.begin(), knots.end()) != knots.end())
        throw ParameterError("tabulated activation knots must be strictly increasing");
    return {ActivationKind::tabulated, 0, std::move(knots), std::move(values)};
}

double Activation::operator()(double t) const {
    switch (kind) {
        case ActivationKind::relu: return t > 0.0 ? t : 0.0;
        case ActivationKind::threshold: return t >= 0.0 ? 1.0 : 0.0;
        case ActivationKind::hermite: return hermite_eval(degree, t);
        case ActivationKind::tabulated: {
            if (t <= knots.front()) return values.front();
            if (t >= knots.back()) return values.back();
            const auto hi = std::upper_bound(knots.begin(), knots.end(), t);
            const auto k = static_cast<std::size_t>(hi - knots.begin());
            const double s = (t - knots[k - 1]) / (knots[k] - knots[k - 1]);
            return values[k - 1] + s * (values[k] - values[k - 1]);
        }
    }
    return 0.0;
}

double Activation::lipschitz() const {
    switch (kind) {
        case ActivationKind::relu: return 1.0;
        case ActivationKind::threshold:
        case ActivationKind::hermite: return std::numeric_limits<double>::infinity();
        case ActivationKind::tabulated: {
            double lip = 0.0;
            for (std::size_t k = 1; k < knots.size(); ++k)
                lip = std::max(lip, std::abs(values[k] - values[k - 1]) / (knots[k] - knots[k - 1]));
            return lip;
        }
    }
    return 0.0;
}

std::string Activation::name() const {
    switch (kind) {
        case ActivationKind::relu: return "relu";
        case ActivationKind::threshold: return "threshold";
        case ActivationKind::hermite: return "hermite";
        case ActivationKind::tabulated: return "tabulated";
    }
    return "relu";
}

void TwoLayerNetwork::append(const TwoLayerNetwork& other, double scale) {
    if (other.empty()) return;
    if (dim == 0) dim = other.dim;
    if (other.dim != dim) throw ParameterError("cannot append networks of different input dimension");
    if (empty()) activation = other.activation;
    else if (other.activation.name() != activation.name() || other.activation.degree != activation.degree)
        throw ParameterError("cannot append networks with different activations");
    for (const auto& neuron : other.neurons) neurons.push_back({neuron.a * scale, neuron.w, neuron.b});
}

TwoLayerNetwork concatenate(const TwoLayerNetwork& first, const TwoLayerNetwork& second) {
    TwoLayerNetwork out = first;
    out.append(second);
    return out;
}

Eigen::VectorXd evaluate(const TwoLayerNetwork& net, const Eigen::MatrixXd& points) {
    const Index n = points.rows();
    if (net.empty()) return Eigen::VectorXd::Zero(n);
    if (net.dim != points.cols())
        throw ParameterError("network dimension " + std::to_string(net.dim) +
                             " does not match data dimension " + std::to_string(points.cols()));
    const Index k = static_cast<Index>(net.size());
    Eigen::MatrixXd weights(net.dim, k);
    Eigen::RowVectorXd biases(k);
    Eigen::VectorXd outer(k);
    for (Index l = 0; l < k; ++l) {
        const auto& neuron = net.neurons[static_cast<std::size_t>(l)];
        weights.col(l) = neuron.w;
        biases(l) = neuron.b;
        outer(l) = neuron.a;
    }
    Eigen::MatrixXd pre = points * weights;
    pre.rowwise() += biases;
    const Activation& psi = net.activation;
    if (psi.kind == ActivationKind::relu) pre = pre.cwiseMax(0.0);
    else pre = pre.unaryExpr([&psi](double t) { return psi(t); });
    return pre * outer;
}

Eigen::VectorXd evaluate(const TwoLayerNetwork& net, const Dataset& ds) {
    return evaluate(net, ds.points);
}

double total_weight(const TwoLayerNetwork& net) {
    double total = 0.0;
    for (const auto& neuron : net.neurons)
        total += std::abs(neuron.a) * std::sqrt(neuron.w.squaredNorm() + neuron.b * neuron.b);
    return total;
}

double error_ratio(const Eigen::VectorXd& values, const Eigen::VectorXd& labels) {
    const double denom = labels.squaredNorm();
    const double num = (values - labels).squaredNorm();
    if (denom == 0.0) return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return num / denom;
}

FitResult boost_fit(const StepBuilder& builder, const Dataset& ds, const BoostOptions& options) {
    if (!(options.epsilon > 0.0 && options.epsilon < 1.0))
        throw ParameterError("boost_fit: epsilon must lie in (0, 1)");
    if (options.max_iters < 0) throw ParameterError("boost_fit: max_iters must be >= 0");

    FitResult result;
    result.net.dim = ds.d();
    FitTrace& trace = result.trace;
    Eigen::VectorXd residual = ds.labels;
    const double target = options.epsilon * ds.labels.squaredNorm();
    trace.initial_residual_sq = residual.squaredNorm();

    auto finish = [&] {
        trace.final_error_ratio = error_ratio(ds.labels - residual, ds.labels);
        trace.total_weight = total_weight(result.net);
    };

    for (int iter = 0; residual.squaredNorm() > target; ++iter) {
        if (iter >= options.max_iters) {
            finish();
            throw ConvergenceError("boost_fit: no convergence within " +
                                       std::to_string(options.max_iters) + " iterations",
                                   trace);
        }
        std::optional<Step> accepted;
        double correlation = 0.0;
        for (int attempt = 0; attempt < options.retry_budget && !accepted; ++attempt) {
            Step step;
            try {
                step = builder(residual, iter, attempt);
            } catch (const ZeroStepError&) {
                ++trace.rejected_steps;
                continue;
            }
            if (step.values.size() != residual.size())
                throw ParameterError("boost_fit: step values have the wrong length");
            correlation = residual.dot(step.values);
            if (correlation > 0.0 && step.values.squaredNorm() > 0.0) accepted = std::move(step);
            else ++trace.rejected_steps;
        }
        if (!accepted) {
            finish();
            throw ConvergenceError("boost_fit: retry budget exhausted at iteration " +
                                       std::to_string(iter),
                                   trace);
        }
        const double norm_sq = accepted->values.squaredNorm();
        const double eta = options.fixed_eta ? *options.fixed_eta : correlation / norm_sq;
        const double before = residual.squaredNorm();
        residual -= eta * accepted->values;
        const double after = residual.squaredNorm();
        if (!options.fixed_eta && after > before * (1.0 + 1e-12))
            throw std::logic_error("boost_fit: exact line search increased the residual");

        result.net.append(accepted->net, eta);
        FitIteration row;
        row.residual_sq = after;
        row.correlation = correlation;
        row.step_norm_sq = norm_sq;
        row.eta = eta;
        row.neurons_added = static_cast<int>(accepted->net.size());
        row.active_set_size = ds.n();
        row.added_weight = std::abs(eta) * total_weight(accepted->net);
        trace.iterations.push_back(row);
    }
    trace.converged = true;
    finish();
    return result;
}

std::string network_to_json(const TwoLayerNetwork& net) {
    nlohmann::ordered_json doc;
    doc["activation"] = net.activation.name();
    if (net.activation.kind == ActivationKind::hermite) doc["degree"] = net.activation.degree;
    if (net.activation.kind == ActivationKind::tabulated) {
        doc["knots"] = net.activation.knots;
        doc["values"] = net.activation.values;
    }
    doc["dim"] = net.dim;
    nlohmann::ordered_json neurons = nlohmann::ordered_json::array();
    for (const auto& neuron : net.neurons) {
        nlohmann::ordered_json item;
        item["a"] = neuron.a;
        item["w"] = std::vector<double>(neuron.w.data(), neuron.w.data() + neuron.w.size());
        item["b"] = neuron.b;
        neurons.push_back(std::move(item));
    }
    doc["neurons"] = std::move(neurons);
    return doc.dump(1);
}

TwoLayerNetwork network_from_json(const std::string& text) {
    try {
        const auto doc = nlohmann::json::parse(text);
        TwoLayerNetwork net;
        const std::string kind = doc.at("activation").get<std::string>();
        if (kind == "relu") net.activation = Activation::relu();
        else if (kind == "threshold") net.activation = Activation::threshold();
        else if (kind == "hermite") net.activation = Activation::hermite(doc.at("degree").get<int>());
        else if (kind == "tabulated")
            net.activation = Activation::tabulated(doc.at("knots").get<std::vector<double>>(),
                                                   doc.at("values").get<std::vector<double>>());
        else throw DataError("unknown activation '" + kind + "'");
        net.dim = doc.value("dim", Index{0});
        for (const auto& item : doc.at("neurons")) {
            const auto w = item.at("w").get<std::vector<double>>();
            Neuron neuron;
            neuron.a = item.at("a").get<double>();
            neuron.b = item.at("b").get<double>();
            neuron.w = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Index>(w.size()));
            if (net.dim == 0) net.dim = neuron.w.size();
            if (neuron.w.size() != net.dim) throw DataError("neuron weight length mismatch");
            net.neurons.push_back(std::move(neuron));
        }
        return net;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed network JSON: ") + e.what());
    }
}

void save_network(const TwoLayerNetwork& net, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
    out << network_to_json(net) << '\n';
}

TwoLayerNetwork load_network(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return network_from_json(buffer.str());
}

std::string trace_to_csv(const FitTrace& trace) {
    std::ostringstream out;
    out.precision(17);
    out << "iteration,residual_sq,correlation,step_norm_sq,eta,neurons_added,active_set_size,added_weight\n";
    for (std::size_t i = 0; i < trace.iterations.size(); ++i) {
        const auto& it = trace.iterations[i];
        out << i << ',' << it.residual_sq << ',' << it.correlation << ',' << it.step_norm_sq << ','
            << it.eta << ',' << it.neurons_added << ',' << it.active_set_size << ','
            << it.added_weight << '\n';
    }
    return out.str();
}

}  // namespace memnet
