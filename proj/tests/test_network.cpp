#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <sstream>

#include <Eigen/Dense>

#include "memnet/data.hpp"
#include "memnet/network.hpp"
#include "memnet/random.hpp"

using namespace memnet;

namespace {

double naive_relu_network(const std::vector<Neuron>& neurons, const Eigen::VectorXd& x) {
    double sum = 0.0;
    for (const Neuron& nr : neurons) {
        double pre = nr.b;
        for (Index k = 0; k < x.size(); ++k) pre += nr.w[k] * x[k];
        sum += nr.a * (pre > 0.0 ? pre : 0.0);
    }
    return sum;
}

TwoLayerNetwork random_relu_net(Index d, int k, std::uint64_t seed) {
    Rng rng = make_rng(seed);
    TwoLayerNetwork net;
    net.dim = d;
    std::normal_distribution<double> normal;
    for (int l = 0; l < k; ++l) net.neurons.push_back({normal(rng), gaussian_vector(d, rng), normal(rng)});
    return net;
}

/// Values with r.f = alpha |r|^2 and |f|^2 = beta |r|^2.
Eigen::VectorXd synthetic_step(const Eigen::VectorXd& r, double alpha, double beta) {
    Eigen::VectorXd e = Eigen::VectorXd::LinSpaced(r.size(), 1.0, 2.0);
    e -= (e.dot(r) / r.squaredNorm()) * r;
    e.normalize();
    return alpha * r + std::sqrt(beta - alpha * alpha) * r.norm() * e;
}

}  // namespace

TEST_SUITE("network") {

TEST_CASE("empty network evaluates to zero and has zero weight") {
    TwoLayerNetwork net;
    net.dim = 3;
    Dataset ds = sample_sphere(5, 3, 0);
    CHECK(evaluate(net, ds).isZero());
    CHECK(total_weight(net) == 0.0);
}

TEST_CASE("single ReLU neuron on e1 and -e1") {
    TwoLayerNetwork net;
    net.dim = 2;
    net.neurons.push_back({1.0, Eigen::Vector2d(1.0, 0.0), 0.0});
    Eigen::MatrixXd x(2, 2);
    x << 1, 0, -1, 0;
    Eigen::VectorXd f = evaluate(net, x);
    CHECK(f[0] == 1.0);
    CHECK(f[1] == 0.0);
}

TEST_CASE("evaluation matches a scalar oracle") {
    TwoLayerNetwork net = random_relu_net(4, 5, 3);
    Dataset ds = sample_sphere(10, 4, 4);
    Eigen::VectorXd f = evaluate(net, ds);
    for (Index i = 0; i < ds.n(); ++i)
        CHECK(std::abs(f[i] - naive_relu_network(net.neurons, ds.points.row(i).transpose())) <= 1e-12);
}

TEST_CASE("evaluation rejects a dimension mismatch") {
    TwoLayerNetwork net = random_relu_net(4, 2, 3);
    CHECK_THROWS_AS(evaluate(net, sample_sphere(3, 5, 0)), ParameterError);
}

TEST_CASE("activations") {
    CHECK(Activation::relu()(-0.5) == 0.0);
    CHECK(Activation::relu()(0.5) == 0.5);
    CHECK(Activation::threshold()(0.0) == 1.0);
    CHECK(Activation::threshold()(-1e-300) == 0.0);
    const double x = 0.7;
    CHECK(Activation::hermite(3)(x) == doctest::Approx((x * x * x - 3 * x) / std::sqrt(6.0)).epsilon(1e-14));
    Activation tab = Activation::tabulated({0.0, 1.0, 3.0}, {0.0, 2.0, 0.0});
    CHECK(tab(0.5) == doctest::Approx(1.0));
    CHECK(tab(2.0) == doctest::Approx(1.0));
    CHECK(tab(-4.0) == 0.0);
    CHECK(tab(9.0) == 0.0);
    CHECK(tab.lipschitz() == doctest::Approx(2.0));
    CHECK(Activation::relu().lipschitz() == 1.0);
    CHECK(std::isinf(Activation::threshold().lipschitz()));
    CHECK_THROWS_AS(Activation::tabulated({1.0, 0.0}, {0.0, 1.0}), ParameterError);
}

TEST_CASE("total weight of a=2, w=(3,4), b=0 is 10") {
    TwoLayerNetwork net;
    net.dim = 2;
    net.neurons.push_back({2.0, Eigen::Vector2d(3.0, 4.0), 0.0});
    CHECK(total_weight(net) == doctest::Approx(10.0));
    net.neurons.push_back({-1.0, Eigen::Vector2d(0.0, 0.0), -3.0});
    CHECK(total_weight(net) == doctest::Approx(13.0));
}

TEST_CASE("total weight is additive under concatenation") {
    for (std::uint64_t s = 0; s < 10; ++s) {
        TwoLayerNetwork a = random_relu_net(3, 4, s);
        TwoLayerNetwork b = random_relu_net(3, 7, s + 100);
        TwoLayerNetwork c = concatenate(a, b);
        CHECK(c.size() == 11);
        CHECK(total_weight(c) == doctest::Approx(total_weight(a) + total_weight(b)).epsilon(1e-12));
    }
}

TEST_CASE("append scales outer coefficients") {
    TwoLayerNetwork a = random_relu_net(3, 2, 1);
    TwoLayerNetwork b = random_relu_net(3, 3, 2);
    TwoLayerNetwork c = a;
    c.append(b, -2.5);
    Dataset ds = sample_sphere(6, 3, 0);
    Eigen::VectorXd expected = evaluate(a, ds) - 2.5 * evaluate(b, ds);
    CHECK((evaluate(c, ds) - expected).norm() <= 1e-12);
    TwoLayerNetwork other = random_relu_net(4, 1, 0);
    CHECK_THROWS_AS(c.append(other), ParameterError);
}

TEST_CASE("error ratio") {
    Eigen::VectorXd y(2), f(2);
    y << 1, -1;
    f << 0, -1;
    CHECK(error_ratio(f, y) == doctest::Approx(0.5));
    CHECK(error_ratio(Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(2)) == 0.0);
}

TEST_CASE("oracle step kills the residual in one iteration") {
    Dataset ds = gaussian_labels(sample_sphere(12, 3, 1), 2);
    StepBuilder oracle = [&](const Eigen::VectorXd& r, int, int) {
        Step s;
        s.net.dim = ds.d();
        s.values = r;
        return s;
    };
    BoostOptions options;
    options.epsilon = 0.01;
    FitResult fit = boost_fit(oracle, ds, options);
    CHECK(fit.trace.iterations.size() == 1);
    CHECK(fit.trace.iterations[0].eta == doctest::Approx(1.0));
    CHECK(fit.trace.final_error_ratio <= 1e-28);
    CHECK(fit.trace.converged);
}

TEST_CASE("synthetic steps contract the residual by 1 - alpha^2 / beta") {
    Dataset ds = gaussian_labels(sample_sphere(20, 3, 1), 5);
    const double alpha = 0.3, beta = 1.7;
    StepBuilder builder = [&](const Eigen::VectorXd& r, int, int) {
        Step s;
        s.net.dim = ds.d();
        s.values = synthetic_step(r, alpha, beta);
        return s;
    };
    BoostOptions options;
    options.epsilon = 0.05;
    FitResult fit = boost_fit(builder, ds, options);
    double previous = fit.trace.initial_residual_sq;
    for (const FitIteration& it : fit.trace.iterations) {
        CHECK(std::abs(it.residual_sq / previous - (1.0 - alpha * alpha / beta)) <= 1e-10);
        previous = it.residual_sq;
    }
}

TEST_CASE("iteration count obeys beta / alpha^2 log(1 / eps) in both step modes") {
    Dataset ds = gaussian_labels(sample_sphere(30, 3, 1), 6);
    const double alpha = 0.1, beta = 1.0, eps = 0.01;
    const auto bound = static_cast<std::size_t>(std::ceil(beta / (alpha * alpha) * std::log(1.0 / eps)));
    CHECK(bound == 461);
    StepBuilder builder = [&](const Eigen::VectorXd& r, int, int) {
        Step s;
        s.net.dim = ds.d();
        s.values = synthetic_step(r, alpha, beta);
        return s;
    };
    BoostOptions adaptive;
    adaptive.epsilon = eps;
    FitResult a = boost_fit(builder, ds, adaptive);
    CHECK(a.trace.iterations.size() <= bound);
    CHECK(a.trace.final_error_ratio <= eps);

    BoostOptions fixed = adaptive;
    fixed.fixed_eta = alpha / beta;
    FitResult f = boost_fit(builder, ds, fixed);
    CHECK(f.trace.iterations.size() <= bound);
    CHECK(f.trace.final_error_ratio <= eps);
}

TEST_CASE("ReLU boosting: monotone residual, Pythagoras and weight accounting") {
    Dataset ds = rademacher_labels(sample_sphere(40, 6, 3), 4);
    StepBuilder builder = [&](const Eigen::VectorXd& r, int iter, int attempt) {
        TwoLayerNetwork net = random_relu_net(ds.d(), 1, derive_seed(7, iter, attempt));
        net.neurons[0].a = 1.0;
        Step s{net, evaluate(net, ds)};
        if (r.dot(s.values) < 0.0) {
            s.net.neurons[0].a = -1.0;
            s.values = -s.values;
        }
        return s;
    };
    BoostOptions options;
    options.epsilon = 0.5;
    FitResult fit = boost_fit(builder, ds, options);
    double previous = fit.trace.initial_residual_sq;
    double weight = 0.0;
    for (const FitIteration& it : fit.trace.iterations) {
        CHECK(it.residual_sq <= previous);
        const double pythagoras = previous - it.correlation * it.correlation / it.step_norm_sq;
        CHECK(std::abs(it.residual_sq - pythagoras) <= 1e-9 * previous);
        weight += it.added_weight;
        previous = it.residual_sq;
    }
    CHECK(std::abs(weight - total_weight(fit.net)) <= 1e-10 * weight);
    CHECK(std::abs(fit.trace.total_weight - total_weight(fit.net)) <= 1e-12 * weight);
    CHECK(error_ratio(evaluate(fit.net, ds), ds.labels) == doctest::Approx(fit.trace.final_error_ratio).epsilon(1e-9));
}

TEST_CASE("non-positive steps exhaust the retry budget") {
    Dataset ds = rademacher_labels(sample_sphere(10, 3, 3), 4);
    StepBuilder bad = [&](const Eigen::VectorXd& r, int, int) {
        Step s;
        s.net.dim = ds.d();
        s.values = -r;
        return s;
    };
    BoostOptions options;
    options.retry_budget = 5;
    try {
        boost_fit(bad, ds, options);
        FAIL("expected ConvergenceError");
    } catch (const ConvergenceError& e) {
        CHECK(e.trace().rejected_steps == 5);
        CHECK_FALSE(e.trace().converged);
    }
}

TEST_CASE("zero-step signals are resampled") {
    Dataset ds = rademacher_labels(sample_sphere(10, 3, 3), 4);
    StepBuilder flaky = [&](const Eigen::VectorXd& r, int, int attempt) {
        if (attempt < 2) throw ZeroStepError("empty");
        Step s;
        s.net.dim = ds.d();
        s.values = r;
        return s;
    };
    FitResult fit = boost_fit(flaky, ds, BoostOptions{});
    CHECK(fit.trace.rejected_steps == 2);
    CHECK(fit.trace.iterations.size() == 1);
}

TEST_CASE("iteration cap raises with the trace") {
    Dataset ds = gaussian_labels(sample_sphere(10, 3, 3), 4);
    StepBuilder slow = [&](const Eigen::VectorXd& r, int, int) {
        Step s;
        s.net.dim = ds.d();
        s.values = synthetic_step(r, 0.01, 1.0);
        return s;
    };
    BoostOptions options;
    options.max_iters = 3;
    try {
        boost_fit(slow, ds, options);
        FAIL("expected ConvergenceError");
    } catch (const ConvergenceError& e) {
        CHECK(e.trace().iterations.size() == 3);
    }
    options.epsilon = 1.0;
    CHECK_THROWS_AS(boost_fit(slow, ds, options), ParameterError);
}

TEST_CASE("zero labels need no iterations") {
    Dataset ds = sample_sphere(5, 3, 0);
    StepBuilder never = [](const Eigen::VectorXd&, int, int) -> Step { throw std::logic_error("called"); };
    FitResult fit = boost_fit(never, ds, BoostOptions{});
    CHECK(fit.net.empty());
    CHECK(fit.trace.iterations.empty());
}

TEST_CASE("network JSON round-trips") {
    TwoLayerNetwork net = random_relu_net(3, 4, 9);
    TwoLayerNetwork back = network_from_json(network_to_json(net));
    REQUIRE(back.size() == net.size());
    for (std::size_t l = 0; l < net.size(); ++l) {
        CHECK(back.neurons[l].a == net.neurons[l].a);
        CHECK(back.neurons[l].w == net.neurons[l].w);
        CHECK(back.neurons[l].b == net.neurons[l].b);
    }
    TwoLayerNetwork herm;
    herm.activation = Activation::hermite(4);
    herm.dim = 2;
    herm.neurons.push_back({1.0, Eigen::Vector2d(1.0, 2.0), 0.5});
    TwoLayerNetwork hb = network_from_json(network_to_json(herm));
    CHECK(hb.activation.kind == ActivationKind::hermite);
    CHECK(hb.activation.degree == 4);
    CHECK_THROWS_AS(network_from_json("{not json"), DataError);
}

TEST_CASE("trace CSV has a header and one row per iteration") {
    FitTrace trace;
    trace.iterations.resize(3);
    std::istringstream csv(trace_to_csv(trace));
    std::string line;
    int lines = 0;
    std::getline(csv, line);
    CHECK(line.rfind("iteration,residual_sq", 0) == 0);
    while (std::getline(csv, line)) ++lines;
    CHECK(lines == 3);
}

}  // TEST_SUITE
