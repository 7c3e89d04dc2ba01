#include <doctest.h>

#include <cmath>
#include <vector>

#include <json.hpp>

#include "memnet/bounds.hpp"
#include "memnet/constructive.hpp"
#include "memnet/data.hpp"
#include "memnet/error.hpp"
#include "memnet/harmonic.hpp"
#include "memnet/ntk.hpp"
#include "memnet/random.hpp"
#include "memnet/stats.hpp"

using namespace memnet;

TEST_SUITE("bounds") {

TEST_CASE("Baum ReLU fit clears the weight floor by a wide margin") {
    Dataset ds = rademacher_labels(sample_sphere(200, 20, 1), 2);
    WeightBoundReport report = verify_weight_bound(ds, {{"baum-relu", baum_relu_fit(ds, 3)}});
    CHECK(report.bound == doctest::Approx(std::sqrt(200.0) / 8.0));
    REQUIRE(report.entries.size() == 1);
    const WeightBoundEntry& e = report.entries[0];
    CHECK(e.hypothesis_met);
    CHECK_FALSE(e.falsified);
    CHECK(e.total_weight >= 10.0 * report.bound);
    CHECK_FALSE(report.falsified());
}

TEST_CASE("harmonic and NTK fits respect the floor") {
    Dataset ds = rademacher_labels(sample_sphere(100, 60, 4), 5);
    HarmonicOptions options;
    options.epsilon = 0.4;
    HarmonicFitResult harmonic = harmonic_fit(ds, 6, options);
    NtkFitResult ntk = ntk_fit(ds, 0.4, 7);
    WeightBoundReport report = verify_weight_bound(ds, {{"harmonic", harmonic.net}, {"ntk", ntk.net}});
    for (const auto& e : report.entries) {
        CHECK(e.total_weight >= report.bound);
        CHECK_FALSE(e.falsified);
    }
    // The NTK fit reaches error 0.4 on every point, so its entry is checked.
    CHECK(report.entries[1].hypothesis_met);
}

TEST_CASE("networks that do not half-fit are exempt") {
    Dataset ds = rademacher_labels(sample_sphere(50, 5, 1), 2);
    TwoLayerNetwork tiny;
    tiny.dim = 5;
    tiny.neurons.push_back({1e-6, Eigen::VectorXd::Ones(5), 0.0});
    WeightBoundReport report = verify_weight_bound(ds, {{"tiny", tiny}});
    CHECK_FALSE(report.entries[0].hypothesis_met);
    CHECK_FALSE(report.entries[0].falsified);
    CHECK(report.entries[0].total_weight < report.bound);
    auto doc = nlohmann::json::parse(report_to_json(report));
    CHECK(doc["constructions"][0]["status"] == "exempt");
}

TEST_CASE("activations without a finite Lipschitz constant are exempt") {
    Dataset ds = binary_labels(sample_sphere(40, 8, 1), 10, 2);
    TwoLayerNetwork step = baum_threshold_fit(ds, 1);
    Dataset signs = ds;
    signs.labels = 2.0 * ds.labels.array() - 1.0;
    TwoLayerNetwork shifted = step;
    for (auto& neuron : shifted.neurons) neuron.a *= 2.0;
    shifted.neurons.push_back({-1.0, Eigen::VectorXd::Zero(8), 0.0});
    CHECK(error_ratio(evaluate(shifted, signs), signs.labels) <= 1e-20);
    WeightBoundReport report = verify_weight_bound(signs, {{"threshold", shifted}});
    CHECK(std::isinf(report.entries[0].lipschitz));
    CHECK_FALSE(report.entries[0].hypothesis_met);
    auto doc = nlohmann::json::parse(report_to_json(report));
    CHECK(doc["constructions"][0]["status"] == "exempt");
}

TEST_CASE("the flag fires when the supplied Lipschitz constant is wrong") {
    Dataset ds = rademacher_labels(sample_sphere(100, 20, 1), 2);
    WeightBoundReport report = verify_weight_bound(ds, {{"baum-relu", baum_relu_fit(ds, 1)}}, 1e-9);
    CHECK(report.entries[0].falsified);
    CHECK(report.falsified());
    auto doc = nlohmann::json::parse(report_to_json(report));
    CHECK(doc["constructions"][0]["status"] == "FALSIFICATION");
}

TEST_CASE("labels must be signs") {
    Dataset ds = gaussian_labels(sample_sphere(10, 3, 1), 2);
    CHECK_THROWS_AS(verify_weight_bound(ds, {}), DataError);
    CHECK_THROWS_AS(verify_weight_bound(rademacher_labels(ds, 1), {}, 0.0), ParameterError);
}

TEST_CASE("explicit Lipschitz constant scales the bound") {
    Dataset ds = rademacher_labels(sample_sphere(64, 5, 1), 2);
    WeightBoundReport report = verify_weight_bound(ds, {}, 2.0);
    CHECK(report.bound == doctest::Approx(8.0 / 16.0));
}

TEST_CASE("constant labels: the bias-only neuron correlates with every point") {
    Dataset ds = make_dataset(sample_sphere(30, 4, 1).points, Eigen::VectorXd::Ones(30));
    CHECK(single_neuron_correlation(ds, Eigen::VectorXd::Zero(4), -1.0) == doctest::Approx(30.0));
}

TEST_CASE("normalized correlation is scale invariant") {
    Dataset ds = rademacher_labels(sample_sphere(50, 6, 3), 4);
    Rng rng = make_rng(5);
    for (int t = 0; t < 20; ++t) {
        Eigen::VectorXd w = gaussian_vector(6, rng);
        const double b = 0.3 * std::normal_distribution<double>()(rng);
        const double base = single_neuron_correlation(ds, w, b);
        for (double c : {0.01, 3.0, 1e4})
            CHECK(std::abs(single_neuron_correlation(ds, c * w, c * b) - base) <= 1e-10 * std::max(1.0, std::abs(base)));
    }
}

TEST_CASE("correlation cap stays below 2 sqrt(n) plus slack") {
    const Index n = 400;
    std::vector<double> caps;
    for (std::uint64_t s = 0; s < 5; ++s) {
        Dataset ds = rademacher_labels(sample_sphere(n, 10, s), s + 100);
        CorrelationCap cap = single_neuron_correlation_cap(ds, 200, s);
        CHECK(cap.value == doctest::Approx(single_neuron_correlation(ds, cap.w, cap.b)).epsilon(1e-10));
        caps.push_back(cap.value);
    }
    const double slack = 3.0 * stddev(caps);
    for (double c : caps) CHECK(c <= 2.0 * std::sqrt(double(n)) + slack);
}

TEST_CASE("correlation cap is at least the linear-neuron sanity floor") {
    const Index n = 100;
    std::vector<double> caps;
    for (std::uint64_t s = 0; s < 10; ++s) {
        Dataset ds = rademacher_labels(sample_sphere(n, 20, s), s + 7);
        caps.push_back(single_neuron_correlation_cap(ds, 50, s).value);
    }
    CHECK(mean(caps) >= std::sqrt(double(n) / 2.0));
}

}  // TEST_SUITE
