#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "memnet/data.hpp"
#include "memnet/error.hpp"
#include "memnet/hermite.hpp"
#include "memnet/ntk.hpp"
#include "memnet/random.hpp"
#include "memnet/stats.hpp"

using namespace memnet;

namespace {

Eigen::VectorXd naive_v(const Eigen::MatrixXd& x, const Eigen::VectorXd& r, const Eigen::VectorXd& u) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(x.cols());
    for (Index i = 0; i < x.rows(); ++i) {
        double dot = 0.0;
        for (Index k = 0; k < x.cols(); ++k) dot += u[k] * x(i, k);
        if (dot >= 0.0)
            for (Index k = 0; k < x.cols(); ++k) v[k] += r[i] * x(i, k);
    }
    return v;
}

/// Orthant probability P(u.xi >= 0, u.xj >= 0) = 1/4 + arcsin(rho) / (2 pi).
double orthant_entry(const Eigen::VectorXd& xi, const Eigen::VectorXd& xj) {
    const double rho = xi.dot(xj) / (xi.norm() * xj.norm());
    return xi.dot(xj) * (0.25 + std::asin(rho) / (2.0 * std::numbers::pi));
}

}  // namespace

TEST_SUITE("ntk") {

TEST_CASE("single point step") {
    Eigen::MatrixXd x(1, 3);
    x << 1, 0, 0;
    Dataset ds = make_dataset(x, Eigen::VectorXd::Ones(1));
    int found = 0;
    for (std::uint64_t s = 0; s < 20; ++s) {
        try {
            NtkStep step = ntk_step(ds, ds.labels, s);
            CHECK(step.pair.v.isApprox(Eigen::Vector3d(1, 0, 0)));
            CHECK(step.correlation == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(step.pair.b == 0.0);
            ++found;
        } catch (const ZeroStepError&) {
            // u . x < 0 leaves the active half-space empty.
        }
    }
    CHECK(found > 0);
    CHECK(found < 20);
}

TEST_CASE("step identities: v, r.f = |v|^2 and the variance bound") {
    Dataset ds = rademacher_labels(sample_sphere(80, 12, 3), 4);
    const double lambda = max_eigenvalue(ds.points.transpose() * ds.points);
    Rng rng = make_rng(9);
    for (std::uint64_t s = 0; s < 50; ++s) {
        Eigen::VectorXd r = gaussian_vector(ds.n(), rng);
        NtkStep step = ntk_step(ds, r, s);
        CHECK((step.pair.v - naive_v(ds.points, r, step.pair.u)).norm() <= 1e-12 * step.pair.v.norm());
        CHECK(std::abs(step.correlation - step.v_norm_sq) <= 1e-9 * step.v_norm_sq);
        CHECK(std::abs(r.dot(step.values) - step.correlation) <= 1e-9 * step.v_norm_sq);
        CHECK(step.values.squaredNorm() <= lambda * step.correlation * (1.0 + 1e-9));
        CHECK((step.values - step.pair.derivative_values(ds.points)).norm() <= 1e-9 * step.values.norm());
    }
    CHECK_THROWS_AS(ntk_step(ds, Eigen::VectorXd::Ones(3), 0), ParameterError);
}

TEST_CASE("mean step correlation exceeds the Thm-style bound over 200 seeds") {
    Dataset ds = rademacher_labels(sample_sphere(100, 20, 1), 2);
    const GenericityReport g = genericity(ds);
    std::vector<double> ratios;
    for (std::uint64_t s = 0; s < 200; ++s) {
        try {
            ratios.push_back(ntk_step(ds, ds.labels, s).correlation / ds.labels.squaredNorm());
        } catch (const ZeroStepError&) {
            ratios.push_back(0.0);
        }
    }
    CHECK(lower_confidence_bound(ratios) >= ntk_correlation_bound(clamped_gamma(g, ds.n()), ds.n()));
}

TEST_CASE("orthonormal data converges in a few steps") {
    const Index d = 8;
    Dataset ds = make_dataset(Eigen::MatrixXd::Identity(d, d), Eigen::VectorXd::LinSpaced(d, -1.0, 2.0));
    NtkFitResult fit = ntk_fit(ds, 0.5, 3);
    CHECK(fit.trace.converged);
    CHECK(fit.net.size() <= 10);
    CHECK(fit.gamma == doctest::Approx(1.0 / 16.0));
    CHECK_FALSE(fit.trace.notes.empty());
}

TEST_CASE("NTK fit on 300 points in d=50 meets the error and size bound") {
    Dataset ds = rademacher_labels(sample_sphere(300, 50, 5), 6);
    NtkFitResult fit = ntk_fit(ds, 0.1, 7);
    CHECK(error_ratio(evaluate(fit.net, ds), ds.labels) <= 0.1);
    CHECK(double(fit.kd) <= fit.kd_bound);
    CHECK(fit.kd == Index(fit.net.size()) * 50);
    CHECK(fit.kd_bound == doctest::Approx(ntk_kd_bound(fit.genericity.omega, fit.gamma, 300, 0.1)));

    std::vector<double> it, logr;
    for (std::size_t i = 0; i < fit.trace.iterations.size(); ++i) {
        it.push_back(double(i));
        logr.push_back(std::log(fit.trace.iterations[i].residual_sq));
    }
    CHECK(fit_line(it, logr).slope < 0.0);
}

TEST_CASE("zero labels give an empty network") {
    Dataset ds = sample_sphere(20, 5, 1);
    NtkFitResult fit = ntk_fit(ds, 0.1, 1);
    CHECK(fit.net.empty());
    CHECK(fit.trace.iterations.empty());
}

TEST_CASE("NTK fit is reproducible and candidate pools do not change determinism") {
    Dataset ds = rademacher_labels(sample_sphere(60, 10, 2), 3);
    NtkOptions opts;
    opts.candidates = 4;
    NtkFitResult a = ntk_fit(ds, 0.3, 11, opts);
    NtkFitResult b = ntk_fit(ds, 0.3, 11, opts);
    CHECK(a.net.size() == b.net.size());
    CHECK(evaluate(a.net, ds) == evaluate(b.net, ds));
}

TEST_CASE("bound helpers") {
    CHECK(ntk_kd_bound(2.0, std::exp(-1.0), 50, std::exp(-1.0)) == doctest::Approx(20 * 2 * 50 * std::log(100.0)));
    CHECK(ntk_correlation_bound(std::exp(-2.0), 50) == doctest::Approx(0.1 * std::sqrt(2.0 / std::log(100.0))));
}

TEST_CASE("arcsin Gram: unit diagonal one half, orthogonal pairs zero") {
    Eigen::MatrixXd x(3, 3);
    x << 1, 0, 0, 0, 2, 0, 0.6, 0.8, 0;
    Eigen::MatrixXd h = arcsin_gram(x);
    CHECK(h(0, 0) == doctest::Approx(0.5));
    CHECK(h(1, 1) == doctest::Approx(2.0));
    CHECK(h(0, 1) == 0.0);
    CHECK(h(0, 2) == doctest::Approx(orthant_entry(x.row(0).transpose(), x.row(2).transpose())));
}

TEST_CASE("arcsin Gram entries match Monte Carlo") {
    Eigen::MatrixXd x(2, 3);
    x << 1, 0, 0, 0, 1, 0;
    CHECK(arcsin_gram_entry_mc(x.row(0).transpose(), x.row(0).transpose(), 1000000, 2).within(0.5));
    Dataset ds = sample_sphere(6, 4, 3);
    Eigen::MatrixXd h = arcsin_gram(ds.points);
    for (Index i = 0; i < 6; ++i)
        for (Index j = i + 1; j < 6; ++j)
            CHECK(arcsin_gram_entry_mc(ds.points.row(i).transpose(), ds.points.row(j).transpose(), 1000000,
                                       derive_seed(4, i, j))
                      .within(h(i, j)));
}

TEST_CASE("arcsin Gram is symmetric positive semidefinite") {
    Dataset ds = sample_sphere(60, 10, 8);
    Eigen::MatrixXd h = arcsin_gram(ds.points);
    CHECK((h - h.transpose()).norm() == 0.0);
    CHECK(min_eigenvalue(h) >= -1e-10);
}

TEST_CASE("Gram lower bound") {
    GramBound ortho = gram_lower_bound_check(make_dataset(Eigen::MatrixXd::Identity(5, 5), Eigen::VectorXd::Ones(5)));
    CHECK(ortho.lambda_min == doctest::Approx(0.5));
    CHECK(ortho.holds());
    for (std::uint64_t s = 0; s < 3; ++s) CHECK(gram_lower_bound_check(sample_sphere(100, 50, s)).holds());
}

TEST_CASE("Hadamard power of the coherence matrix") {
    for (std::uint64_t s = 0; s < 5; ++s) {
        Dataset ds = sample_sphere(30, 15, s);
        HadamardBound hb = hadamard_power_check(ds);
        const double gamma = genericity(ds).gamma;
        CHECK(hb.power == int(std::ceil(std::log(60.0) / std::log(1.0 / gamma))));
        CHECK(hb.holds());
        Eigen::MatrixXd vp = hadamard_power(coherence_matrix(ds.points), hb.power);
        CHECK(min_eigenvalue(vp) == doctest::Approx(hb.lambda_min));
        CHECK(vp.diagonal().isOnes(1e-12));
    }
    Eigen::MatrixXd m(2, 2);
    m << 2, -3, 0.5, 1;
    Eigen::MatrixXd cube = hadamard_power(m, 3);
    CHECK(cube(0, 1) == -27.0);
    CHECK(cube(1, 0) == 0.125);
}

TEST_CASE("generalized step with ReLU matches the NTK step correlation") {
    Dataset ds = rademacher_labels(sample_sphere(40, 8, 2), 3);
    auto relu_prime = [](double t) { return t >= 0.0 ? 1.0 : 0.0; };
    Activation relu = Activation::relu();
    GeneralStep step = general_ntk_step(ds, ds.labels, relu, relu_prime, 5);
    CHECK(step.correlation == doctest::Approx(step.v.squaredNorm()).epsilon(1e-4));
    CHECK(step.net.size() == 2);
}

TEST_CASE("generalized bound for ReLU is within a factor 2 of the NTK size bound") {
    Dataset ds = rademacher_labels(sample_sphere(100, 50, 3), 4);
    auto relu_prime = [](double t) { return t >= 0.0 ? 1.0 : 0.0; };
    const std::vector<double> breaks{0.0};
    HermiteExpansion e = expand_activation_derivative(relu_prime, 30, breaks);
    Activation relu = Activation::relu();
    GeneralNtkBound b = general_ntk_bound(ds, e, 1.0, 0.1, &relu, relu_prime, 100, 6);
    const double ntk = ntk_kd_bound(b.omega, b.gamma, 100, 0.1);
    CHECK(b.required_kd <= 2.0 * ntk);
    CHECK(b.required_kd >= 0.5 * ntk);
    CHECK(b.mean_correlation_ratio >= b.predicted_correlation_ratio);
}

TEST_CASE("generalized bound for a single Hermite coefficient") {
    Dataset ds = sample_sphere(40, 30, 3);
    HermiteExpansion e = expand_activation_derivative([](double t) { return hermite_eval(5, t); }, 8);
    GeneralNtkBound b = general_ntk_bound(ds, e, 1.0, 0.1);
    REQUIRE(b.threshold_index <= 5);
    CHECK(b.tail_sum == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(b.required_kd == doctest::Approx(16.0 * b.omega * 40 * std::log(10.0)).epsilon(1e-8));
}

TEST_CASE("generalized bound on orthonormal data uses the full energy") {
    Dataset ds = make_dataset(Eigen::MatrixXd::Identity(6, 6), Eigen::VectorXd::Ones(6));
    auto relu_prime = [](double t) { return t >= 0.0 ? 1.0 : 0.0; };
    const std::vector<double> breaks{0.0};
    HermiteExpansion e = expand_activation_derivative(relu_prime, 10, breaks);
    GeneralNtkBound b = general_ntk_bound(ds, e, 1.0, 0.1);
    CHECK(b.threshold_index <= 1);
    double expected = e.tail_mass;
    for (std::size_t l = std::size_t(b.threshold_index); l < e.coeffs.size(); ++l) expected += e.coeffs[l] * e.coeffs[l];
    CHECK(b.tail_sum == doctest::Approx(expected));
    if (b.threshold_index == 0) CHECK(b.tail_sum == doctest::Approx(e.energy).epsilon(1e-6));
}

TEST_CASE("generalized bound errors") {
    Dataset ds = sample_sphere(100, 50, 3);
    HermiteExpansion linear = expand_activation_derivative([](double t) { return t; }, 12);
    CHECK_THROWS_AS(general_ntk_bound(ds, linear, 1.0, 0.1), UninformativeBoundError);
    HermiteExpansion short_expansion = expand_activation_derivative([](double t) { return t; }, 1);
    CHECK_THROWS_AS(general_ntk_bound(ds, short_expansion, 1.0, 0.1), ParameterError);
}

}  // TEST_SUITE
