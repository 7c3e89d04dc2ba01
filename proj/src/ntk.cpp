#include "memnet/ntk.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "memnet/parallel.hpp"
#include "memnet/random.hpp"

namespace memnet {

namespace {

constexpr int kTieResamples = 100;

Eigen::VectorXd draw_direction(const Eigen::MatrixXd& points, Rng& rng, int& resamples) {
    for (int draw = 0; draw < kTieResamples; ++draw) {
        Eigen::VectorXd u = gaussian_vector(points.cols(), rng);
        if (((points * u).array() != 0.0).all()) return u;
        ++resamples;
    }
    throw DegenerateDataError("ntk_step: every draw of u had a point on u . x = 0");
}

}  // namespace

NtkStep ntk_step(const Dataset& ds, const Eigen::VectorXd& residual, std::uint64_t seed) {
    if (residual.size() != ds.n()) throw ParameterError("ntk_step: residual length must equal n");
    Rng rng = make_rng(derive_seed(seed, streams::ntk));
    NtkStep step;
    const Eigen::VectorXd u = draw_direction(ds.points, rng, step.resamples);
    const Eigen::VectorXd active = ((ds.points * u).array() >= 0.0).select(residual, 0.0);
    const Eigen::VectorXd v = ds.points.transpose() * active;
    step.v_norm_sq = v.squaredNorm();
    if (step.v_norm_sq == 0.0) throw ZeroStepError("ntk_step: v = 0");
    step.pair = {u, v, 0.0, safe_delta(ds.points, u, v, 0.0)};
    step.values = evaluate(step.pair.network(), ds);
    step.correlation = residual.dot(step.values);
    return step;
}

double ntk_kd_bound(double omega, double gamma, Index n, double epsilon) {
    return 20.0 * omega * static_cast<double>(n) * std::log(1.0 / epsilon) *
           std::log(2.0 * static_cast<double>(n)) / std::log(1.0 / gamma);
}

double ntk_correlation_bound(double gamma, Index n) {
    return 0.1 * std::sqrt(std::log(1.0 / gamma) / std::log(2.0 * static_cast<double>(n)));
}

NtkFitResult ntk_fit(const Dataset& ds, double epsilon, std::uint64_t seed, const NtkOptions& options) {
    if (options.candidates < 1) throw ParameterError("ntk_fit: candidates must be >= 1");
    NtkFitResult result;
    result.genericity = genericity(ds, seed);
    result.gamma = clamped_gamma(result.genericity, ds.n());

    const StepBuilder builder = [&](const Eigen::VectorXd& residual, int iteration, int attempt) {
        const std::uint64_t base =
            derive_seed(seed, static_cast<std::uint64_t>(iteration), static_cast<std::uint64_t>(attempt));
        std::vector<std::optional<NtkStep>> pool(static_cast<std::size_t>(options.candidates));
        auto run = [&](std::size_t c) {
            try {
                pool[c] = ntk_step(ds, residual, derive_seed(base, streams::ntk, c));
            } catch (const ZeroStepError&) {
            }
        };
        if (options.candidates == 1) run(0);
        else parallel_for(pool.size(), run);
        const NtkStep* best = nullptr;
        for (const auto& candidate : pool)
            if (candidate && (!best || candidate->v_norm_sq > best->v_norm_sq)) best = &*candidate;
        if (!best) throw ZeroStepError("ntk_fit: every candidate had v = 0");
        return Step{best->pair.network(), best->values};
    };

    BoostOptions boost;
    boost.epsilon = epsilon;
    boost.max_iters = options.max_iters;
    boost.fixed_eta = options.fixed_eta;
    auto fit = boost_fit(builder, ds, boost);
    result.net = std::move(fit.net);
    result.trace = std::move(fit.trace);
    if (result.genericity.gamma < result.gamma)
        result.trace.notes.push_back("gamma clamped from " + std::to_string(result.genericity.gamma) +
                                     " to " + std::to_string(result.gamma));
    result.kd = static_cast<Index>(result.net.size()) * ds.d();
    result.kd_bound = ntk_kd_bound(result.genericity.omega, result.gamma, ds.n(), epsilon);
    return result;
}

Eigen::MatrixXd arcsin_gram(const Eigen::MatrixXd& points) {
    const Eigen::MatrixXd inner = points * points.transpose();
    const Eigen::VectorXd norms = inner.diagonal().cwiseSqrt();
    if ((norms.array() == 0.0).any()) throw DataError("arcsin_gram: zero row");
    const Index n = points.rows();
    Eigen::MatrixXd h(n, n);
    for (Index j = 0; j < n; ++j)
        for (Index i = 0; i < n; ++i) {
            const double rho = std::clamp(inner(i, j) / (norms(i) * norms(j)), -1.0, 1.0);
            h(i, j) = inner(i, j) * (0.25 + std::asin(rho) / (2.0 * std::numbers::pi));
        }
    return h;
}

MonteCarloEstimate arcsin_gram_entry_mc(const Eigen::VectorXd& xi, const Eigen::VectorXd& xj,
                                        std::size_t samples, std::uint64_t seed) {
    if (samples == 0) throw ParameterError("arcsin_gram_entry_mc: samples must be > 0");
    Rng rng = make_rng(derive_seed(seed, streams::monte_carlo));
    const double dot = xi.dot(xj);
    std::size_t hits = 0;
    for (std::size_t s = 0; s < samples; ++s) {
        const Eigen::VectorXd u = gaussian_vector(xi.size(), rng);
        if (u.dot(xi) >= 0.0 && u.dot(xj) >= 0.0) ++hits;
    }
    const double p = static_cast<double>(hits) / static_cast<double>(samples);
    MonteCarloEstimate est;
    est.samples = samples;
    est.mean = dot * p;
    est.std_error = std::abs(dot) * std::sqrt(p * (1.0 - p) / static_cast<double>(samples));
    return est;
}

double min_eigenvalue(const Eigen::MatrixXd& symmetric) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(symmetric, Eigen::EigenvaluesOnly);
    return solver.eigenvalues().minCoeff();
}

double max_eigenvalue(const Eigen::MatrixXd& symmetric) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(symmetric, Eigen::EigenvaluesOnly);
    return solver.eigenvalues().maxCoeff();
}

GramBound gram_lower_bound_check(const Dataset& ds) {
    const auto report = genericity(ds);
    if (report.gamma >= 1.0) throw ParameterError("gram_lower_bound_check needs gamma < 1");
    const Eigen::VectorXd inv_norms = ds.points.rowwise().norm().cwiseInverse();
    const Eigen::MatrixXd scaled = inv_norms.asDiagonal() * arcsin_gram(ds.points) * inv_norms.asDiagonal();
    return {min_eigenvalue(scaled), ntk_correlation_bound(clamped_gamma(report, ds.n()), ds.n())};
}

Eigen::MatrixXd coherence_matrix(const Eigen::MatrixXd& points) {
    const Eigen::VectorXd inv_norms = points.rowwise().norm().cwiseInverse();
    return inv_norms.asDiagonal() * (points * points.transpose()) * inv_norms.asDiagonal();
}

Eigen::MatrixXd hadamard_power(const Eigen::MatrixXd& v, int power) {
    if (power < 0) throw ParameterError("hadamard_power: power must be >= 0");
    return v.array().pow(static_cast<double>(power)).matrix();
}

HadamardBound hadamard_power_check(const Dataset& ds) {
    const auto report = genericity(ds);
    if (report.gamma >= 1.0) throw ParameterError("hadamard_power_check needs gamma < 1");
    const double gamma = clamped_gamma(report, ds.n());
    HadamardBound out;
    out.power = static_cast<int>(std::ceil(std::log(2.0 * static_cast<double>(ds.n())) / std::log(1.0 / gamma)));
    out.lambda_min = min_eigenvalue(hadamard_power(coherence_matrix(ds.points), out.power));
    return out;
}

GeneralStep general_ntk_step(const Dataset& ds, const Eigen::VectorXd& residual,
                             const Activation& psi, const ScalarFunction& psi_prime,
                             std::uint64_t seed, double delta) {
    if (!psi_prime) throw ParameterError("general_ntk_step needs psi'");
    Rng rng = make_rng(derive_seed(seed, streams::ntk));
    int resamples = 0;
    GeneralStep step;
    step.u = draw_direction(ds.points, rng, resamples);
    const Eigen::VectorXd pre = ds.points * step.u;
    Eigen::VectorXd weighted(ds.n());
    for (Index i = 0; i < ds.n(); ++i) weighted(i) = psi_prime(pre(i)) * residual(i);
    step.v = ds.points.transpose() * weighted;
    if (step.v.squaredNorm() == 0.0) throw ZeroStepError("general_ntk_step: v = 0");
    step.delta = std::min(delta, safe_delta(ds.points, step.u, step.v, 0.0));
    step.net.activation = psi;
    step.net.dim = ds.d();
    step.net.neurons.push_back({1.0 / step.delta, step.u + step.delta * step.v, 0.0});
    step.net.neurons.push_back({-1.0 / step.delta, step.u, 0.0});
    step.values = evaluate(step.net, ds);
    step.correlation = residual.dot(step.values);
    return step;
}

GeneralNtkBound general_ntk_bound(const Dataset& ds, const HermiteExpansion& expansion,
                                  double lipschitz, double epsilon, const Activation* psi,
                                  const ScalarFunction& psi_prime, int probe_steps,
                                  std::uint64_t seed) {
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw ParameterError("general_ntk_bound: epsilon must lie in (0, 1)");
    if (!(lipschitz > 0.0)) throw ParameterError("general_ntk_bound: Lipschitz constant must be > 0");
    const auto report = genericity(ds);
    GeneralNtkBound out;
    out.gamma = clamped_gamma(report, ds.n());
    out.omega = report.omega;
    const double n = static_cast<double>(ds.n());
    out.threshold_index =
        static_cast<int>(std::ceil(std::log(2.0 * n) / (2.0 * std::log(1.0 / out.gamma)) - 1e-12));
    if (expansion.truncation_degree < out.threshold_index)
        throw ParameterError("general_ntk_bound: expansion truncated at " +
                             std::to_string(expansion.truncation_degree) + " below threshold index " +
                             std::to_string(out.threshold_index));
    for (std::size_t l = static_cast<std::size_t>(out.threshold_index); l < expansion.coeffs.size(); ++l)
        out.tail_sum += expansion.coeffs[l] * expansion.coeffs[l];
    out.tail_sum += expansion.tail_mass;
    if (out.tail_sum <= 1e-12)
        throw UninformativeBoundError("general_ntk_bound: Hermite tail sum vanishes beyond index " +
                                      std::to_string(out.threshold_index));
    out.required_kd = 16.0 * out.omega * lipschitz * n * std::log(1.0 / epsilon) / out.tail_sum;
    out.predicted_correlation_ratio = 0.25 * out.tail_sum;
    if (psi && probe_steps > 0) {
        const double norm_sq = ds.labels.squaredNorm();
        if (norm_sq == 0.0) throw ParameterError("general_ntk_bound: probe steps need nonzero labels");
        double total = 0.0;
        for (int s = 0; s < probe_steps; ++s) {
            try {
                total += general_ntk_step(ds, ds.labels, *psi, psi_prime,
                                          derive_seed(seed, streams::ntk, static_cast<std::uint64_t>(s)))
                             .correlation;
            } catch (const ZeroStepError&) {
            }
        }
        out.mean_correlation_ratio = total / (probe_steps * norm_sq);
    }
    return out;
}

}  // namespace memnet
