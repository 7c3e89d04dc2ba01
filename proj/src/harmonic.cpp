#include "memnet/harmonic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "memnet/hermite.hpp"
#include "memnet/quadrature.hpp"
#include "memnet/random.hpp"

namespace memnet {

int choose_degree(Index n, double gamma) {
    if (!(gamma > 0.0) || gamma >= 1.0) throw ParameterError("choose_degree: gamma must lie in (0, 1)");
    if (n < 1) throw ParameterError("choose_degree: n must be >= 1");
    const double nn = static_cast<double>(n);
    int m = 3;
    while (nn * std::pow(gamma, m - 2) > 0.5) ++m;
    return m;
}

namespace {

double sqrt_n_gamma_sq(Index n, double gamma) { return std::sqrt(static_cast<double>(n)) * gamma; }

}  // namespace

Eigen::VectorXd perturbation_vector(const Eigen::MatrixXd& points, const Eigen::VectorXd& residual,
                                    const Eigen::VectorXd& w, int m, double gamma) {
    if (m < 1) throw ParameterError("perturbation_vector: m must be >= 1");
    if (!(gamma > 0.0)) throw ParameterError("perturbation_vector: gamma must be > 0");
    const Eigen::VectorXd proj = points * w;
    Eigen::VectorXd weights(points.rows());
    for (Index i = 0; i < points.rows(); ++i) weights(i) = residual(i) * hermite_eval(m - 1, proj(i));
    return points.transpose() * weights / sqrt_n_gamma_sq(points.rows(), gamma);
}

Eigen::MatrixXd hermite_gram(const Eigen::MatrixXd& points, int m) {
    if (m < 0) throw ParameterError("hermite_gram: m must be >= 0");
    const Eigen::VectorXd norms = points.rowwise().norm();
    if (((norms.array() - 1.0).abs() > 1e-10).any()) throw DataError("hermite_gram needs unit-norm rows");
    return (points * points.transpose()).array().pow(static_cast<double>(m)).matrix();
}

Complex phi(int m, Complex z) { return hermite_eval(m, z) / std::sqrt(static_cast<double>(m)); }

Eigen::VectorXd ComplexNeuron::evaluate(const Eigen::MatrixXd& points) const {
    const Eigen::VectorXd re = points * w_re;
    const Eigen::VectorXd im = points * w_im;
    Eigen::VectorXd out(points.rows());
    for (Index i = 0; i < points.rows(); ++i) out(i) = (z * phi(m, {re(i), im(i)})).real();
    return out;
}

ComplexNeuron complex_neuron(const Eigen::VectorXd& w, const Eigen::VectorXd& v, Complex a, int m) {
    return {w + a.real() * v, a.imag() * v, std::conj(a) / std::norm(a), m};
}

Complex phase_average(int m, double p, double q, int phases) {
    if (phases < 1) throw ParameterError("phase_average: phases must be >= 1");
    Complex sum = 0.0;
    for (int k = 0; k < phases; ++k) {
        const Complex a = std::polar(1.0, 2.0 * std::numbers::pi * k / phases);
        sum += phi(m, p + a * q) / a;
    }
    return sum / static_cast<double>(phases);
}

double HarmonicSettings::cutoff(Index n) const {
    return std::pow(4.0 * constants.cutoff * std::log(static_cast<double>(n)), 0.5 * m);
}

double HarmonicSettings::radius(Index n) const { return 2.0 * m * cutoff(n); }

HarmonicSettings harmonic_settings(Index n, double gamma, std::optional<int> m) {
    HarmonicSettings settings;
    settings.gamma = gamma;
    settings.m = m ? *m : choose_degree(n, gamma);
    settings.constants = constants_for(settings.m);
    return settings;
}

namespace {

/// K candidates (w_c, a_c) with projections p = X w and pv = X v(w).
struct CandidateBatch {
    std::vector<Complex> a;
    Eigen::MatrixXd w;
    Eigen::MatrixXd v;
    Eigen::MatrixXd p;
    Eigen::MatrixXd pv;
};

CandidateBatch draw_candidates(const Eigen::MatrixXd& points, const Eigen::VectorXd& residual, int m,
                               double gamma, Index count, std::uint64_t seed, Index first = 0) {
    const Index n = points.rows();
    const Index d = points.cols();
    CandidateBatch batch;
    batch.w.resize(d, count);
    batch.a.resize(static_cast<std::size_t>(count));
    std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
    for (Index c = 0; c < count; ++c) {
        Rng rng = make_rng(derive_seed(seed, streams::complex_candidate, static_cast<std::uint64_t>(first + c)));
        auto col = batch.w.col(c);
        fill_gaussian(col, rng);
        batch.a[static_cast<std::size_t>(c)] = std::polar(1.0, angle(rng));
    }
    batch.p = points * batch.w;
    Eigen::MatrixXd weighted = batch.p.unaryExpr([m](double t) { return hermite_eval(m - 1, t); });
    weighted = residual.asDiagonal() * weighted;
    batch.v = points.transpose() * weighted / sqrt_n_gamma_sq(n, gamma);
    batch.pv = points * batch.v;
    return batch;
}

}  // namespace

ComplexSample sample_complex_neuron(const Eigen::MatrixXd& points, const Eigen::VectorXd& residual,
                                    const HarmonicSettings& settings, std::uint64_t seed) {
    if (settings.candidates < 1) throw ParameterError("sample_complex_neuron: candidates must be >= 1");
    const Index n = points.rows();
    const int m = settings.m;
    const auto batch = draw_candidates(points, residual, m, settings.gamma, settings.candidates, seed);
    const double cutoff = settings.cutoff(n);

    ComplexSample out;
    out.floor = residual.squaredNorm() / (2.0 * settings.constants.sampler * sqrt_n_gamma_sq(n, settings.gamma));
    double best = -std::numeric_limits<double>::infinity();
    double best_any = -std::numeric_limits<double>::infinity();
    Index winner = -1;
    Eigen::VectorXd g(n);
    Eigen::VectorXd best_values;
    for (Index c = 0; c < settings.candidates; ++c) {
        const Complex a = batch.a[static_cast<std::size_t>(c)];
        bool cut = false;
        for (Index i = 0; i < n; ++i) {
            const Complex arg = batch.p(i, c) + a * batch.pv(i, c);
            if (std::abs(arg.real()) > cutoff || std::abs(arg.imag()) > cutoff) cut = true;
            g(i) = (std::conj(a) * phi(m, arg)).real();
        }
        const double f = residual.dot(g);
        best_any = std::max(best_any, f);
        if (cut) {
            ++out.cut;
            continue;
        }
        if (f > best) {
            best = f;
            winner = c;
            best_values = g;
        }
    }
    if (winner < 0)
        throw SamplerFailure("sample_complex_neuron: all " + std::to_string(settings.candidates) +
                                 " candidates exceeded the projection cutoff",
                             best_any);
    if (best < out.floor || best <= 0.0)
        throw SamplerFailure("sample_complex_neuron: best correlation " + std::to_string(best) +
                                 " is below the floor " + std::to_string(out.floor),
                             best);
    out.index = winner;
    out.correlation = best;
    out.values = std::move(best_values);
    out.neuron = complex_neuron(batch.w.col(winner), batch.v.col(winner),
                                batch.a[static_cast<std::size_t>(winner)], m);
    return out;
}

double DirectionalDecomposition::evaluate(double x, double y) const {
    double sum = 0.0;
    for (std::size_t j = 0; j < polys.size(); ++j) sum += polynomial_value(polys[j], x + static_cast<double>(j) * y);
    return sum;
}

VandermondeWeights vandermonde_weights(int k) {
    if (k < 0) throw ParameterError("vandermonde_weights: k must be >= 0");
    VandermondeWeights out;
    // Lagrange basis on nodes 0..k: L_j(t) = prod_{i != j} (t - i) / prod_{i != j} (j - i).
    // The weights solve sum_j c_j j^l = b_l, so c_j = sum_l [t^l] L_j(t) b_l with
    // b_l = Re(i^l) or Im(i^l).
    for (int j = 0; j <= k; ++j) {
        std::vector<Rational> numer{Rational(1)};
        Rational denom(1);
        for (int i = 0; i <= k; ++i) {
            if (i == j) continue;
            std::vector<Rational> next(numer.size() + 1, Rational(0));
            for (std::size_t l = 0; l < numer.size(); ++l) {
                next[l + 1] += numer[l];
                next[l] -= numer[l] * Rational(i);
            }
            numer = std::move(next);
            denom *= Rational(j - i);
        }
        Rational re(0), im(0);
        for (std::size_t l = 0; l < numer.size(); ++l) {
            switch (l % 4) {
                case 0: re += numer[l]; break;
                case 1: im += numer[l]; break;
                case 2: re -= numer[l]; break;
                case 3: im -= numer[l]; break;
            }
        }
        out.real.push_back(re / denom);
        out.imag.push_back(im / denom);
    }
    return out;
}

DirectionalDecomposition decompose_directions(Complex z, int m) {
    if (m < 1) throw ParameterError("decompose_directions: m must be >= 1");
    const auto& he = hermite_basis().integer_coefficients(m);
    const double norm = hermite_basis().normalization(m) / std::sqrt(static_cast<double>(m));
    DirectionalDecomposition dd;
    dd.m = m;
    dd.z = z;
    dd.polys.assign(static_cast<std::size_t>(m + 1), std::vector<double>(static_cast<std::size_t>(m + 1), 0.0));
    for (int k = 0; k <= m; ++k) {
        if (he[static_cast<std::size_t>(k)] == 0) continue;
        const auto weights = vandermonde_weights(k);
        for (int j = 0; j <= k; ++j) {
            const double re = weights.real[static_cast<std::size_t>(j)].to_double();
            const double im = weights.imag[static_cast<std::size_t>(j)].to_double();
            dd.polys[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)] =
                norm * static_cast<double>(he[static_cast<std::size_t>(k)]) * (z.real() * re - z.imag() * im);
        }
    }
    return dd;
}

double polynomial_value(const std::vector<double>& coeffs, double t) {
    double acc = 0.0;
    for (auto k = coeffs.size(); k-- > 0;) acc = acc * t + coeffs[k];
    return acc;
}

std::vector<double> polynomial_derivative(const std::vector<double>& coeffs) {
    if (coeffs.size() <= 1) return {0.0};
    std::vector<double> out(coeffs.size() - 1);
    for (std::size_t k = 1; k < coeffs.size(); ++k) out[k - 1] = static_cast<double>(k) * coeffs[k];
    return out;
}

namespace {

struct Ramp {
    double h = 0.0;
    double h1 = 0.0;
    double h2 = 0.0;
};

// h(s) = exp(-1/s) and its first two derivatives; below 1e-3 all three are < 1e-400.
Ramp ramp(double s) {
    if (s < 1e-3) return {};
    const double h = std::exp(-1.0 / s);
    const double inv = 1.0 / s;
    return {h, h * inv * inv, h * (inv * inv * inv * inv - 2.0 * inv * inv * inv)};
}

}  // namespace

BumpValue bump(double t, double radius) {
    if (!(radius > 0.0)) throw ParameterError("bump: radius must be > 0");
    const double s = (std::abs(t) - radius) / radius;
    if (s <= 0.0) return {1.0, 0.0, 0.0};
    if (s >= 1.0) return {0.0, 0.0, 0.0};
    const Ramp left = ramp(s);
    const Ramp right = ramp(1.0 - s);
    const double a = left.h, a1 = left.h1, a2 = left.h2;
    const double b = right.h, b1 = -right.h1, b2 = right.h2;
    const double den = a + b;
    const double num = a1 * b - a * b1;
    const double num1 = a2 * b - a * b2;
    const double den1 = a1 + b1;
    const double step = a / den;
    const double step1 = num / (den * den);
    const double step2 = (num1 * den - 2.0 * num * den1) / (den * den * den);
    const double sign = t > 0.0 ? 1.0 : -1.0;
    return {1.0 - step, -step1 * sign / radius, -step2 / (radius * radius)};
}

namespace {

struct ComponentFunctions {
    std::vector<double> p, p1, p2;
    double radius;

    double f2(double t) const {
        const BumpValue chi = bump(t, radius);
        return polynomial_value(p2, t) * chi.value + 2.0 * polynomial_value(p1, t) * chi.d1 +
               polynomial_value(p, t) * chi.d2;
    }
};

double cauchy_radius(const std::vector<double>& coeffs) {
    std::size_t top = coeffs.size();
    while (top > 0 && coeffs[top - 1] == 0.0) --top;
    if (top <= 1) return 0.0;
    double bound = 0.0;
    for (std::size_t k = 0; k + 1 < top; ++k) bound = std::max(bound, std::abs(coeffs[k] / coeffs[top - 1]));
    return 1.0 + bound;
}

constexpr int kCdfPanels = 32;

}  // namespace

double ReluMixture::second_derivative(int j, double t) const {
    const auto& comp = components.at(static_cast<std::size_t>(j));
    const auto p1 = polynomial_derivative(comp.poly);
    ComponentFunctions fn{comp.poly, p1, polynomial_derivative(p1), radius};
    return fn.f2(t);
}

double ReluMixture::component_expectation(int j, double t) const {
    const auto& comp = components.at(static_cast<std::size_t>(j));
    if (comp.integral == 0.0) return 0.0;
    const auto p1 = polynomial_derivative(comp.poly);
    const ComponentFunctions fn{comp.poly, p1, polynomial_derivative(p1), radius};
    const double upper = std::min(t, 2.0 * radius);
    if (upper <= -2.0 * radius) return 0.0;
    std::vector<double> cuts;
    for (double b : comp.breakpoints)
        if (b > -2.0 * radius && b < upper) cuts.push_back(b);
    const auto integral = integrate([&](double b) { return fn.f2(b) * (t - b); }, -2.0 * radius, upper, cuts,
                                    1e-12, 1e-14 * comp.integral * (std::abs(t) + 2.0 * radius));
    return integral.value / comp.integral;
}

double ReluMixture::expectation(double x, double y) const {
    double sum = 0.0;
    for (const auto& comp : components)
        if (comp.prob > 0.0) sum += comp.prob * component_expectation(comp.j, x + comp.j * y);
    return sum;
}

ReluMixture relu_mixture(const DirectionalDecomposition& dd, double radius, int grid_size) {
    if (!(radius > 0.0)) throw ParameterError("relu_mixture: M must be > 0");
    if (grid_size < 1) throw ParameterError("relu_mixture: grid size must be >= 1");
    const double lo = -2.0 * radius;
    const double hi = 2.0 * radius;
    ReluMixture mix;
    mix.radius = radius;
    double total = 0.0;
    const auto gl = gauss_legendre(16);

    for (std::size_t j = 0; j < dd.polys.size(); ++j) {
        MixtureComponent comp;
        comp.j = static_cast<int>(j);
        comp.poly = dd.polys[j];
        const bool zero = std::all_of(comp.poly.begin(), comp.poly.end(), [](double c) { return c == 0.0; });
        if (zero) {
            mix.components.push_back(std::move(comp));
            continue;
        }
        const auto p1 = polynomial_derivative(comp.poly);
        const ComponentFunctions fn{comp.poly, p1, polynomial_derivative(p1), radius};
        const ScalarFunction f2 = [&fn](double t) { return fn.f2(t); };
        const ScalarFunction inner = [&fn](double t) { return polynomial_value(fn.p2, t); };

        std::vector<double> edges{lo, -radius, radius, hi};
        const double r = std::min(radius, cauchy_radius(fn.p2));
        if (r > 0.0)
            for (double root : sign_changes(inner, -r, r, 4096)) edges.push_back(root);
        for (double root : sign_changes(f2, radius, hi, 2048)) edges.push_back(root);
        for (double root : sign_changes(f2, lo, -radius, 2048)) edges.push_back(root);
        std::sort(edges.begin(), edges.end());
        edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
        comp.breakpoints.assign(edges.begin() + 1, edges.end() - 1);

        // Piece masses: exact inside [-M, M] where f'' = p'', adaptive outside.
        std::vector<double> piece_mass;
        for (std::size_t e = 0; e + 1 < edges.size(); ++e) {
            const double a = edges[e], b = edges[e + 1];
            double mass;
            if (a >= -radius && b <= radius) {
                mass = std::abs(polynomial_value(fn.p1, b) - polynomial_value(fn.p1, a));
            } else {
                const auto piece = integrate([&fn](double t) { return std::abs(fn.f2(t)); }, a, b, {}, 1e-9);
                if (!piece.converged)
                    throw QuadratureError("relu_mixture: |f''| did not converge on [" + std::to_string(a) + ", " +
                                          std::to_string(b) + "]");
                mass = piece.value;
            }
            piece_mass.push_back(mass);
        }
        comp.integral = std::accumulate(piece_mass.begin(), piece_mass.end(), 0.0);
        if (!(comp.integral > 0.0))
            throw QuadratureError("relu_mixture: int |f''| vanished for a nonzero component " + std::to_string(j));

        // Cumulative table of panel masses for the inverse-CDF grid.
        std::vector<double> panel_left, panel_width, cumulative{0.0};
        for (std::size_t e = 0; e + 1 < edges.size(); ++e) {
            const double a = edges[e];
            const double width = (edges[e + 1] - a) / kCdfPanels;
            std::vector<double> masses(kCdfPanels, 0.0);
            double raw = 0.0;
            for (int k = 0; k < kCdfPanels; ++k) {
                const double mid = a + (k + 0.5) * width;
                for (std::size_t q = 0; q < gl.nodes.size(); ++q)
                    masses[static_cast<std::size_t>(k)] += 0.5 * width * gl.weights[q] * std::abs(fn.f2(mid + 0.5 * width * gl.nodes[q]));
                raw += masses[static_cast<std::size_t>(k)];
            }
            const double rescale = raw > 0.0 ? piece_mass[e] / raw : 0.0;
            for (int k = 0; k < kCdfPanels; ++k) {
                panel_left.push_back(a + k * width);
                panel_width.push_back(width);
                cumulative.push_back(cumulative.back() + masses[static_cast<std::size_t>(k)] * rescale);
            }
        }
        const double table_total = cumulative.back();
        for (int q = 0; q < grid_size; ++q) {
            const double target = (q + 0.5) / grid_size * table_total;
            const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), target);
            const auto k = static_cast<std::size_t>(std::max<std::ptrdiff_t>(1, it - cumulative.begin()) - 1);
            const double mass = cumulative[k + 1] - cumulative[k];
            const double frac = mass > 0.0 ? (target - cumulative[k]) / mass : 0.5;
            const double b = std::clamp(panel_left[k] + frac * panel_width[k], lo, hi);
            comp.grid.push_back(b);
            comp.sign_at.push_back(fn.f2(b) < 0.0 ? -1 : 1);
        }
        total += comp.integral;
        mix.components.push_back(std::move(comp));
    }
    if (!(total > 0.0)) throw QuadratureError("relu_mixture: every component vanished");
    mix.scale = 1.0 / total;
    for (auto& comp : mix.components) comp.prob = comp.integral / total;
    return mix;
}

namespace {

struct BiasChoice {
    double objective = -std::numeric_limits<double>::infinity();
    double correlation = -std::numeric_limits<double>::infinity();
    int j = -1;
    double sigma = 1.0;
    double bias = 0.0;
};

}  // namespace

NeuronStep single_neuron_step(const Eigen::MatrixXd& points, const Eigen::VectorXd& residual,
                              const HarmonicSettings& settings, std::uint64_t seed) {
    const Index n = points.rows();
    NeuronStep step;
    step.sample = sample_complex_neuron(points, residual, settings, seed);
    step.radius = settings.radius(n);
    const auto dd = decompose_directions(step.sample.neuron.z, settings.m);
    const auto mix = relu_mixture(dd, step.radius, settings.grid_size);
    step.mixture_correlation = mix.scale * step.sample.correlation;
    const double lo = -2.0 * step.radius;
    const double hi = 2.0 * step.radius;

    BiasChoice qualified, fallback;
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::vector<double> sum_r(static_cast<std::size_t>(n + 1)), sum_rt(static_cast<std::size_t>(n + 1)),
        sorted(static_cast<std::size_t>(n));
    for (int j = 0; j <= settings.m; ++j) {
        const Eigen::VectorXd direction = step.sample.neuron.w_re + j * step.sample.neuron.w_im;
        const double norm_sq = direction.squaredNorm();
        const Eigen::VectorXd t = points * direction;
        std::iota(order.begin(), order.end(), Index{0});
        std::stable_sort(order.begin(), order.end(), [&t](Index a, Index b) { return t(a) > t(b); });
        for (Index k = 0; k < n; ++k) {
            const Index i = order[static_cast<std::size_t>(k)];
            sorted[static_cast<std::size_t>(k)] = t(i);
            sum_r[static_cast<std::size_t>(k + 1)] = sum_r[static_cast<std::size_t>(k)] + residual(i);
            sum_rt[static_cast<std::size_t>(k + 1)] = sum_rt[static_cast<std::size_t>(k)] + residual(i) * t(i);
        }
        // Correlation of relu(t - b): the k = #{t_i > b} largest projections are active.
        auto active_count = [&](double b) {
            return static_cast<std::size_t>(
                std::lower_bound(sorted.begin(), sorted.end(), b, [](double v, double key) { return v > key; }) -
                sorted.begin());
        };
        auto consider = [&](double b) {
            if (!(b >= lo && b <= hi)) return;
            const std::size_t k = active_count(b);
            const double corr = sum_rt[k] - b * sum_r[k];
            const double norm = std::sqrt(norm_sq + b * b);
            for (const double sigma : {1.0, -1.0}) {
                const double c = sigma * corr;
                if (c > fallback.correlation) fallback = {c / norm, c, j, sigma, b};
                if (c > 0.0 && c >= step.mixture_correlation && c / norm > qualified.objective)
                    qualified = {c / norm, c, j, sigma, b};
            }
        };
        for (double b : mix.components[static_cast<std::size_t>(j)].grid) consider(b);
        consider(lo);
        consider(hi);
        for (Index k = 0; k < n; ++k) consider(sorted[static_cast<std::size_t>(k)]);
        // Interior maximizers of (A - b B) / sqrt(|W|^2 + b^2) on each linear piece.
        for (Index k = 0; k <= n; ++k) {
            const double a_sum = sum_rt[static_cast<std::size_t>(k)];
            const double b_sum = sum_r[static_cast<std::size_t>(k)];
            if (a_sum == 0.0) continue;
            const double b_star = -norm_sq * b_sum / a_sum;
            const double upper = k == 0 ? hi : sorted[static_cast<std::size_t>(k - 1)];
            const double lower = k == n ? lo : sorted[static_cast<std::size_t>(k)];
            if (b_star > lower && b_star < upper) consider(b_star);
        }
    }
    const BiasChoice& pick = qualified.j >= 0 ? qualified : fallback;
    if (pick.j < 0) throw ZeroStepError("single_neuron_step: no admissible realization");
    step.j = pick.j;
    const Eigen::VectorXd direction = step.sample.neuron.w_re + pick.j * step.sample.neuron.w_im;
    step.neuron = {pick.sigma, direction, -pick.bias};
    step.values = pick.sigma * ((points * direction).array() - pick.bias).cwiseMax(0.0).matrix();
    step.correlation = residual.dot(step.values);
    return step;
}

HarmonicFitResult harmonic_fit(const Dataset& ds, std::uint64_t seed, const HarmonicOptions& options) {
    const double epsilon = options.epsilon;
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw ParameterError("harmonic_fit: epsilon must lie in (0, 1)");
    if (options.max_iters < 0 || options.retry_budget < 1)
        throw ParameterError("harmonic_fit: max_iters must be >= 0 and retry_budget >= 1");
    const Index n = ds.n();
    const double nn = static_cast<double>(n);

    HarmonicFitResult result;
    result.net.activation = Activation::relu();
    result.net.dim = ds.d();
    const auto report = genericity(ds, seed);
    result.gamma = clamped_gamma(report, n);
    if (report.gamma < result.gamma)
        result.trace.notes.push_back("gamma clamped from " + std::to_string(report.gamma) + " to " +
                                     std::to_string(result.gamma));
    if (std::abs(report.min_norm - 1.0) > 1e-10 ||
        std::abs(ds.points.rowwise().norm().maxCoeff() - 1.0) > 1e-10)
        result.trace.notes.push_back("rows are not unit norm; the harmonic guarantees assume they are");

    const double label_norm_sq = ds.labels.squaredNorm();
    result.active.resize(static_cast<std::size_t>(n));
    std::iota(result.active.begin(), result.active.end(), Index{0});
    result.trim_allowance = static_cast<Index>(std::ceil(1.0 / (result.gamma * result.gamma)));
    if (label_norm_sq == 0.0) {
        result.trace.converged = true;
        return result;
    }
    result.label_scale = std::sqrt(nn / label_norm_sq);
    const Eigen::VectorXd y = ds.labels * result.label_scale;

    auto settings = harmonic_settings(n, result.gamma, options.degree);
    settings.candidates = options.candidates;
    settings.grid_size = options.grid_size;
    result.m = settings.m;
    const double m = settings.m;
    result.iteration_cap = std::ceil(result.gamma * result.gamma * std::log(1.0 / epsilon) / epsilon * nn *
                                     std::pow(std::log(nn), m * m + m));
    const double cap = std::min(result.iteration_cap, static_cast<double>(options.max_iters));

    const double trim_level = nn * result.gamma * result.gamma;
    const double target = epsilon * nn;
    Eigen::VectorXd residual = y;
    Eigen::VectorXd mask = Eigen::VectorXd::Ones(n);
    FitTrace& trace = result.trace;
    trace.initial_residual_sq = nn;
    TwoLayerNetwork& net = result.net;

    auto trim = [&] {
        std::vector<Index> kept;
        for (Index i : result.active) {
            if (residual(i) * residual(i) <= trim_level) kept.push_back(i);
            else mask(i) = 0.0;
        }
        result.active = std::move(kept);
    };
    auto finish = [&] {
        const Eigen::VectorXd masked = residual.cwiseProduct(mask);
        result.trimmed_error_ratio = masked.squaredNorm() / nn;
        result.error_ratio = residual.squaredNorm() / nn;
        result.trimmed_out = n - static_cast<Index>(result.active.size());
        trace.final_error_ratio = result.trimmed_error_ratio;
        for (auto& neuron : net.neurons) neuron.a /= result.label_scale;
        trace.total_weight = total_weight(net);
        if (result.trimmed_out > result.trim_allowance)
            throw std::logic_error("harmonic_fit: trimmed " + std::to_string(result.trimmed_out) +
                                   " points, more than ceil(1/gamma^2) = " + std::to_string(result.trim_allowance));
    };

    for (int iter = 0;; ++iter) {
        trim();
        const Eigen::VectorXd masked = residual.cwiseProduct(mask);
        if (masked.squaredNorm() <= target) break;
        if (iter >= cap) {
            finish();
            throw ConvergenceError("harmonic_fit: no convergence within " + std::to_string(iter) + " iterations",
                                   trace);
        }
        std::optional<NeuronStep> accepted;
        for (int attempt = 0; attempt < options.retry_budget && !accepted; ++attempt) {
            try {
                auto step = single_neuron_step(
                    ds.points, masked, settings,
                    derive_seed(seed, streams::harmonic, (static_cast<std::uint64_t>(iter) << 16) ^ static_cast<std::uint64_t>(attempt)));
                if (step.correlation > 0.0) accepted = std::move(step);
                else ++trace.rejected_steps;
            } catch (const SamplerFailure&) {
                ++trace.rejected_steps;
            } catch (const ZeroStepError&) {
                ++trace.rejected_steps;
            }
        }
        if (!accepted) {
            finish();
            throw ConvergenceError("harmonic_fit: retry budget exhausted at iteration " + std::to_string(iter), trace);
        }
        const Eigen::VectorXd f_active = accepted->values.cwiseProduct(mask);
        const double correlation = masked.dot(accepted->values);
        const double norm_sq = f_active.squaredNorm();
        const double eta = options.fixed_eta ? *options.fixed_eta : correlation / norm_sq;
        residual -= eta * accepted->values;
        Neuron neuron = accepted->neuron;
        neuron.a *= eta;
        net.neurons.push_back(neuron);

        FitIteration row;
        row.residual_sq = residual.cwiseProduct(mask).squaredNorm();
        row.correlation = correlation;
        row.step_norm_sq = norm_sq;
        row.eta = eta;
        row.neurons_added = 1;
        row.active_set_size = static_cast<Index>(result.active.size());
        row.added_weight = std::abs(eta) * std::sqrt(neuron.w.squaredNorm() + neuron.b * neuron.b) / result.label_scale;
        trace.iterations.push_back(row);
    }
    trace.converged = true;
    finish();
    return result;
}

TailDiagnostic tail_diagnostic(const Eigen::MatrixXd& points, const Eigen::VectorXd& residual, int m,
                               double gamma, int samples, std::uint64_t seed) {
    if (samples < 1) throw ParameterError("tail_diagnostic: samples must be >= 1");
    const Index n = points.rows();
    constexpr Index kBatch = 1024;

    auto projections = [&](Index first, Index count, std::vector<double>& re, std::vector<double>& im) {
        const auto batch = draw_candidates(points, residual, m, gamma, count, seed, first);
        re.clear();
        im.clear();
        for (Index c = 0; c < count; ++c)
            for (Index i = 0; i < n; ++i) {
                const Complex arg = batch.p(i, c) + batch.a[static_cast<std::size_t>(c)] * batch.pv(i, c);
                re.push_back(std::abs(arg.real()));
                im.push_back(std::abs(arg.imag()));
            }
    };

    std::vector<double> re, im;
    projections(0, std::min<Index>(kBatch, samples), re, im);
    std::vector<double> pilot = re;
    std::sort(pilot.begin(), pilot.end());
    const double s_min = std::max(pilot[pilot.size() / 100], 1e-12);
    const double s_max = pilot.back();
    constexpr int kThresholds = 40;
    std::vector<double> thresholds(kThresholds);
    for (int k = 0; k < kThresholds; ++k)
        thresholds[static_cast<std::size_t>(k)] = s_min * std::pow(s_max / s_min, static_cast<double>(k) / (kThresholds - 1));

    std::vector<double> count_re(kThresholds, 0.0), count_im(kThresholds, 0.0);
    double total = 0.0;
    for (Index first = 0; first < samples; first += kBatch) {
        const Index count = std::min<Index>(kBatch, samples - first);
        if (first > 0) projections(first, count, re, im);
        std::sort(re.begin(), re.end());
        std::sort(im.begin(), im.end());
        for (int k = 0; k < kThresholds; ++k) {
            const double s = thresholds[static_cast<std::size_t>(k)];
            count_re[static_cast<std::size_t>(k)] += static_cast<double>(re.end() - std::upper_bound(re.begin(), re.end(), s));
            count_im[static_cast<std::size_t>(k)] += static_cast<double>(im.end() - std::upper_bound(im.begin(), im.end(), s));
        }
        total += static_cast<double>(re.size());
    }

    TailDiagnostic out;
    std::vector<double> xs, ys;
    for (int k = 0; k < kThresholds; ++k) {
        const auto sk = static_cast<std::size_t>(k);
        out.rows.push_back({thresholds[sk], count_re[sk] / total, count_im[sk] / total});
        if (thresholds[sk] >= 10.0 * s_min && count_re[sk] >= 20.0) {
            xs.push_back(std::pow(thresholds[sk], 2.0 / m));
            ys.push_back(std::log(count_re[sk] / total));
        }
    }
    if (xs.size() >= 2) out.fit = fit_line(xs, ys);
    return out;
}

ConstantsTable calibrate(const CalibrationOptions& options) {
    if (options.m_min < 2 || options.m_max < options.m_min || options.draws < 2)
        throw ParameterError("calibrate: need 2 <= m_min <= m_max and draws >= 2");
    const Dataset ds = rademacher_labels(sample_sphere(options.n, options.d, options.seed), options.seed);
    const double gamma = clamped_gamma(genericity(ds, options.seed), ds.n());
    const double nn = static_cast<double>(ds.n());
    const double lemma_floor = ds.labels.squaredNorm() / (2.0 * sqrt_n_gamma_sq(ds.n(), gamma));

    ConstantsTable table;
    table.date = options.date;
    table.fixture = "sphere n=" + std::to_string(options.n) + " d=" + std::to_string(options.d) +
                    " seed=" + std::to_string(options.seed) + " draws=" + std::to_string(options.draws);
    for (int m = options.m_min; m <= options.m_max; ++m) {
        const auto batch = draw_candidates(ds.points, ds.labels, m, gamma, options.draws,
                                           derive_seed(options.seed, streams::harmonic, static_cast<std::uint64_t>(m)));
        std::vector<double> max_proj, energy, corr;
        for (Index c = 0; c < options.draws; ++c) {
            const Complex a = batch.a[static_cast<std::size_t>(c)];
            double top = 0.0, g_sq = 0.0, f = 0.0;
            for (Index i = 0; i < ds.n(); ++i) {
                const Complex arg = batch.p(i, c) + a * batch.pv(i, c);
                top = std::max({top, std::abs(arg.real()), std::abs(arg.imag())});
                const double g = (std::conj(a) * phi(m, arg)).real();
                g_sq += g * g;
                f += ds.labels(i) * g;
            }
            max_proj.push_back(top);
            energy.push_back(g_sq / nn);
            corr.push_back(f);
        }
        std::sort(max_proj.begin(), max_proj.end());
        const double q99 = max_proj[static_cast<std::size_t>(std::floor(0.99 * static_cast<double>(max_proj.size() - 1)))];
        HarmonicConstants row;
        row.m = m;
        row.cutoff = std::pow(q99, 2.0 / m) / (4.0 * std::log(nn));
        row.variance = 2.0 * mean(energy);
        const double ratio = mean(corr) / lemma_floor;
        row.sampler = 2.0 * std::max(1.0, ratio > 0.0 ? 1.0 / ratio : 1.0);
        table.rows.push_back(row);
    }
    return table;
}

}  // namespace memnet
