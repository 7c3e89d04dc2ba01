#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace memnet {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to derive independent child seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Child seed for (stream, index) under a parent seed. Pure function, so a
/// candidate's randomness does not depend on evaluation order or thread count.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream,
                                    std::uint64_t index = 0) noexcept {
    return mix_seed(mix_seed(mix_seed(seed) ^ stream) ^ index);
}

inline Rng make_rng(std::uint64_t seed) { return Rng(mix_seed(seed)); }

template <typename Derived>
void fill_gaussian(Eigen::DenseBase<Derived>& out, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Eigen::Index j = 0; j < out.cols(); ++j)
        for (Eigen::Index i = 0; i < out.rows(); ++i) out(i, j) = normal(rng);
}

inline Eigen::VectorXd gaussian_vector(Eigen::Index d, Rng& rng) {
    Eigen::VectorXd v(d);
    fill_gaussian(v, rng);
    return v;
}

// Named stream identifiers keep derived seeds of different consumers apart.
namespace streams {
inline constexpr std::uint64_t sphere = 0x5348;
inline constexpr std::uint64_t labels = 0x4c42;
inline constexpr std::uint64_t genericity = 0x4745;
inline constexpr std::uint64_t generic_fit = 0x4746;
inline constexpr std::uint64_t baum = 0x4241;
inline constexpr std::uint64_t ntk = 0x4e54;
inline constexpr std::uint64_t harmonic = 0x4841;
inline constexpr std::uint64_t complex_candidate = 0x4343;
inline constexpr std::uint64_t bounds = 0x424f;
inline constexpr std::uint64_t monte_carlo = 0x4d43;
}  // namespace streams

}  // namespace memnet
