#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace memnet {

using Eigen::Index;

enum class LabelKind { none, rademacher, gaussian, binary, file };

std::string_view to_string(LabelKind kind);
LabelKind label_kind_from_string(std::string_view name);

/// n labeled points in R^d. Rows of `points` are the x_i. Immutable by
/// convention once built; construct through make_dataset to get validation.
struct Dataset {
    Eigen::MatrixXd points;
    Eigen::VectorXd labels;
    LabelKind label_kind = LabelKind::none;

    Index n() const { return points.rows(); }
    Index d() const { return points.cols(); }
};

/// Validates n >= 1, d >= 1, matching label length, finite entries and no zero row.
Dataset make_dataset(Eigen::MatrixXd points, Eigen::VectorXd labels,
                     LabelKind kind = LabelKind::file);

/// Genericity statistics of the point cloud.
struct GenericityReport {
    double gamma = 0.0;     ///< max_{i != j} |x_i . x_j| / (|x_i| |x_j|); 0 when n = 1
    double omega = 0.0;     ///< d * lambda_max((1/n) sum x_i x_i^T)
    double min_norm = 0.0;  ///< min_i |x_i|
    bool general_position = true;
};

/// Rows i.i.d. uniform on S^{d-1} (normalized Gaussians); labels zero.
Dataset sample_sphere(Index n, Index d, std::uint64_t seed);

/// Same points, labels replaced by i.i.d. uniform signs.
Dataset rademacher_labels(Dataset ds, std::uint64_t seed);

/// Same points, labels replaced by i.i.d. standard normals.
Dataset gaussian_labels(Dataset ds, std::uint64_t seed);

/// Same points, labels set to 1 on `ones` uniformly chosen indices and 0 elsewhere.
Dataset binary_labels(Dataset ds, Index ones, std::uint64_t seed);

/// `subsets` random (d+1)-row subsets are checked for affine independence
/// (condition number of [X_S, 1] below 1e12). A probabilistic certificate only.
GenericityReport genericity(const Dataset& ds, std::uint64_t seed = 0, int subsets = 32);

/// gamma clamped to [1/(2n), 1) as required by the constructions that divide by log(1/gamma).
double clamped_gamma(const GenericityReport& report, Index n);

/// Binary container: one JSON header line {"format","version","n","d","label_kind"}
/// terminated by '\n', then n*d row-major points and n labels as little-endian float64.
void save_dataset(const Dataset& ds, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

/// CSV with one point per line, last column the label. Blank lines and lines
/// starting with '#' are skipped; a non-numeric first line is treated as a header.
Dataset load_csv(const std::filesystem::path& path);

}  // namespace memnet
