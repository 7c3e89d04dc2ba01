#include "memnet/data.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "memnet/error.hpp"
#include "memnet/random.hpp"

namespace memnet {

namespace {

constexpr const char* kFormatName = "memnet-dataset";
constexpr int kFormatVersion = 1;

void write_f64_le(std::ostream& out, double value) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(value);
    unsigned char bytes[8];
    for (int k = 0; k < 8; ++k) bytes[k] = static_cast<unsigned char>(bits >> (8 * k));
    out.write(reinterpret_cast<const char*>(bytes), 8);
}

double read_f64_le(std::istream& in) {
    unsigned char bytes[8];
    if (!in.read(reinterpret_cast<char*>(bytes), 8))
        throw DataError("dataset file truncated");
    std::uint64_t bits = 0;
    for (int k = 0; k < 8; ++k) bits |= static_cast<std::uint64_t>(bytes[k]) << (8 * k);
    return std::bit_cast<double>(bits);
}

}  // namespace

std::string_view to_string(LabelKind kind) {
    switch (kind) {
        case LabelKind::none: return "none";
        case LabelKind::rademacher: return "rademacher";
        case LabelKind::gaussian: return "gaussian";
        case LabelKind::binary: return "binary";
        case LabelKind::file: return "file";
    }
    return "none";
}

LabelKind label_kind_from_string(std::string_view name) {
    for (auto kind : {LabelKind::none, LabelKind::rademacher, LabelKind::gaussian,
                      LabelKind::binary, LabelKind::file})
        if (to_string(kind) == name) return kind;
    throw ParameterError("unknown label kind '" + std::string(name) + "'");
}

Dataset make_dataset(Eigen::MatrixXd points, Eigen::VectorXd labels, LabelKind kind) {
    if (points.rows() < 1 || points.cols() < 1)
        throw ParameterError("dataset needs n >= 1 and d >= 1");
    if (labels.size() != points.rows())
        throw DataError("label count " + std::to_string(labels.size()) +
                        " does not match point count " + std::to_string(points.rows()));
    if (!points.allFinite() || !labels.allFinite())
        throw DataError("dataset contains non-finite values");
    for (Index i = 0; i < points.rows(); ++i)
        if (points.row(i).squaredNorm() == 0.0)
            throw DataError("row " + std::to_string(i) + " is the zero vector");
    return Dataset{std::move(points), std::move(labels), kind};
}

Dataset sample_sphere(Index n, Index d, std::uint64_t seed) {
    if (n < 1) throw ParameterError("sample_sphere: n must be >= 1");
    if (d < 2) throw ParameterError("sample_sphere: d must be >= 2");
    Eigen::MatrixXd points(n, d);
    for (Index i = 0; i < n; ++i) {
        Rng rng = make_rng(derive_seed(seed, streams::sphere, static_cast<std::uint64_t>(i)));
        Eigen::VectorXd x = gaussian_vector(d, rng);
        points.row(i) = x.transpose() / x.norm();
    }
    return make_dataset(std::move(points), Eigen::VectorXd::Zero(n), LabelKind::none);
}

Dataset rademacher_labels(Dataset ds, std::uint64_t seed) {
    Rng rng = make_rng(derive_seed(seed, streams::labels, 1));
    std::bernoulli_distribution coin(0.5);
    for (Index i = 0; i < ds.n(); ++i) ds.labels(i) = coin(rng) ? 1.0 : -1.0;
    ds.label_kind = LabelKind::rademacher;
    return ds;
}

Dataset gaussian_labels(Dataset ds, std::uint64_t seed) {
    Rng rng = make_rng(derive_seed(seed, streams::labels, 2));
    ds.labels = gaussian_vector(ds.n(), rng);
    ds.label_kind = LabelKind::gaussian;
    return ds;
}

Dataset binary_labels(Dataset ds, Index ones, std::uint64_t seed) {
    if (ones < 0 || ones > ds.n()) throw ParameterError("binary_labels: ones out of range");
    std::vector<Index> order(static_cast<std::size_t>(ds.n()));
    std::iota(order.begin(), order.end(), Index{0});
    Rng rng = make_rng(derive_seed(seed, streams::labels, 3));
    std::shuffle(order.begin(), order.end(), rng);
    ds.labels.setZero();
    for (Index k = 0; k < ones; ++k) ds.labels(order[static_cast<std::size_t>(k)]) = 1.0;
    ds.label_kind = LabelKind::binary;
    return ds;
}

GenericityReport genericity(const Dataset& ds, std::uint64_t seed, int subsets) {
    const Index n = ds.n();
    const Index d = ds.d();
    const Eigen::VectorXd norms = ds.points.rowwise().norm();
    if ((norms.array() == 0.0).any()) throw DataError("genericity: zero row");

    GenericityReport report;
    report.min_norm = norms.minCoeff();

    const Eigen::MatrixXd unit = norms.cwiseInverse().asDiagonal() * ds.points;
    Eigen::MatrixXd coherence = unit * unit.transpose();
    coherence.diagonal().setZero();
    report.gamma = n > 1 ? coherence.cwiseAbs().maxCoeff() : 0.0;

    const Eigen::MatrixXd second = ds.points.transpose() * ds.points / static_cast<double>(n);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(second, Eigen::EigenvaluesOnly);
    report.omega = static_cast<double>(d) * eig.eigenvalues().maxCoeff();

    // No hyperplane holds more than d points: every (d+1)-subset must be
    // affinely independent, i.e. [X_S, 1] nonsingular.
    if (n > d) {
        Rng rng = make_rng(derive_seed(seed, streams::genericity));
        std::vector<Index> order(static_cast<std::size_t>(n));
        std::iota(order.begin(), order.end(), Index{0});
        for (int s = 0; s < subsets && report.general_position; ++s) {
            std::shuffle(order.begin(), order.end(), rng);
            Eigen::MatrixXd block(d + 1, d + 1);
            for (Index r = 0; r <= d; ++r) {
                block.row(r).head(d) = ds.points.row(order[static_cast<std::size_t>(r)]);
                block(r, d) = 1.0;
            }
            Eigen::JacobiSVD<Eigen::MatrixXd> svd(block);
            const auto& sv = svd.singularValues();
            const double smallest = sv(sv.size() - 1);
            if (smallest == 0.0 || sv(0) / smallest >= 1e12) report.general_position = false;
        }
    }
    return report;
}

double clamped_gamma(const GenericityReport& report, Index n) {
    const double floor = 1.0 / (2.0 * static_cast<double>(n));
    return std::max(report.gamma, floor);
}

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
    nlohmann::ordered_json header;
    header["format"] = kFormatName;
    header["version"] = kFormatVersion;
    header["n"] = ds.n();
    header["d"] = ds.d();
    header["label_kind"] = std::string(to_string(ds.label_kind));
    out << header.dump() << '\n';
    for (Index i = 0; i < ds.n(); ++i)
        for (Index j = 0; j < ds.d(); ++j) write_f64_le(out, ds.points(i, j));
    for (Index i = 0; i < ds.n(); ++i) write_f64_le(out, ds.labels(i));
    if (!out) throw DataError("failed writing '" + path.string() + "'");
}

Dataset load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line)) throw DataError("dataset file has no header");
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed dataset header: ") + e.what());
    }
    if (header.value("format", "") != kFormatName || header.value("version", 0) != kFormatVersion)
        throw DataError("'" + path.string() + "' is not a memnet dataset (format/version)");
    const Index n = header.at("n").get<Index>();
    const Index d = header.at("d").get<Index>();
    if (n < 1 || d < 1) throw DataError("dataset header has invalid n or d");
    Eigen::MatrixXd points(n, d);
    Eigen::VectorXd labels(n);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < d; ++j) points(i, j) = read_f64_le(in);
    for (Index i = 0; i < n; ++i) labels(i) = read_f64_le(in);
    if (in.peek() != std::char_traits<char>::eof()) throw DataError("trailing bytes in dataset file");
    return make_dataset(std::move(points), std::move(labels),
                        label_kind_from_string(header.value("label_kind", "file")));
}

Dataset load_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    std::vector<std::vector<double>> rows;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::vector<double> row;
        std::stringstream fields(line);
        std::string field;
        bool numeric = true;
        while (std::getline(fields, field, ',')) {
            try {
                std::size_t used = 0;
                row.push_back(std::stod(field, &used));
                if (field.find_first_not_of(" \t", used) != std::string::npos) numeric = false;
            } catch (const std::exception&) {
                numeric = false;
            }
        }
        if (!numeric) {
            if (first) {
                first = false;
                continue;
            }
            throw DataError("non-numeric CSV line: " + line);
        }
        first = false;
        if (row.size() < 2) throw DataError("CSV rows need at least one coordinate and a label");
        if (!rows.empty() && row.size() != rows.front().size())
            throw DataError("ragged CSV row: " + line);
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw DataError("CSV file has no data rows");
    const Index n = static_cast<Index>(rows.size());
    const Index d = static_cast<Index>(rows.front().size()) - 1;
    Eigen::MatrixXd points(n, d);
    Eigen::VectorXd labels(n);
    for (Index i = 0; i < n; ++i) {
        const auto& row = rows[static_cast<std::size_t>(i)];
        for (Index j = 0; j < d; ++j) points(i, j) = row[static_cast<std::size_t>(j)];
        labels(i) = row.back();
    }
    return make_dataset(std::move(points), std::move(labels), LabelKind::file);
}

}  // namespace memnet
