#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "pml/dataset.hpp"
#include "pml/errors.hpp"
#include "pml/serialize.hpp"

namespace pml {

/// One ingested feature file: per-sample identity, camera id, feature row.
struct SampleTable {
    std::vector<int> ids;
    std::vector<int> cams;
    Matrix features;

    Eigen::Index n() const { return features.rows(); }
    Eigen::Index dim() const { return features.cols(); }
};

namespace detail {

inline double parse_double(std::string_view tok, const std::string& path, std::size_t line) {
    double value = 0.0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size())
        throw DataError(path + ":" + std::to_string(line) + ": cannot parse number '" +
                        std::string(tok) + "'");
    return value;
}

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

}  // namespace detail

/// CSV ingestion: one row per sample, columns = identity, camera, features...
inline SampleTable read_feature_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);

    std::vector<int> ids, cams;
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto tokens = detail::split_csv_line(line);
        if (tokens.size() < 3)
            throw DataError(path + ":" + std::to_string(line_no) +
                            ": expected id,cam,features... (>= 3 columns)");
        ids.push_back(static_cast<int>(detail::parse_double(tokens[0], path, line_no)));
        cams.push_back(static_cast<int>(detail::parse_double(tokens[1], path, line_no)));
        std::vector<double> row;
        row.reserve(tokens.size() - 2);
        for (std::size_t c = 2; c < tokens.size(); ++c)
            row.push_back(detail::parse_double(tokens[c], path, line_no));
        if (!rows.empty() && row.size() != rows.front().size())
            throw DataError(path + ":" + std::to_string(line_no) + ": inconsistent column count");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw DataError(path + ": no samples");

    SampleTable table;
    table.ids = std::move(ids);
    table.cams = std::move(cams);
    table.features.resize(static_cast<Eigen::Index>(rows.size()),
                          static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            table.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return table;
}

inline void write_feature_csv(const std::string& path, const SampleTable& table) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    char buf[40];
    for (Eigen::Index i = 0; i < table.n(); ++i) {
        out << table.ids[static_cast<std::size_t>(i)] << ','
            << table.cams[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < table.dim(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", table.features(i, j));
            out << ',' << buf;
        }
        out << '\n';
    }
    if (!out) throw DataError("failed writing " + path);
}

constexpr char kFeatureMagic[4] = {'P', 'M', 'L', 'F'};

/// Binary feature container: "PMLF", u32 n_samples, u32 dim, row-major f64.
inline void write_feature_bin(const std::string& path, const Matrix& features) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path);
    detail::write_magic(out, kFeatureMagic);
    detail::write_u32(out, static_cast<std::uint32_t>(features.rows()));
    detail::write_u32(out, static_cast<std::uint32_t>(features.cols()));
    for (Eigen::Index i = 0; i < features.rows(); ++i)
        for (Eigen::Index j = 0; j < features.cols(); ++j) detail::write_f64(out, features(i, j));
    if (!out) throw DataError("failed writing " + path);
}

inline Matrix read_feature_bin(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    detail::expect_magic(in, kFeatureMagic, path);
    const std::uint32_t n = detail::read_u32(in, path + " sample count");
    const std::uint32_t dim = detail::read_u32(in, path + " dim");
    if (n == 0 || dim == 0) throw DataError(path + ": empty feature matrix");
    Matrix features(n, dim);
    for (std::uint32_t i = 0; i < n; ++i)
        for (std::uint32_t j = 0; j < dim; ++j) features(i, j) = detail::read_f64(in, path + " row data");
    return features;
}

/// True when the file starts with the binary feature magic.
inline bool is_feature_bin(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    char buf[4];
    return in.read(buf, 4) && std::memcmp(buf, kFeatureMagic, 4) == 0;
}

/// Labels sidecar for binary feature files: CSV rows of id,cam.
inline std::pair<std::vector<int>, std::vector<int>> read_labels_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    std::vector<int> ids, cams;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto tokens = detail::split_csv_line(line);
        if (tokens.size() < 2)
            throw DataError(path + ":" + std::to_string(line_no) + ": expected id,cam");
        ids.push_back(static_cast<int>(detail::parse_double(tokens[0], path, line_no)));
        cams.push_back(static_cast<int>(detail::parse_double(tokens[1], path, line_no)));
    }
    if (ids.empty()) throw DataError(path + ": no labels");
    return {std::move(ids), std::move(cams)};
}

/// Reads a view from either supported container. Binary files take their
/// labels from `labels_path`.
inline SampleTable read_features_auto(const std::string& path, const std::string& labels_path = "") {
    if (is_feature_bin(path)) {
        if (labels_path.empty())
            throw DataError(path + ": binary feature file requires a labels CSV (--labels)");
        SampleTable table;
        table.features = read_feature_bin(path);
        auto [ids, cams] = read_labels_csv(labels_path);
        if (static_cast<Eigen::Index>(ids.size()) != table.features.rows())
            throw DataError(labels_path + ": label count does not match " + path);
        table.ids = std::move(ids);
        table.cams = std::move(cams);
        return table;
    }
    return read_feature_csv(path);
}

}  // namespace pml
