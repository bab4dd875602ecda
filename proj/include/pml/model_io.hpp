#pragma once

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "pml/errors.hpp"
#include "pml/optimizer.hpp"
#include "pml/serialize.hpp"

namespace pml {

constexpr char kModelMagic[4] = {'P', 'M', 'L', 'M'};
constexpr std::uint32_t kModelVersion = 1;

using AnyModel = std::variant<ModelLDML, ModelMVLDML>;

namespace detail {

inline void write_matrix(std::ostream& out, const Matrix& m) {
    write_u32(out, static_cast<std::uint32_t>(m.rows()));
    write_u32(out, static_cast<std::uint32_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) write_f64(out, m(i, j));
}

inline Matrix read_matrix(std::istream& in, const std::string& what) {
    const std::uint32_t rows = read_u32(in, what + " rows");
    const std::uint32_t cols = read_u32(in, what + " cols");
    Matrix m(rows, cols);
    for (std::uint32_t i = 0; i < rows; ++i)
        for (std::uint32_t j = 0; j < cols; ++j) m(i, j) = read_f64(in, what + " data");
    return m;
}

inline void write_pca(std::ostream& out, const std::optional<PcaTransform>& pca) {
    write_u32(out, pca ? 1u : 0u);
    if (!pca) return;
    write_f64(out, pca->retained_energy);
    write_matrix(out, pca->mean);
    write_matrix(out, pca->basis);
    write_matrix(out, pca->explained);
}

inline std::optional<PcaTransform> read_pca(std::istream& in) {
    if (read_u32(in, "pca flag") == 0) return std::nullopt;
    PcaTransform t;
    t.retained_energy = read_f64(in, "pca energy");
    t.mean = read_matrix(in, "pca mean");
    t.basis = read_matrix(in, "pca basis");
    t.explained = read_matrix(in, "pca explained");
    return t;
}

}  // namespace detail

/// Versioned binary container for a trained multi-view model: per-view
/// low-rank factors, view weights, betas, the privileged factor, and any
/// input PCA transforms.
inline void write_model(std::ostream& out, const ModelMVLDML& model) {
    detail::write_magic(out, kModelMagic);
    detail::write_u32(out, kModelVersion);
    detail::write_u32(out, 1);  // kind: privileged
    detail::write_u32(out, static_cast<std::uint32_t>(model.metrics.size()));
    detail::write_matrix(out, model.privileged_metric.factor());
    for (std::size_t m = 0; m < model.metrics.size(); ++m) {
        detail::write_matrix(out, model.metrics[m].factor());
        detail::write_f64(out, model.view_weights[m]);
        detail::write_f64(out, model.betas.betas[m]);
        detail::write_pca(out, m < model.pca.size() ? model.pca[m] : std::nullopt);
    }
}

inline void write_model(std::ostream& out, const ModelLDML& model) {
    detail::write_magic(out, kModelMagic);
    detail::write_u32(out, kModelVersion);
    detail::write_u32(out, 0);  // kind: global threshold
    detail::write_u32(out, 1);
    detail::write_f64(out, model.sigma);
    detail::write_matrix(out, model.metric.factor());
    detail::write_pca(out, model.pca);
}

template <typename ModelT>
void write_model_file(const std::string& path, const ModelT& model) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path);
    write_model(out, model);
    if (!out) throw DataError("failed writing " + path);
}

inline AnyModel read_model(std::istream& in, const std::string& what = "model") {
    detail::expect_magic(in, kModelMagic, what);
    const std::uint32_t version = detail::read_u32(in, what + " version");
    if (version != kModelVersion)
        throw DataError(what + ": unsupported format version " + std::to_string(version));
    const std::uint32_t kind = detail::read_u32(in, what + " kind");
    const std::uint32_t n_views = detail::read_u32(in, what + " view count");

    if (kind == 0) {
        if (n_views != 1) throw DataError(what + ": baseline model must have one view");
        ModelLDML model;
        model.sigma = detail::read_f64(in, what + " sigma");
        model.metric = PsdMetric::from_factor(detail::read_matrix(in, what + " factor"));
        model.pca = detail::read_pca(in);
        return model;
    }
    if (kind != 1) throw DataError(what + ": unknown model kind");

    ModelMVLDML model;
    model.privileged_metric =
        PsdMetric::from_factor(detail::read_matrix(in, what + " privileged factor"));
    for (std::uint32_t m = 0; m < n_views; ++m) {
        model.metrics.push_back(PsdMetric::from_factor(detail::read_matrix(in, what + " factor")));
        model.view_weights.a.push_back(detail::read_f64(in, what + " weight"));
        model.betas.betas.push_back(detail::read_f64(in, what + " beta"));
        model.pca.push_back(detail::read_pca(in));
    }
    return model;
}

inline AnyModel read_model_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    return read_model(in, path);
}

/// Serializes to an in-memory byte string (used by reproducibility checks).
template <typename ModelT>
std::string model_bytes(const ModelT& model) {
    std::ostringstream out(std::ios::binary);
    write_model(out, model);
    return out.str();
}

/// Human-inspectable summary: weights, betas, objective history.
inline nlohmann::json model_inspection_json(const ModelMVLDML& model) {
    nlohmann::json j;
    j["kind"] = "mvldml+";
    j["view_weights"] = model.view_weights.a;
    j["betas"] = model.betas.betas;
    j["history"] = model.history;
    j["converged"] = model.converged;
    j["iterations"] = model.history.empty() ? 0 : model.history.size() - 1;
    std::vector<int> ranks;
    for (const auto& m : model.metrics) ranks.push_back(static_cast<int>(m.rank()));
    j["metric_ranks"] = ranks;
    j["privileged_rank"] = static_cast<int>(model.privileged_metric.rank());
    return j;
}

inline nlohmann::json model_inspection_json(const ModelLDML& model) {
    nlohmann::json j;
    j["kind"] = "ldml";
    j["sigma"] = model.sigma;
    j["history"] = model.history;
    j["converged"] = model.converged;
    j["iterations"] = model.history.empty() ? 0 : model.history.size() - 1;
    j["metric_rank"] = static_cast<int>(model.metric.rank());
    return j;
}

}  // namespace pml
