#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pml/dataset.hpp"
#include "pml/errors.hpp"
#include "pml/rng.hpp"

namespace pml {

/// One generated original view: a fixed random projection of the identity
/// latent plus per-sample Gaussian noise. A view may additionally corrupt a
/// latent subspace before projecting, which makes views complementary (each
/// one blind to a different part of the identity signal).
struct SynthViewSpec {
    int dim = 30;
    double noise_sigma = 1.0;
    std::uint64_t proj_seed = 1;
    int corrupt_start = 0;
    int corrupt_len = 0;  // 0 disables corruption
    double corrupt_sigma = 0.0;
};

/// Privileged view: same generative form with lower sensor noise and a
/// signal attenuation factor, so its positive/negative distance overlap
/// matches the original views' (an independent measurement of the same
/// latent, not an oracle). `random` replaces it with identity-independent
/// Gaussian vectors.
struct SynthPrivilegedSpec {
    int dim = 60;
    double noise_sigma = 0.4375;  // default original sigma / 4
    double signal_scale = 0.25;
    bool random = false;
};

struct SynthConfig {
    int n_ids = 100;
    int samples_per_id_per_cam = 2;
    int n_cams = 2;
    int latent_dim = 10;
    std::vector<SynthViewSpec> views = {{100, 1.75, 1}, {120, 1.75, 2}};
    SynthPrivilegedSpec privileged;
    std::uint64_t seed = 0;
};

/// Samples with aligned identity/camera labels across all views.
struct SampleSet {
    std::vector<int> ids;
    std::vector<int> cams;
    std::vector<FeatureView> views;
    FeatureView privileged;

    std::size_t n() const { return ids.size(); }
};

/// Identity-disjoint halves: train identities never appear in test.
struct SynthData {
    SampleSet train;
    SampleSet test;
};

namespace detail {

inline void validate(const SynthConfig& c) {
    if (c.n_ids < 2) throw ConfigError("synth: n_ids must be >= 2");
    if (c.samples_per_id_per_cam < 1) throw ConfigError("synth: samples_per_id_per_cam must be >= 1");
    if (c.n_cams < 2) throw ConfigError("synth: n_cams must be >= 2");
    if (c.latent_dim < 1) throw ConfigError("synth: latent_dim must be >= 1");
    if (c.views.empty()) throw ConfigError("synth: need at least one view");
    for (const auto& v : c.views) {
        if (v.dim < 1) throw ConfigError("synth: view dim must be >= 1");
        if (v.noise_sigma < 0.0) throw ConfigError("synth: view noise_sigma must be >= 0");
        if (v.corrupt_len < 0 || v.corrupt_start < 0 ||
            v.corrupt_start + v.corrupt_len > c.latent_dim)
            throw ConfigError("synth: corrupt subspace outside the latent");
    }
    if (c.privileged.dim < 1) throw ConfigError("synth: privileged dim must be >= 1");
    if (c.privileged.noise_sigma < 0.0) throw ConfigError("synth: privileged noise_sigma must be >= 0");
    if (c.privileged.signal_scale < 0.0) throw ConfigError("synth: privileged signal_scale must be >= 0");
}

inline Matrix random_projection(std::uint64_t seed, int rows, int cols) {
    Rng rng(derive_seed(seed, 0x50524f4aULL));  // "PROJ"
    Matrix a(rows, cols);
    const double scale = 1.0 / std::sqrt(static_cast<double>(cols));
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) a(i, j) = rng.normal() * scale;
    return a;
}

inline SampleSet select(const SampleSet& all, const std::vector<char>& keep) {
    SampleSet out;
    out.views.resize(all.views.size());
    for (std::size_t v = 0; v < all.views.size(); ++v) {
        out.views[v].name = all.views[v].name;
    }
    out.privileged.name = all.privileged.name;

    std::vector<Eigen::Index> rows;
    for (std::size_t i = 0; i < all.n(); ++i) {
        if (!keep[static_cast<std::size_t>(all.ids[i])]) continue;
        rows.push_back(static_cast<Eigen::Index>(i));
        out.ids.push_back(all.ids[i]);
        out.cams.push_back(all.cams[i]);
    }
    auto take = [&rows](const Matrix& src) {
        Matrix dst(static_cast<Eigen::Index>(rows.size()), src.cols());
        for (std::size_t k = 0; k < rows.size(); ++k) dst.row(static_cast<Eigen::Index>(k)) = src.row(rows[k]);
        return dst;
    };
    for (std::size_t v = 0; v < all.views.size(); ++v)
        out.views[v].features = take(all.views[v].features);
    out.privileged.features = take(all.privileged.features);
    return out;
}

}  // namespace detail

/// Deterministic generator: per-identity Gaussian latents, per-view noisy
/// linear observations, a privileged view of configurable quality, and an
/// identity-disjoint half/half train-test split.
inline SynthData generate(const SynthConfig& config) {
    detail::validate(config);

    const int n_views = static_cast<int>(config.views.size());
    const int n_samples = config.n_ids * config.n_cams * config.samples_per_id_per_cam;

    Rng latent_rng(derive_seed(config.seed, 1));
    Matrix latents(config.n_ids, config.latent_dim);
    for (int k = 0; k < config.n_ids; ++k)
        for (int j = 0; j < config.latent_dim; ++j) latents(k, j) = latent_rng.normal();

    std::vector<Matrix> projections;
    for (const auto& v : config.views)
        projections.push_back(detail::random_projection(v.proj_seed, v.dim, config.latent_dim));
    const Matrix priv_projection = detail::random_projection(derive_seed(config.seed, 2),
                                                             config.privileged.dim, config.latent_dim);

    SampleSet all;
    all.ids.reserve(static_cast<std::size_t>(n_samples));
    all.cams.reserve(static_cast<std::size_t>(n_samples));
    all.views.resize(static_cast<std::size_t>(n_views));
    for (int v = 0; v < n_views; ++v) {
        all.views[static_cast<std::size_t>(v)].name = "view" + std::to_string(v);
        all.views[static_cast<std::size_t>(v)].features.resize(n_samples, config.views[static_cast<std::size_t>(v)].dim);
    }
    all.privileged.name = "privileged";
    all.privileged.features.resize(n_samples, config.privileged.dim);

    Rng noise_rng(derive_seed(config.seed, 3));
    int row = 0;
    for (int id = 0; id < config.n_ids; ++id) {
        for (int cam = 0; cam < config.n_cams; ++cam) {
            for (int s = 0; s < config.samples_per_id_per_cam; ++s, ++row) {
                all.ids.push_back(id);
                all.cams.push_back(cam);
                for (int v = 0; v < n_views; ++v) {
                    const auto& spec = config.views[static_cast<std::size_t>(v)];
                    Vector latent = latents.row(id).transpose();
                    for (int j = 0; j < spec.corrupt_len; ++j)
                        latent[spec.corrupt_start + j] += spec.corrupt_sigma * noise_rng.normal();
                    Vector x = projections[static_cast<std::size_t>(v)] * latent;
                    for (int j = 0; j < spec.dim; ++j) x[j] += spec.noise_sigma * noise_rng.normal();
                    all.views[static_cast<std::size_t>(v)].features.row(row) = x.transpose();
                }
                if (config.privileged.random) {
                    for (int j = 0; j < config.privileged.dim; ++j)
                        all.privileged.features(row, j) = noise_rng.normal();
                } else {
                    Vector x = config.privileged.signal_scale *
                               (priv_projection * latents.row(id).transpose());
                    for (int j = 0; j < config.privileged.dim; ++j)
                        all.privileged.features(row, j) = x[j] + config.privileged.noise_sigma * noise_rng.normal();
                }
            }
        }
    }

    // Identity-disjoint half/half split.
    Rng split_rng(derive_seed(config.seed, 4));
    std::vector<int> id_order(static_cast<std::size_t>(config.n_ids));
    for (int k = 0; k < config.n_ids; ++k) id_order[static_cast<std::size_t>(k)] = k;
    for (std::size_t k = 0; k + 1 < id_order.size(); ++k) {
        const std::size_t pick = k + split_rng.uniform_index(id_order.size() - k);
        std::swap(id_order[k], id_order[pick]);
    }
    std::vector<char> in_train(static_cast<std::size_t>(config.n_ids), 0);
    for (int k = 0; k < config.n_ids / 2; ++k) in_train[static_cast<std::size_t>(id_order[static_cast<std::size_t>(k)])] = 1;
    std::vector<char> in_test(static_cast<std::size_t>(config.n_ids), 0);
    for (int k = 0; k < config.n_ids; ++k)
        in_test[static_cast<std::size_t>(k)] = in_train[static_cast<std::size_t>(k)] ? 0 : 1;

    SynthData out;
    out.train = detail::select(all, in_train);
    out.test = detail::select(all, in_test);
    return out;
}

}  // namespace pml
