#include <catch2/catch_amalgamated.hpp>

#include <algorithm>

#include "oracles.hpp"
#include "pml/dataset.hpp"
#include "pml/objective.hpp"
#include "pml/rng.hpp"

using pml::FeatureView;
using pml::LabeledPair;
using pml::Matrix;
using pml::PsdMetric;
using pml::Vector;

namespace {

struct RandomInstance {
    pml::MultiViewPairSet set;
    std::vector<PsdMetric> metrics;
    PsdMetric p = PsdMetric::identity(1);
    pml::ViewWeights weights;
    pml::ScaleParams betas;
    // oracle-side copies
    std::vector<Matrix> raw_metrics;
    std::vector<int> labels;
    std::vector<double> pair_weights;
};

RandomInstance make_instance(pml::Rng& rng, std::size_t n_views, Eigen::Index d, Eigen::Index d_star,
                             int n_ids) {
    std::vector<int> ids;
    for (int k = 0; k < n_ids; ++k) {
        ids.push_back(k);
        ids.push_back(k);
    }
    const Eigen::Index n = static_cast<Eigen::Index>(ids.size());

    std::vector<FeatureView> views;
    for (std::size_t m = 0; m < n_views; ++m) {
        Matrix f(n, d);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < d; ++j) f(i, j) = rng.normal();
        views.push_back({"v" + std::to_string(m), f});
    }
    Matrix pf(n, d_star);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < d_star; ++j) pf(i, j) = rng.normal();

    RandomInstance inst;
    inst.set = pml::make_pair_set(views, {"priv", pf}, pml::build_pairs(ids, pml::PairPolicy{}));
    for (std::size_t m = 0; m < n_views; ++m) {
        Matrix a(d, d);
        for (Eigen::Index i = 0; i < d; ++i)
            for (Eigen::Index j = 0; j < d; ++j) a(i, j) = rng.normal();
        inst.metrics.push_back(pml::psd_project(pml::symmetrized(a * a.transpose())));
        inst.raw_metrics.push_back(inst.metrics.back().matrix());
        inst.betas.betas.push_back(0.5 + rng.uniform01());
    }
    Matrix pa(d_star, d_star);
    for (Eigen::Index i = 0; i < d_star; ++i)
        for (Eigen::Index j = 0; j < d_star; ++j) pa(i, j) = rng.normal();
    inst.p = pml::psd_project(pml::symmetrized(pa * pa.transpose()));

    double total = 0.0;
    for (std::size_t m = 0; m < n_views; ++m) {
        inst.weights.a.push_back(0.2 + rng.uniform01());
        total += inst.weights.a.back();
    }
    for (auto& w : inst.weights.a) w /= total;

    for (const auto& pr : inst.set.pairs) {
        inst.labels.push_back(pr.label);
        inst.pair_weights.push_back(pr.weight);
    }
    return inst;
}

}  // namespace

TEST_CASE("log loss values") {
    CHECK(pml::log_loss(0.0) == Catch::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(pml::log_loss(1.0) == Catch::Approx(0.31326168751822286).epsilon(1e-12));
    const double huge = pml::log_loss(-1000.0);
    CHECK(std::isfinite(huge));
    CHECK(huge == Catch::Approx(1000.0).epsilon(1e-12));
}

TEST_CASE("log loss softplus identity and monotonicity") {
    pml::Rng rng(5);
    double prev = pml::log_loss(-30.0);
    for (double u = -29.5; u <= 30.0; u += 0.5) {
        const double value = pml::log_loss(u);
        CHECK(value < prev);
        CHECK(value > 0.0);
        prev = value;
    }
    for (int i = 0; i < 200; ++i) {
        const double u = (rng.uniform01() - 0.5) * 60.0;
        CHECK(pml::log_loss(u) + u == Catch::Approx(pml::log_loss(-u)).margin(1e-10));
    }
}

TEST_CASE("decision functions") {
    CHECK(pml::decision_local(0.5, 2.0, 1.0) == 1.5);
    CHECK(pml::decision_local(6.0, 2.0, 3.0) == 0.0);
    CHECK(pml::decision_local(10.0, 2.0, 5.0) == 0.0);
    CHECK(pml::decision_global(0.0, 1.0) == 1.0);
    CHECK(pml::decision_global(1.0, 1.0) == 0.0);
}

TEST_CASE("decision_global with the mean-distance threshold on a toy set") {
    Matrix diffs(3, 2);
    diffs << 1, 0, 0, 2, 2, 2;
    double direct = 0.0;
    for (int i = 0; i < 3; ++i) direct += diffs.row(i).squaredNorm();
    direct /= 3.0;
    CHECK(pml::mean_sq_distance(diffs) == Catch::Approx(direct).epsilon(1e-14));
    CHECK(pml::decision_global(direct, direct) == 0.0);
}

TEST_CASE("regularizer") {
    CHECK(pml::regularizer(PsdMetric::identity(3)) == Catch::Approx(1.0));
    CHECK(pml::regularizer(PsdMetric::zero(4)) == 0.0);
    Matrix d(2, 2);
    d << 1, 0, 0, 2;
    CHECK(pml::regularizer(pml::psd_project(d)) == Catch::Approx(2.5).epsilon(1e-12));
}

TEST_CASE("objective with constant zero decision values") {
    // Identical features: every pair distance is zero in both spaces, so every
    // margin is zero and J = sum w * ln 2 = 2 ln 2.
    Matrix features = Matrix::Constant(4, 3, 1.5);
    const auto pairs = pml::build_pairs({0, 0, 1, 1}, pml::PairPolicy{});
    const auto set = pml::make_pair_set({{"o", features}}, {"p", features}, pairs);
    pml::HyperParams hp;
    hp.lambda = 0.0;
    const double j = pml::objective_mv(set, {PsdMetric::identity(3)}, PsdMetric::identity(3),
                                       pml::ViewWeights{{1.0}}, pml::ScaleParams{{1.0}}, hp);
    CHECK(j == Catch::Approx(2.0 * std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("saturated positive pair leaves only the regularizer") {
    Matrix orig(2, 2);
    orig << 0, 0, 0, 0;
    Matrix priv(2, 2);
    priv << 0, 0, 40.0, 0;  // privileged distance 1600, margin ~ 1600
    const std::vector<LabeledPair> pairs = {{0, 1, +1, 1.0}};
    const auto set = pml::make_pair_set({{"o", orig}}, {"p", priv}, pairs);
    pml::HyperParams hp;
    hp.lambda = 0.7;
    const PsdMetric p = PsdMetric::identity(2);
    const double j = pml::objective_mv(set, {PsdMetric::identity(2)}, p, pml::ViewWeights{{1.0}},
                                       pml::ScaleParams{{1.0}}, hp);
    CHECK(j == Catch::Approx(hp.lambda * pml::regularizer(p)).epsilon(1e-12));
}

TEST_CASE("objective matches the term-by-term oracle") {
    pml::Rng rng(41);
    for (int trial = 0; trial < 10; ++trial) {
        const auto inst = make_instance(rng, 2, 4, 3, 3);
        pml::HyperParams hp;
        hp.lambda = 0.01;
        hp.r = 3.0;
        const double lib = pml::objective_mv(inst.set, inst.metrics, inst.p, inst.weights,
                                             inst.betas, hp);
        std::vector<Matrix> view_diffs = inst.set.view_diffs;
        const double ref =
            oracle::objective(view_diffs, inst.set.priv_diffs, inst.labels, inst.pair_weights,
                              inst.raw_metrics, inst.p.matrix(), inst.weights.a, inst.betas.betas,
                              hp.lambda, hp.r);
        CHECK(lib == Catch::Approx(ref).epsilon(1e-12));
    }
}

TEST_CASE("objective equals weighted sum of partials") {
    pml::Rng rng(43);
    const auto inst = make_instance(rng, 2, 4, 3, 3);
    pml::HyperParams hp;
    hp.lambda = 0.05;
    hp.r = 3.0;
    double assembled = 0.0;
    for (std::size_t m = 0; m < 2; ++m) {
        const double fm =
            pml::partial_objective(inst.set, m, inst.metrics[m], inst.p, inst.betas.betas[m], hp);
        CHECK(fm > 0.0);
        assembled += std::pow(inst.weights[m], hp.r) * fm;
    }
    CHECK(pml::objective_mv(inst.set, inst.metrics, inst.p, inst.weights, inst.betas, hp) ==
          Catch::Approx(assembled).epsilon(1e-14));
}

TEST_CASE("objective is invariant to pair order") {
    pml::Rng rng(47);
    Matrix orig(6, 3);
    Matrix priv(6, 2);
    for (Eigen::Index i = 0; i < 6; ++i) {
        for (Eigen::Index j = 0; j < 3; ++j) orig(i, j) = rng.normal();
        for (Eigen::Index j = 0; j < 2; ++j) priv(i, j) = rng.normal();
    }
    auto pairs = pml::build_pairs({0, 0, 1, 1, 2, 2}, pml::PairPolicy{});
    pml::HyperParams hp;
    const auto eval = [&](const std::vector<LabeledPair>& ps) {
        const auto set = pml::make_pair_set({{"o", orig}}, {"p", priv}, ps);
        return pml::objective_mv(set, {PsdMetric::identity(3)}, PsdMetric::identity(2),
                                 pml::ViewWeights{{1.0}}, pml::ScaleParams{{1.3}}, hp);
    };
    const double forward = eval(pairs);
    std::reverse(pairs.begin(), pairs.end());
    CHECK(forward == Catch::Approx(eval(pairs)).epsilon(1e-12));
}

TEST_CASE("local thresholds matching sigma reduce to the global objective") {
    // Privileged features on a scaled simplex: every pair distance is exactly
    // 2, so beta = sigma/2 makes each local threshold exactly sigma.
    pml::Rng rng(53);
    const Eigen::Index n = 6;
    Matrix orig(n, 3);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < 3; ++j) orig(i, j) = rng.normal();
    Matrix priv = Matrix::Identity(n, n);
    const auto pairs = pml::build_pairs({0, 0, 1, 1, 2, 2}, pml::PairPolicy{});
    const auto set = pml::make_pair_set({{"o", orig}}, {"p", priv}, pairs);

    const double sigma = pml::mean_sq_distance(set.view_diffs[0]);
    pml::HyperParams hp;
    hp.lambda = 0.0;

    const PsdMetric metric = PsdMetric::identity(3);
    const double local =
        pml::partial_objective(set, 0, metric, PsdMetric::identity(n), sigma / 2.0, hp);

    const Vector d2 = pml::rowwise_metric_sq(set.view_diffs[0], metric.matrix());
    const Vector thr = Vector::Constant(d2.size(), sigma);
    const double global = pml::weighted_pair_loss(set.labels, set.weights, thr, d2);
    CHECK(local == global);  // bitwise: identical kernel, identical thresholds
}
