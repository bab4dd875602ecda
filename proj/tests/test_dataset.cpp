#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <set>

#include "pml/dataset.hpp"
#include "pml/rng.hpp"

using pml::FeatureView;
using pml::LabeledPair;
using pml::Matrix;
using pml::PairPolicy;

namespace {

FeatureView view_from_rows(const std::string& name, const Matrix& rows) {
    return FeatureView{name, rows};
}

}  // namespace

TEST_CASE("exhaustive pairing on two identities") {
    const auto pairs = pml::build_pairs({1, 1, 2, 2}, PairPolicy{});
    std::size_t n_pos = 0, n_neg = 0;
    for (const auto& p : pairs) {
        if (p.label == 1) {
            ++n_pos;
            CHECK(p.weight == 0.5);
        } else {
            ++n_neg;
            CHECK(p.weight == 0.25);
        }
    }
    CHECK(n_pos == 2);
    CHECK(n_neg == 4);

    std::set<std::pair<int, int>> positives;
    for (const auto& p : pairs)
        if (p.label == 1) positives.insert({p.a, p.b});
    CHECK(positives == std::set<std::pair<int, int>>{{0, 1}, {2, 3}});
}

TEST_CASE("pairing requires both classes") {
    CHECK_THROWS_AS(pml::build_pairs({1, 2}, PairPolicy{}), pml::DataError);
    CHECK_THROWS_AS(pml::build_pairs({3, 3, 3}, PairPolicy{}), pml::DataError);
    CHECK_THROWS_AS(pml::build_pairs({7}, PairPolicy{}), pml::DataError);
}

TEST_CASE("exhaustive pairing matches brute-force enumeration") {
    const std::vector<int> labels = {5, 5, 9, 9, 2, 2};
    const auto pairs = pml::build_pairs(labels, PairPolicy{});

    std::size_t expect_pos = 0, expect_neg = 0;
    for (std::size_t i = 0; i + 1 < labels.size(); ++i)
        for (std::size_t j = i + 1; j < labels.size(); ++j)
            (labels[i] == labels[j] ? expect_pos : expect_neg) += 1;
    CHECK(expect_pos == 3);
    CHECK(expect_neg == 12);
    CHECK(pairs.size() == expect_pos + expect_neg);

    std::size_t n_pos = 0;
    double weight_sum = 0.0;
    for (const auto& p : pairs) {
        weight_sum += p.weight;
        if (p.label == 1) ++n_pos;
        CHECK(p.a != p.b);
        CHECK(p.weight > 0.0);
    }
    CHECK(n_pos == expect_pos);
    CHECK(weight_sum == Catch::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("negative subsampling is capped and deterministic") {
    std::vector<int> labels;
    for (int id = 0; id < 12; ++id)
        for (int s = 0; s < 2; ++s) labels.push_back(id);

    PairPolicy policy;
    policy.negatives = PairPolicy::Negatives::Subsample;
    policy.seed = 99;
    policy.max_neg_per_pos = 3.0;

    const auto first = pml::build_pairs(labels, policy);
    const auto second = pml::build_pairs(labels, policy);
    REQUIRE(first.size() == second.size());
    for (std::size_t i = 0; i < first.size(); ++i) {
        CHECK(first[i].a == second[i].a);
        CHECK(first[i].b == second[i].b);
        CHECK(first[i].label == second[i].label);
    }

    std::size_t n_pos = 0, n_neg = 0;
    for (const auto& p : first) (p.label == 1 ? n_pos : n_neg) += 1;
    CHECK(n_pos == 12);
    CHECK(n_neg == 36);  // capped at 3 per positive

    policy.seed = 100;
    const auto other = pml::build_pairs(labels, policy);
    bool any_difference = false;
    for (std::size_t i = 0; i < first.size() && !any_difference; ++i)
        any_difference = first[i].a != other[i].a || first[i].b != other[i].b;
    CHECK(any_difference);

    double weight_sum = 0.0;
    for (const auto& p : first) weight_sum += p.weight;
    CHECK(weight_sum == Catch::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("compute_betas is the ratio of mean squared pair distances") {
    Matrix orig(2, 1);
    orig << 0.0, std::sqrt(10.0);
    Matrix priv(2, 1);
    priv << 0.0, std::sqrt(2.0);
    const std::vector<LabeledPair> pairs = {{0, 1, +1, 1.0}, {1, 0, -1, 1.0}};
    const auto set = pml::make_pair_set({view_from_rows("o", orig)}, view_from_rows("p", priv), pairs);
    const auto betas = pml::compute_betas(set);
    REQUIRE(betas.betas.size() == 1);
    CHECK(betas.betas[0] == Catch::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("beta is one when the views coincide") {
    pml::Rng rng(3);
    Matrix features(6, 4);
    for (Eigen::Index i = 0; i < 6; ++i)
        for (Eigen::Index j = 0; j < 4; ++j) features(i, j) = rng.normal();
    const auto pairs = pml::build_pairs({0, 0, 1, 1, 2, 2}, PairPolicy{});
    const auto set = pml::make_pair_set({view_from_rows("o", features)},
                                        view_from_rows("p", features), pairs);
    CHECK(pml::compute_betas(set).betas[0] == Catch::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("compute_betas matches direct summation on listed differences") {
    Matrix orig(4, 2);
    orig << 0, 0, 1, 2, 3, -1, 0.5, 0.5;
    Matrix priv(4, 3);
    priv << 0, 0, 0, 0.2, -0.4, 1, 2, 0, 0, 0, 1, 1;
    const std::vector<LabeledPair> pairs = {{0, 1, +1, 1.0}, {2, 3, +1, 1.0}, {0, 3, -1, 1.0}};
    const auto set = pml::make_pair_set({view_from_rows("o", orig)}, view_from_rows("p", priv), pairs);

    double orig_sum = 0.0, priv_sum = 0.0;
    for (const auto& p : pairs) {
        orig_sum += (orig.row(p.a) - orig.row(p.b)).squaredNorm();
        priv_sum += (priv.row(p.a) - priv.row(p.b)).squaredNorm();
    }
    CHECK(pml::compute_betas(set).betas[0] == Catch::Approx(orig_sum / priv_sum).epsilon(1e-12));
}

TEST_CASE("compute_betas rejects degenerate privileged features") {
    Matrix orig(2, 1);
    orig << 0.0, 1.0;
    Matrix priv = Matrix::Constant(2, 2, 3.0);
    const std::vector<LabeledPair> pairs = {{0, 1, +1, 1.0}};
    const auto set = pml::make_pair_set({view_from_rows("o", orig)}, view_from_rows("p", priv), pairs);
    CHECK_THROWS_AS(pml::compute_betas(set), pml::DataError);
}

TEST_CASE("compute_betas is invariant to pair order") {
    pml::Rng rng(17);
    Matrix orig(8, 3);
    Matrix priv(8, 2);
    for (Eigen::Index i = 0; i < 8; ++i) {
        for (Eigen::Index j = 0; j < 3; ++j) orig(i, j) = rng.normal();
        for (Eigen::Index j = 0; j < 2; ++j) priv(i, j) = rng.normal();
    }
    auto pairs = pml::build_pairs({0, 0, 1, 1, 2, 2, 3, 3}, PairPolicy{});
    const auto forward = pml::make_pair_set({view_from_rows("o", orig)}, view_from_rows("p", priv), pairs);
    std::reverse(pairs.begin(), pairs.end());
    const auto backward = pml::make_pair_set({view_from_rows("o", orig)}, view_from_rows("p", priv), pairs);
    CHECK(pml::compute_betas(forward).betas[0] ==
          Catch::Approx(pml::compute_betas(backward).betas[0]).epsilon(1e-12));
}

TEST_CASE("all-pairs beta equals brute force over C(n,2)") {
    pml::Rng rng(29);
    Matrix orig(7, 3);
    Matrix priv(7, 2);
    for (Eigen::Index i = 0; i < 7; ++i) {
        for (Eigen::Index j = 0; j < 3; ++j) orig(i, j) = rng.normal();
        for (Eigen::Index j = 0; j < 2; ++j) priv(i, j) = rng.normal();
    }
    double orig_sum = 0.0, priv_sum = 0.0;
    int count = 0;
    for (Eigen::Index i = 0; i < 7; ++i)
        for (Eigen::Index j = i + 1; j < 7; ++j) {
            orig_sum += (orig.row(i) - orig.row(j)).squaredNorm();
            priv_sum += (priv.row(i) - priv.row(j)).squaredNorm();
            ++count;
        }
    const auto betas =
        pml::compute_betas_all_pairs({view_from_rows("o", orig)}, view_from_rows("p", priv));
    CHECK(betas.betas[0] == Catch::Approx((orig_sum / count) / (priv_sum / count)).epsilon(1e-10));
}

TEST_CASE("make_pair_set validates inputs") {
    Matrix orig(3, 2);
    orig.setZero();
    Matrix short_priv(2, 2);
    short_priv.setZero();
    const std::vector<LabeledPair> pairs = {{0, 1, +1, 1.0}};
    CHECK_THROWS_AS(
        pml::make_pair_set({view_from_rows("o", orig)}, view_from_rows("p", short_priv), pairs),
        pml::DataError);

    Matrix priv(3, 2);
    priv.setZero();
    const std::vector<LabeledPair> out_of_range = {{0, 5, +1, 1.0}};
    CHECK_THROWS_AS(
        pml::make_pair_set({view_from_rows("o", orig)}, view_from_rows("p", priv), out_of_range),
        pml::DataError);

    Matrix bad = orig;
    bad(1, 1) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(
        pml::make_pair_set({view_from_rows("o", bad)}, view_from_rows("p", priv), pairs),
        pml::DataError);
}
