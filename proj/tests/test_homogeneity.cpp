#include <catch2/catch_amalgamated.hpp>

#include <numeric>
#include <random>
#include <set>

#include "mdlpart/homogeneity.hpp"
#include "test_helpers.hpp"

using namespace mdlpart;
using testutil::build_tree;

namespace {

std::vector<int> iota_vec(int from, int count) {
    std::vector<int> v(static_cast<std::size_t>(count));
    std::iota(v.begin(), v.end(), from);
    return v;
}

void check_fold_plan(const FoldPlan& plan, const std::vector<int>& members) {
    std::set<int> seen;
    std::size_t total = 0;
    for (const auto& fold : plan.folds) {
        CHECK_FALSE(fold.empty());
        for (int i : fold) CHECK(seen.insert(i).second);  // disjoint
        total += fold.size();
    }
    CHECK(total == members.size());
    for (int i : members) CHECK(seen.count(i) == 1);
}

Dataset linear_dataset(const HierarchyTree& tree, double slope, double intercept,
                       unsigned long long seed, double noise_sd = 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const int n = tree.n_individuals();
    Eigen::MatrixXd x(n, 2);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
        x(i, 0) = normal(rng);
        x(i, 1) = normal(rng);
        y(i) = slope * x(i, 0) + intercept + (noise_sd > 0 ? noise_sd * normal(rng) : 0.0);
    }
    return Dataset(std::move(x), std::move(y));
}

}  // namespace

TEST_CASE("build_folds uses children when present") {
    const auto tree = build_tree(
        8, {{iota_vec(0, 8)}, {{0, 1}, {2, 3}, {4, 5}, {6, 7}}});
    const auto plan = build_folds(tree.cluster(0), tree);
    CHECK(plan.source == FoldPlan::Source::subclusters);
    REQUIRE(plan.folds.size() == 4);
    CHECK(plan.folds[0] == std::vector<int>{0, 1});
    check_fold_plan(plan, tree.cluster(0).members);
}

TEST_CASE("build_folds splits leaves into k near-equal seeded folds") {
    const auto tree = build_tree(100, {{iota_vec(0, 100)}});
    const auto plan = build_folds(tree.cluster(0), tree, 10, 42);
    CHECK(plan.source == FoldPlan::Source::kfold);
    REQUIRE(plan.folds.size() == 10);
    for (const auto& fold : plan.folds) CHECK(fold.size() == 10);
    check_fold_plan(plan, tree.cluster(0).members);

    SECTION("same seed reproduces the plan, different seed reshuffles") {
        const auto again = build_folds(tree.cluster(0), tree, 10, 42);
        CHECK(again.folds == plan.folds);
        const auto other = build_folds(tree.cluster(0), tree, 10, 43);
        CHECK(other.folds != plan.folds);
    }
}

TEST_CASE("build_folds merges undersized folds") {
    const auto tree = build_tree(13, {{iota_vec(0, 13)}});
    const auto plan = build_folds(tree.cluster(0), tree, 10, 7);
    check_fold_plan(plan, tree.cluster(0).members);
    std::size_t total = 0;
    for (const auto& fold : plan.folds) {
        CHECK(fold.size() >= 2);
        total += fold.size();
    }
    CHECK(total == 13);
    CHECK_FALSE(plan.degenerate);
}

TEST_CASE("build_folds flags degenerate clusters") {
    const auto tree = build_tree(2, {{{0}, {1}}});
    const auto plan = build_folds(tree.cluster(0), tree, 10, 0);
    CHECK(plan.degenerate);
    CHECK(plan.folds.size() == 1);
}

TEST_CASE("pearson_corr") {
    Eigen::VectorXd a(4);
    a << 1, 2, 3, 4;
    CHECK(pearson_corr(a, a) == Catch::Approx(1.0));
    CHECK(pearson_corr(a, (-a).eval()) == Catch::Approx(-1.0));
    CHECK(pearson_corr(a, Eigen::VectorXd::Constant(4, 2.0)) == 0.0);
    CHECK(pearson_corr(Eigen::VectorXd::Constant(4, 2.0), a) == 0.0);

    Eigen::VectorXd one(1);
    one << 1;
    CHECK_THROWS_AS(pearson_corr(one, one), std::domain_error);
}

TEST_CASE("eta is 1 on an exactly homogeneous cluster with child folds") {
    const auto tree = build_tree(
        80, {{iota_vec(0, 80)},
             {iota_vec(0, 20), iota_vec(20, 20), iota_vec(40, 20), iota_vec(60, 20)}});
    const auto data = linear_dataset(tree, 2.5, 1.0, 3);
    CHECK(eta(tree.cluster(0), data, tree) == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("eta on pure noise stays near zero") {
    // folds of 50: corr^2 against an unrelated prediction averages ~1/49
    const auto tree = build_tree(500, {{iota_vec(0, 500)}});
    double total = 0.0;
    for (unsigned long long seed = 0; seed < 50; ++seed) {
        std::mt19937_64 rng(seed * 17 + 5);
        std::normal_distribution<double> normal(0.0, 1.0);
        Eigen::MatrixXd x(500, 3);
        Eigen::VectorXd y(500);
        for (int i = 0; i < 500; ++i) {
            for (int j = 0; j < 3; ++j) x(i, j) = normal(rng);
            y(i) = normal(rng);  // independent of every feature
        }
        const Dataset data(std::move(x), std::move(y));
        const double value = eta(tree.cluster(0), data, tree, {}, seed);
        CHECK(value >= 0.0);
        CHECK(value <= 1.0);
        total += value;
    }
    CHECK(total / 50.0 < 0.05);
}

TEST_CASE("anti-correlated folds still score eta = 1") {
    // two child folds generated by slopes +2 and -2: per-fold corr is -1,
    // squared to 1
    const auto tree = build_tree(40, {{iota_vec(0, 40)}, {iota_vec(0, 20), iota_vec(20, 20)}});
    std::mt19937_64 rng(11);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd x(40, 1);
    Eigen::VectorXd y(40);
    for (int i = 0; i < 40; ++i) {
        x(i, 0) = normal(rng);
        y(i) = (i < 20 ? 2.0 : -2.0) * x(i, 0);
    }
    const Dataset data(std::move(x), std::move(y));
    const auto detail = eta_detail(tree.cluster(0), data, tree);
    REQUIRE(detail.fold_corr.size() == 2);
    CHECK(detail.fold_corr[0] == Catch::Approx(-1.0).margin(1e-9));
    CHECK(detail.fold_corr[1] == Catch::Approx(-1.0).margin(1e-9));
    CHECK(detail.eta == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("eta stays in [0,1] and respects the squared-correlation bound") {
    std::mt19937_64 rng(29);
    std::uniform_real_distribution<double> noise_level(0.0, 3.0);
    for (int trial = 0; trial < 30; ++trial) {
        const auto tree = build_tree(
            60, {{iota_vec(0, 60)}, {iota_vec(0, 20), iota_vec(20, 20), iota_vec(40, 20)}});
        const double sd = noise_level(rng);
        const auto data =
            linear_dataset(tree, 2.0, 0.5, static_cast<unsigned long long>(trial) + 100, sd);
        const auto detail = eta_detail(tree.cluster(0), data, tree);
        CHECK(detail.eta >= 0.0);
        CHECK(detail.eta <= 1.0);
        // constructive Prop-3 form: if every fold clears gamma, eta >= gamma^2
        double min_sq = 1.0;
        for (double c : detail.fold_corr) min_sq = std::min(min_sq, c * c);
        CHECK(detail.eta >= min_sq - 1e-12);
    }
}

TEST_CASE("eta is invariant to fold order") {
    const auto tree = build_tree(40, {{iota_vec(0, 40)}, {iota_vec(0, 20), iota_vec(20, 20)}});
    const auto data = linear_dataset(tree, 1.5, 0.0, 9, 0.5);
    const double base = eta(tree.cluster(0), data, tree);

    // swap the two children: same folds, opposite order
    const auto swapped = build_tree(40, {{iota_vec(0, 40)}, {iota_vec(20, 20), iota_vec(0, 20)}});
    CHECK(eta(swapped.cluster(0), data, swapped) == base);
}

TEST_CASE("degenerate clusters score eta 0") {
    const auto tree = build_tree(2, {{{0, 1}}, {{0}, {1}}});
    Eigen::MatrixXd x(2, 1);
    x << 1, 2;
    Eigen::VectorXd y(2);
    y << 1, 2;
    const Dataset data(std::move(x), std::move(y));
    // leaf singletons cannot be cross-validated
    const auto detail = eta_detail(tree.cluster(1), data, tree);
    CHECK(detail.degenerate);
    CHECK(detail.eta == 0.0);
}

TEST_CASE("fold fit failures contribute zero") {
    // complement of each child has 3 rows < min_rows for d = 2
    const auto tree = build_tree(6, {{iota_vec(0, 6)}, {{0, 1, 2}, {3, 4, 5}}});
    const auto data = linear_dataset(tree, 2.0, 0.0, 31);
    const double value = eta(tree.cluster(0), data, tree);
    CHECK(value == 0.0);
}
