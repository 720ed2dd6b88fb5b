#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "mdlpart/types.hpp"
#include "test_helpers.hpp"

using namespace mdlpart;
using testutil::build_tree;

namespace {

HierarchyTree nested_3layer_tree() {
    // root; 2 children; 8 singleton grandchildren over n = 8
    return build_tree(8, {{{0, 1, 2, 3, 4, 5, 6, 7}},
                          {{0, 1, 2, 3}, {4, 5, 6, 7}},
                          {{0}, {1}, {2}, {3}, {4}, {5}, {6}, {7}}});
}

Dataset tiny_dataset(int n, int d = 2) {
    Eigen::MatrixXd x(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) x(i, j) = i + 0.25 * (j + 1);
    Eigen::VectorXd y = Eigen::VectorXd::LinSpaced(n, 1.0, n);
    return Dataset(std::move(x), std::move(y));
}

}  // namespace

TEST_CASE("validate_tree accepts a textbook nested partition") {
    const auto tree = nested_3layer_tree();
    const auto result = validate_tree(tree);
    CHECK(result.ok());
}

TEST_CASE("validate_tree reports overlap within a layer") {
    // two layer-2 clusters share individual 5
    const auto tree = build_tree(8, {{{0, 1, 2, 3, 4, 5, 6, 7}},
                                     {{0, 1, 2, 3, 5}, {4, 5, 6, 7}}});
    const auto result = validate_tree(tree);
    REQUIRE_FALSE(result.ok());
    bool found = false;
    for (const auto& v : result.violations)
        if (v.kind == Violation::Kind::overlap && v.layer == 2) found = true;
    CHECK(found);
}

TEST_CASE("validate_tree reports broken nesting") {
    // layer-3 cluster spans both layer-2 parents
    const auto tree = build_tree(8, {{{0, 1, 2, 3, 4, 5, 6, 7}},
                                     {{0, 1, 2, 3}, {4, 5, 6, 7}},
                                     {{0, 1, 2}, {3, 4}, {5, 6, 7}}});
    const auto result = validate_tree(tree);
    REQUIRE_FALSE(result.ok());
    bool found = false;
    for (const auto& v : result.violations)
        if (v.kind == Violation::Kind::broken_nesting) found = true;
    CHECK(found);
}

TEST_CASE("validate_tree reports coverage gaps and unpadded branches") {
    SECTION("missing individual at layer 2") {
        const auto tree = build_tree(4, {{{0, 1, 2, 3}}, {{0, 1}, {2}}});
        const auto result = validate_tree(tree);
        REQUIRE_FALSE(result.ok());
        bool found = false;
        for (const auto& v : result.violations)
            if (v.kind == Violation::Kind::coverage_gap && v.layer == 2) found = true;
        CHECK(found);
    }
    SECTION("branch that ends before the last layer") {
        auto tree = build_tree(4, {{{0, 1, 2, 3}}, {{0, 1}, {2, 3}}, {{0}, {1}}});
        const auto result = validate_tree(tree);
        CHECK_FALSE(result.ok());
    }
}

TEST_CASE("layer sizes sum to n in valid trees") {
    const auto tree = nested_3layer_tree();
    for (int k = 1; k <= tree.n_layers(); ++k) {
        std::size_t total = 0;
        for (ClusterId id : tree.layer(k)) total += tree.cluster(id).members.size();
        CHECK(total == static_cast<std::size_t>(tree.n_individuals()));
    }
}

TEST_CASE("restrict returns rows in member order") {
    const auto tree = nested_3layer_tree();
    const auto data = tiny_dataset(8);

    SECTION("all of D is the identity") {
        const auto rows = restrict(data, tree.cluster(0));
        CHECK(rows.features == data.features);
        CHECK(rows.target == data.target);
    }
    SECTION("singleton cluster") {
        Cluster c;
        c.members = {3};
        const auto rows = restrict(data, c);
        REQUIRE(rows.target.size() == 1);
        CHECK(rows.target(0) == data.target(3));
        CHECK(rows.features.row(0) == data.features.row(3));
    }
    SECTION("out-of-range member throws") {
        Cluster c;
        c.members = {7, 8};
        CHECK_THROWS_AS(restrict(data, c), std::out_of_range);
    }
}

TEST_CASE("restrict over children reconstructs the parent rows") {
    const auto tree = nested_3layer_tree();
    const auto data = tiny_dataset(8);
    const auto& parent = tree.cluster(tree.layer(2)[0]);
    const auto parent_rows = restrict(data, parent);

    std::vector<double> from_children;
    for (ClusterId ch : parent.children) {
        const auto rows = restrict(data, tree.cluster(ch));
        for (Eigen::Index i = 0; i < rows.target.size(); ++i)
            from_children.push_back(rows.target(i));
    }
    std::vector<double> from_parent(parent_rows.target.data(),
                                    parent_rows.target.data() + parent_rows.target.size());
    std::sort(from_children.begin(), from_children.end());
    std::sort(from_parent.begin(), from_parent.end());
    CHECK(from_children == from_parent);
}

TEST_CASE("Partition enforces disjoint cover") {
    const auto tree = nested_3layer_tree();

    CHECK_NOTHROW(Partition(tree, {0}));
    CHECK_NOTHROW(Partition(tree, {1, 2}));
    CHECK_NOTHROW(Partition(tree, {1, 7, 8, 9, 10}));  // mixed layers

    CHECK_THROWS_AS(Partition(tree, {0, 1}), std::invalid_argument);   // overlap
    CHECK_THROWS_AS(Partition(tree, {1}), std::invalid_argument);      // gap
    CHECK_THROWS_AS(Partition(tree, {1, 1, 2}), std::invalid_argument);  // duplicate

    SECTION("random invalid subsets are rejected") {
        std::mt19937_64 rng(7);
        const int m = tree.num_clusters();
        int checked = 0;
        for (int trial = 0; trial < 200; ++trial) {
            std::vector<ClusterId> ids;
            for (ClusterId id = 0; id < m; ++id)
                if (rng() % 2) ids.push_back(id);
            // count coverage to decide validity independently
            std::vector<int> cover(8, 0);
            for (ClusterId id : ids)
                for (int i : tree.cluster(id).members) cover[static_cast<std::size_t>(i)]++;
            const bool valid = !ids.empty() &&
                               std::all_of(cover.begin(), cover.end(), [](int c) { return c == 1; });
            if (valid) continue;
            ++checked;
            CHECK_THROWS_AS(Partition(tree, ids), std::invalid_argument);
        }
        CHECK(checked > 100);
    }
}

TEST_CASE("Dataset validates its invariants") {
    Eigen::MatrixXd x(2, 2);
    x << 1, 2, 3, 4;
    Eigen::VectorXd y(2);
    y << 1, 2;
    CHECK_NOTHROW(Dataset(x, y));

    Eigen::MatrixXd bad = x;
    bad(0, 1) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(Dataset(bad, y), std::invalid_argument);

    Eigen::VectorXd short_y(1);
    short_y << 1;
    CHECK_THROWS_AS(Dataset(x, short_y), std::invalid_argument);
    CHECK_THROWS_AS(Dataset(Eigen::MatrixXd(0, 2), Eigen::VectorXd(0)), std::invalid_argument);
}

TEST_CASE("from_layer_labels keys clusters by path") {
    // same village label "v" under two districts stays two clusters
    const std::vector<std::vector<std::string>> labels = {
        {"p", "p", "p", "p"},
        {"a", "a", "b", "b"},
        {"v", "v", "v", "v"},
    };
    const auto tree = HierarchyTree::from_layer_labels(4, labels);
    CHECK(tree.n_layers() == 3);
    CHECK(tree.layer(3).size() == 2);
    CHECK(validate_tree(tree).ok());
    const auto& leaf = tree.cluster(tree.layer(3)[0]);
    CHECK(leaf.name == "p/a/v");
    CHECK(leaf.token() == "v");
}
