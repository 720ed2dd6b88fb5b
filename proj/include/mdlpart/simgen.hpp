#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mdlpart/types.hpp"

namespace mdlpart {

enum class DatasetType { type1, type2, type3, type4, exponential, polynomial };

inline const char* to_string(DatasetType t) {
    switch (t) {
        case DatasetType::type1: return "type1";
        case DatasetType::type2: return "type2";
        case DatasetType::type3: return "type3";
        case DatasetType::type4: return "type4";
        case DatasetType::exponential: return "exponential";
        case DatasetType::polynomial: return "polynomial";
    }
    return "?";
}

inline DatasetType dataset_type_from_string(const std::string& s) {
    if (s == "type1") return DatasetType::type1;
    if (s == "type2") return DatasetType::type2;
    if (s == "type3") return DatasetType::type3;
    if (s == "type4") return DatasetType::type4;
    if (s == "exponential" || s == "exp") return DatasetType::exponential;
    if (s == "polynomial" || s == "poly") return DatasetType::polynomial;
    throw std::invalid_argument("unknown dataset type '" + s + "'");
}

enum class GeneratorKind { linear, exponential, polynomial };

inline const char* to_string(GeneratorKind k) {
    switch (k) {
        case GeneratorKind::linear: return "linear";
        case GeneratorKind::exponential: return "exponential";
        case GeneratorKind::polynomial: return "polynomial";
    }
    return "?";
}

struct SimSpec {
    DatasetType dataset_type = DatasetType::type1;
    int d = 20;
    int leaf_size = 0;  // 0 -> 10,000 for linear types, 100 for nonlinear
    double noise_sd = 0.0;
    int poly_degree = 3;
    unsigned long long seed = 0;
    std::pair<double, double> coefficient_range{1.0, 5.0};  // |c1| bounds

    int effective_leaf_size() const {
        if (leaf_size > 0) return leaf_size;
        return (dataset_type == DatasetType::exponential ||
                dataset_type == DatasetType::polynomial)
                   ? 100
                   : 10000;
    }
    GeneratorKind generator_kind() const {
        switch (dataset_type) {
            case DatasetType::exponential: return GeneratorKind::exponential;
            case DatasetType::polynomial: return GeneratorKind::polynomial;
            default: return GeneratorKind::linear;
        }
    }
};

/// The generating function of one ground-truth cluster:
/// y = c1 * f(x[feature]) + c2 with f per kind.
struct ClusterGenerator {
    int feature = 0;  // 0-based column
    double c1 = 0.0;
    double c2 = 0.0;
    GeneratorKind kind = GeneratorKind::linear;
};

struct GroundTruth {
    Partition partition;
    std::map<ClusterId, ClusterGenerator> generators;
};

struct Simulation {
    Dataset dataset;
    HierarchyTree tree;
    GroundTruth truth;
};

namespace detail {

/// Uniform-depth tree with the given per-layer branching factors; leaves
/// cover contiguous index ranges of leaf_size individuals. Names are path
/// labels built from per-level local indices.
inline HierarchyTree build_uniform_tree(const std::vector<int>& branching, int leaf_size) {
    int leaves = 1;
    for (int b : branching) leaves *= b;
    const int n = leaves * leaf_size;
    const int n_layers = static_cast<int>(branching.size()) + 1;

    std::vector<Cluster> clusters;
    struct Node { ClusterId id; int first_leaf; int leaf_count; };
    std::vector<Node> frontier;
    {
        Cluster root;
        root.id = 0;
        root.layer = 1;
        root.name = "0";
        clusters.push_back(std::move(root));
        frontier.push_back({0, 0, leaves});
    }
    for (std::size_t level = 0; level < branching.size(); ++level) {
        std::vector<Node> next;
        for (const Node& node : frontier) {
            const int b = branching[level];
            const int span = node.leaf_count / b;
            for (int j = 0; j < b; ++j) {
                Cluster c;
                c.id = static_cast<ClusterId>(clusters.size());
                c.layer = static_cast<int>(level) + 2;
                c.parent = node.id;
                c.name = clusters[static_cast<std::size_t>(node.id)].name + "/" +
                         std::to_string(j);
                clusters[static_cast<std::size_t>(node.id)].children.push_back(c.id);
                next.push_back({c.id, node.first_leaf + j * span, span});
                clusters.push_back(std::move(c));
            }
        }
        frontier = std::move(next);
    }
    // fill members bottom-up from leaf index ranges
    std::vector<std::pair<int, int>> range(clusters.size(), {0, 0});
    for (const Node& leaf : frontier)
        range[static_cast<std::size_t>(leaf.id)] = {leaf.first_leaf * leaf_size,
                                                    (leaf.first_leaf + leaf.leaf_count) * leaf_size};
    for (ClusterId id = static_cast<ClusterId>(clusters.size()) - 1; id >= 0; --id) {
        auto& c = clusters[static_cast<std::size_t>(id)];
        if (!c.children.empty()) {
            int lo = n, hi = 0;
            for (ClusterId ch : c.children) {
                lo = std::min(lo, range[static_cast<std::size_t>(ch)].first);
                hi = std::max(hi, range[static_cast<std::size_t>(ch)].second);
            }
            range[static_cast<std::size_t>(id)] = {lo, hi};
        }
        c.members.resize(static_cast<std::size_t>(range[static_cast<std::size_t>(id)].second -
                                                   range[static_cast<std::size_t>(id)].first));
        std::iota(c.members.begin(), c.members.end(), range[static_cast<std::size_t>(id)].first);
    }
    return HierarchyTree(n, n_layers, std::move(clusters));
}

/// Ground-truth cluster ids for each dataset type, over the type's tree.
inline std::vector<ClusterId> truth_cluster_ids(DatasetType type, const HierarchyTree& tree) {
    switch (type) {
        case DatasetType::type1:
            return tree.layer(1);
        case DatasetType::type2:
            return tree.layer(2);
        case DatasetType::type3:
            return tree.layer(3);
        default: {
            // type-4 shape: branch A as one layer-2 cluster, branch B's four
            // layer-3 clusters, branch C's eight layer-4 leaves
            const auto& level2 = tree.layer(2);
            std::vector<ClusterId> ids;
            ids.push_back(level2[0]);
            for (ClusterId mid : tree.cluster(level2[1]).children) ids.push_back(mid);
            for (ClusterId mid : tree.cluster(level2[2]).children)
                for (ClusterId leaf : tree.cluster(mid).children) ids.push_back(leaf);
            return ids;
        }
    }
}

}  // namespace detail

/// Draw (feature, c1, c2) for every ground-truth cluster: |c1| uniform in
/// coefficient_range with random sign, c2 uniform in [-5, 5], feature
/// uniform over columns. Pairs are redrawn until every cluster's
/// (feature, c1) differs from all earlier ones, so no two truth clusters
/// share a generating function.
inline std::map<ClusterId, ClusterGenerator> assign_coefficients(
    const SimSpec& spec, std::mt19937_64& rng, const std::vector<ClusterId>& truth_ids) {
    std::uniform_int_distribution<int> feature_dist(0, spec.d - 1);
    std::uniform_real_distribution<double> magnitude(spec.coefficient_range.first,
                                                     spec.coefficient_range.second);
    std::uniform_real_distribution<double> offset(-5.0, 5.0);
    std::bernoulli_distribution negate(0.5);

    std::map<ClusterId, ClusterGenerator> out;
    std::vector<std::pair<int, double>> used;
    for (ClusterId id : truth_ids) {
        ClusterGenerator g;
        g.kind = spec.generator_kind();
        do {
            g.feature = feature_dist(rng);
            g.c1 = magnitude(rng) * (negate(rng) ? -1.0 : 1.0);
        } while (std::find(used.begin(), used.end(), std::make_pair(g.feature, g.c1)) !=
                 used.end());
        g.c2 = offset(rng);
        used.emplace_back(g.feature, g.c1);
        out.emplace(id, g);
    }
    return out;
}

/// Generate one synthetic benchmark instance: standard-normal features, a
/// fixed tree shape per dataset type, and targets produced by each
/// ground-truth cluster's own generating function plus truncated Gaussian
/// noise (cut at 4 standard deviations).
inline Simulation generate(const SimSpec& spec) {
    if (spec.d < 1) throw std::invalid_argument("generate: need d >= 1");
    if (spec.noise_sd < 0) throw std::invalid_argument("generate: negative noise");
    const int leaf = spec.effective_leaf_size();
    if (leaf < 1) throw std::invalid_argument("generate: need leaf_size >= 1");

    const bool four_layer = spec.dataset_type == DatasetType::type4 ||
                            spec.dataset_type == DatasetType::exponential ||
                            spec.dataset_type == DatasetType::polynomial;
    HierarchyTree tree = four_layer ? detail::build_uniform_tree({3, 4, 2}, leaf)
                                    : detail::build_uniform_tree({2, 4}, leaf);
    const int n = tree.n_individuals();

    std::seed_seq coeff_seq{spec.seed, 1ull};
    std::mt19937_64 coeff_rng(coeff_seq);
    const std::vector<ClusterId> truth_ids = detail::truth_cluster_ids(spec.dataset_type, tree);
    std::map<ClusterId, ClusterGenerator> generators =
        assign_coefficients(spec, coeff_rng, truth_ids);

    std::seed_seq feature_seq{spec.seed, 2ull};
    std::mt19937_64 feature_rng(feature_seq);
    std::normal_distribution<double> standard_normal(0.0, 1.0);
    Eigen::MatrixXd x(n, spec.d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < spec.d; ++j) x(i, j) = standard_normal(feature_rng);

    std::seed_seq noise_seq{spec.seed, 3ull};
    std::mt19937_64 noise_rng(noise_seq);
    std::normal_distribution<double> noise_dist(0.0, spec.noise_sd);
    auto truncated_noise = [&]() {
        if (spec.noise_sd == 0.0) return 0.0;
        double e = noise_dist(noise_rng);
        while (std::fabs(e) > 4.0 * spec.noise_sd) e = noise_dist(noise_rng);
        return e;
    };

    Eigen::VectorXd y(n);
    for (ClusterId id : truth_ids) {
        const ClusterGenerator& g = generators.at(id);
        for (int i : tree.cluster(id).members) {
            const double v = x(i, g.feature);
            double base = 0.0;
            switch (g.kind) {
                case GeneratorKind::linear: base = v; break;
                case GeneratorKind::exponential: base = std::exp(v); break;
                case GeneratorKind::polynomial: base = std::pow(v, spec.poly_degree); break;
            }
            y(i) = g.c1 * base + g.c2 + truncated_noise();
        }
    }

    std::vector<std::string> names;
    names.reserve(static_cast<std::size_t>(spec.d));
    for (int j = 1; j <= spec.d; ++j) names.push_back("x" + std::to_string(j));
    Dataset dataset(std::move(x), std::move(y), std::move(names));
    GroundTruth truth{Partition(tree, truth_ids), std::move(generators)};
    return Simulation{std::move(dataset), std::move(tree), std::move(truth)};
}

}  // namespace mdlpart
