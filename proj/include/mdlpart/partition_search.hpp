#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "mdlpart/encoding.hpp"
#include "mdlpart/homogeneity.hpp"
#include "mdlpart/regression.hpp"
#include "mdlpart/types.hpp"

namespace mdlpart {

struct SearchConfig {
    double gamma = 0.05;
    FitOptions fit_options{};
    unsigned long long seed = 0;
    bool compute_eta_everywhere = false;
    int cv_folds = 10;
};

namespace detail {

inline void require_valid(const HierarchyTree& tree) {
    const ValidationResult check = validate_tree(tree);
    if (!check.ok()) {
        std::string msg = "invalid hierarchy:";
        for (const auto& v : check.violations) msg += "\n  " + v.detail;
        throw std::invalid_argument(msg);
    }
}

inline bool has_selected_ancestor(const HierarchyTree& tree, ClusterId id,
                                  const std::vector<char>& selected) {
    for (auto p = tree.cluster(id).parent; p; p = tree.cluster(*p).parent)
        if (selected[static_cast<std::size_t>(*p)]) return true;
    return false;
}

/// Fit every cluster once (null fallback for undersized ones) and cache the
/// null-vs-fitted model reduction ratio.
struct FittedClusters {
    std::map<ClusterId, RegressionModel> models;
    std::map<ClusterId, double> model_irr;
};

inline FittedClusters fit_all_clusters(const Dataset& dataset, const HierarchyTree& tree,
                                       const FitOptions& options) {
    FittedClusters out;
    for (const auto& cluster : tree.clusters()) {
        const ClusterData rows = restrict(dataset, cluster);
        RegressionModel model = fit_model(rows.features, rows.target, options);
        model.fitted_on = cluster.id;
        RegressionModel null_model = fit_null(rows.target);
        null_model.fitted_on = cluster.id;
        out.model_irr[cluster.id] = model_irr(rows, null_model, model);
        out.models[cluster.id] = std::move(model);
    }
    return out;
}

/// The fitted-class model when it reduces code length over the null model,
/// otherwise the null model; ties go to null.
inline RegressionModel resolve_optimal_model(const Dataset& dataset, const HierarchyTree& tree,
                                             ClusterId id, const FittedClusters& fitted) {
    if (fitted.model_irr.at(id) > 0.0) return fitted.models.at(id);
    const ClusterData rows = restrict(dataset, tree.cluster(id));
    RegressionModel null_model = fit_null(rows.target);
    null_model.fitted_on = id;
    return null_model;
}

}  // namespace detail

/// Per-cluster choice between the fitted linear-class model and the null
/// mean model, by the sign of the model information reduction ratio.
inline RegressionModel select_optimal_model(const Cluster& cluster,
                                            const std::map<ClusterId, RegressionModel>& models,
                                            const Dataset& dataset) {
    const ClusterData rows = restrict(dataset, cluster);
    auto it = models.find(cluster.id);
    if (it == models.end())
        throw std::invalid_argument("select_optimal_model: no fitted model for cluster " +
                                    std::to_string(cluster.id));
    RegressionModel null_model = fit_null(rows.target);
    null_model.fitted_on = cluster.id;
    if (model_irr(rows, null_model, it->second) > 0.0) return it->second;
    return null_model;
}

/// Top-down maximal homogeneous partition search.
///
/// Every cluster gets a fitted model. Walking layers coarse to fine, a
/// cluster with no selected ancestor is selected when its single model
/// encodes its rows more compactly than its children's models
/// (cluster_irr > 0) and it is homogeneous enough (eta >= gamma);
/// last-layer clusters are selected unconditionally. Selected clusters then
/// get their optimal model (fitted vs null), and gamma_prime reports the
/// weakest homogeneity among them.
inline InferenceReport find_maximal_homogeneous_partition(const Dataset& dataset,
                                                          const HierarchyTree& tree,
                                                          const SearchConfig& config = {}) {
    detail::require_valid(tree);
    if (dataset.n() != tree.n_individuals())
        throw std::invalid_argument("search: dataset and tree disagree on population size");

    detail::FittedClusters fitted = detail::fit_all_clusters(dataset, tree, config.fit_options);

    std::vector<char> selected(static_cast<std::size_t>(tree.num_clusters()), 0);
    std::map<ClusterId, double> eta_values;
    std::map<ClusterId, double> cluster_irr_values;
    auto eta_of = [&](ClusterId id) {
        auto it = eta_values.find(id);
        if (it != eta_values.end()) return it->second;
        const double value = eta(tree.cluster(id), dataset, tree, config.fit_options, config.seed,
                                 config.cv_folds);
        eta_values.emplace(id, value);
        return value;
    };

    for (int k = 1; k <= tree.n_layers(); ++k) {
        for (ClusterId id : tree.layer(k)) {
            if (detail::has_selected_ancestor(tree, id, selected)) continue;
            const Cluster& cluster = tree.cluster(id);
            if (!cluster.children.empty()) {
                const CodeLength c_h = model_bits(fitted.models.at(id));
                const double irr = cluster_irr(dataset, tree, cluster.children, cluster,
                                               fitted.models, c_h);
                cluster_irr_values[id] = irr;
                // eta is the expensive term; evaluate it only past the IRR gate
                if (irr > 0.0 && eta_of(id) >= config.gamma)
                    selected[static_cast<std::size_t>(id)] = 1;
            } else {
                selected[static_cast<std::size_t>(id)] = 1;
            }
        }
    }

    std::vector<ClusterId> chosen;
    for (ClusterId id = 0; id < tree.num_clusters(); ++id)
        if (selected[static_cast<std::size_t>(id)]) chosen.push_back(id);

    std::map<ClusterId, RegressionModel> optimal;
    double gamma_prime = std::numeric_limits<double>::infinity();
    for (ClusterId id : chosen) {
        optimal.emplace(id, detail::resolve_optimal_model(dataset, tree, id, fitted));
        gamma_prime = std::min(gamma_prime, eta_of(id));
    }
    if (config.compute_eta_everywhere)
        for (const auto& cluster : tree.clusters()) eta_of(cluster.id);

    return InferenceReport{Partition(tree, chosen),
                           std::move(fitted.models),
                           std::move(optimal),
                           std::move(eta_values),
                           std::move(fitted.model_irr),
                           std::move(cluster_irr_values),
                           config.gamma,
                           gamma_prime};
}

/// Greedy baseline: sort all clusters by in-sample RMSE ascending and accept
/// each one that does not overlap anything already accepted. RMSE below the
/// exact-fit noise floor (1e-9) counts as zero, and ties break toward deeper
/// layers: on noiseless data every cluster of an exactly-fit region ties, and
/// this baseline's documented behavior is to take the small ones. The
/// as-published superset test admits overlaps (a parent arriving after its
/// child), so acceptance is by full disjointness, and any residual gap is
/// filled with last-layer clusters.
inline InferenceReport greedy_partition(const Dataset& dataset, const HierarchyTree& tree,
                                        const SearchConfig& config = {}) {
    detail::require_valid(tree);
    if (dataset.n() != tree.n_individuals())
        throw std::invalid_argument("search: dataset and tree disagree on population size");

    detail::FittedClusters fitted = detail::fit_all_clusters(dataset, tree, config.fit_options);

    std::vector<double> cluster_rmse(static_cast<std::size_t>(tree.num_clusters()), 0.0);
    for (const auto& cluster : tree.clusters()) {
        const ClusterData rows = restrict(dataset, cluster);
        cluster_rmse[static_cast<std::size_t>(cluster.id)] =
            rmse(rows.target, predict(fitted.models.at(cluster.id), rows.features));
    }

    constexpr double kExactFitFloor = 1e-9;
    std::vector<ClusterId> order(static_cast<std::size_t>(tree.num_clusters()));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](ClusterId a, ClusterId b) {
        const double ra = cluster_rmse[static_cast<std::size_t>(a)] < kExactFitFloor
                              ? 0.0
                              : cluster_rmse[static_cast<std::size_t>(a)];
        const double rb = cluster_rmse[static_cast<std::size_t>(b)] < kExactFitFloor
                              ? 0.0
                              : cluster_rmse[static_cast<std::size_t>(b)];
        if (ra != rb) return ra < rb;
        const int la = tree.cluster(a).layer;
        const int lb = tree.cluster(b).layer;
        if (la != lb) return la > lb;
        return a < b;
    });

    std::vector<char> covered(static_cast<std::size_t>(tree.n_individuals()), 0);
    std::vector<ClusterId> chosen;
    auto try_select = [&](ClusterId id) {
        const Cluster& cluster = tree.cluster(id);
        for (int i : cluster.members)
            if (covered[static_cast<std::size_t>(i)]) return;
        for (int i : cluster.members) covered[static_cast<std::size_t>(i)] = 1;
        chosen.push_back(id);
    };
    for (ClusterId id : order) try_select(id);
    for (int i = 0; i < tree.n_individuals(); ++i)
        if (!covered[static_cast<std::size_t>(i)]) try_select(tree.membership(tree.n_layers(), i));
    std::sort(chosen.begin(), chosen.end());

    std::map<ClusterId, double> eta_values;
    std::map<ClusterId, RegressionModel> optimal;
    double gamma_prime = std::numeric_limits<double>::infinity();
    for (ClusterId id : chosen) {
        optimal.emplace(id, detail::resolve_optimal_model(dataset, tree, id, fitted));
        const double value = eta(tree.cluster(id), dataset, tree, config.fit_options, config.seed,
                                 config.cv_folds);
        eta_values.emplace(id, value);
        gamma_prime = std::min(gamma_prime, value);
    }

    return InferenceReport{Partition(tree, chosen),
                           std::move(fitted.models),
                           std::move(optimal),
                           std::move(eta_values),
                           std::move(fitted.model_irr),
                           {},
                           config.gamma,
                           gamma_prime};
}

/// Number of distinct antichain covers of the hierarchy, saturating at
/// 2^63-1. Per subtree: 1 (take the node) plus the product over children.
inline std::uint64_t count_mrc_partitions(const HierarchyTree& tree) {
    constexpr std::uint64_t kSat = std::numeric_limits<std::int64_t>::max();
    auto sat_mul = [](std::uint64_t a, std::uint64_t b) {
        if (a == 0 || b == 0) return std::uint64_t{0};
        if (a > kSat / b) return kSat;
        return a * b;
    };
    std::vector<std::uint64_t> count(static_cast<std::size_t>(tree.num_clusters()), 0);
    for (int k = tree.n_layers(); k >= 1; --k) {
        for (ClusterId id : tree.layer(k)) {
            const Cluster& c = tree.cluster(id);
            if (c.children.empty()) {
                count[static_cast<std::size_t>(id)] = 1;
            } else {
                std::uint64_t prod = 1;
                for (ClusterId ch : c.children)
                    prod = sat_mul(prod, count[static_cast<std::size_t>(ch)]);
                std::uint64_t total = prod + 1;
                if (total < prod) total = kSat;
                count[static_cast<std::size_t>(id)] = std::min(total, kSat);
            }
        }
    }
    std::uint64_t total = 1;
    for (ClusterId id : tree.layer(1)) total = sat_mul(total, count[static_cast<std::size_t>(id)]);
    return total;
}

/// Every MRC partition of the tree, each exactly once. Counts first and
/// refuses (std::length_error carrying the estimate) above the cap.
inline std::vector<Partition> enumerate_mrc_partitions(const HierarchyTree& tree,
                                                       std::uint64_t cap = 1'000'000) {
    detail::require_valid(tree);
    const std::uint64_t estimate = count_mrc_partitions(tree);
    if (estimate > cap)
        throw std::length_error("enumerate_mrc_partitions: estimated " +
                                std::to_string(estimate) + " partitions exceeds cap " +
                                std::to_string(cap));

    // options(c): either {c} itself or any combination of its children's options
    std::vector<std::vector<std::vector<ClusterId>>> options(
        static_cast<std::size_t>(tree.num_clusters()));
    auto cross = [](const std::vector<std::vector<std::vector<ClusterId>>*>& parts) {
        std::vector<std::vector<ClusterId>> acc{{}};
        for (const auto* part : parts) {
            std::vector<std::vector<ClusterId>> next;
            next.reserve(acc.size() * part->size());
            for (const auto& prefix : acc)
                for (const auto& choice : *part) {
                    std::vector<ClusterId> row = prefix;
                    row.insert(row.end(), choice.begin(), choice.end());
                    next.push_back(std::move(row));
                }
            acc = std::move(next);
        }
        return acc;
    };
    for (int k = tree.n_layers(); k >= 1; --k) {
        for (ClusterId id : tree.layer(k)) {
            const Cluster& c = tree.cluster(id);
            auto& mine = options[static_cast<std::size_t>(id)];
            if (!c.children.empty()) {
                std::vector<std::vector<std::vector<ClusterId>>*> parts;
                for (ClusterId ch : c.children) parts.push_back(&options[static_cast<std::size_t>(ch)]);
                mine = cross(parts);
            }
            mine.push_back({id});
        }
    }
    std::vector<std::vector<std::vector<ClusterId>>*> roots;
    for (ClusterId id : tree.layer(1)) roots.push_back(&options[static_cast<std::size_t>(id)]);
    std::vector<Partition> result;
    for (auto& ids : cross(roots)) result.emplace_back(tree, std::move(ids));
    return result;
}

}  // namespace mdlpart
