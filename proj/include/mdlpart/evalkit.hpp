#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "mdlpart/regression.hpp"
#include "mdlpart/simgen.hpp"
#include "mdlpart/types.hpp"

namespace mdlpart {

/// Individual-level confusion counts. A predicted cluster scores as true
/// positive only when its member set equals a ground-truth cluster exactly;
/// partial overlaps fall into fp and fn.
struct Confusion {
    long long tp = 0;
    long long fp = 0;
    long long fn = 0;
};

inline Confusion confusion(const HierarchyTree& tree, const Partition& truth,
                           const Partition& predicted) {
    for (ClusterId id : truth.cluster_ids())
        if (id < 0 || id >= tree.num_clusters())
            throw std::invalid_argument("confusion: truth partition not over this tree");
    for (ClusterId id : predicted.cluster_ids())
        if (id < 0 || id >= tree.num_clusters())
            throw std::invalid_argument("confusion: predicted partition not over this tree");

    std::map<std::vector<int>, long long> truth_sets;
    long long truth_total = 0;
    for (ClusterId id : truth.cluster_ids()) {
        const auto& members = tree.cluster(id).members;
        truth_sets[members] = static_cast<long long>(members.size());
        truth_total += static_cast<long long>(members.size());
    }
    Confusion c;
    for (ClusterId id : predicted.cluster_ids()) {
        const auto& members = tree.cluster(id).members;
        auto it = truth_sets.find(members);
        if (it != truth_sets.end()) {
            c.tp += it->second;
            truth_sets.erase(it);
        } else {
            c.fp += static_cast<long long>(members.size());
        }
    }
    c.fn = truth_total - c.tp;
    return c;
}

inline Confusion confusion(const HierarchyTree& tree, const GroundTruth& truth,
                           const Partition& predicted) {
    return confusion(tree, truth.partition, predicted);
}

struct Scores {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// Precision/recall/F1 with the 0/0 -> 0 convention.
inline Scores prf1(const Confusion& c) {
    Scores s;
    const double tp = static_cast<double>(c.tp);
    s.precision = (c.tp + c.fp) > 0 ? tp / static_cast<double>(c.tp + c.fp) : 0.0;
    s.recall = (c.tp + c.fn) > 0 ? tp / static_cast<double>(c.tp + c.fn) : 0.0;
    s.f1 = (s.precision + s.recall) > 0.0
               ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
               : 0.0;
    return s;
}

/// RMSE over all individuals, each predicted by its selected cluster's
/// optimal model.
inline double partition_rmse(const InferenceReport& report, const Dataset& dataset,
                             const HierarchyTree& tree) {
    const int n = dataset.n();
    long long covered = 0;
    double sum_sq = 0.0;
    for (ClusterId id : report.partition.cluster_ids()) {
        auto it = report.optimal_models.find(id);
        if (it == report.optimal_models.end())
            throw std::invalid_argument("partition_rmse: no optimal model for cluster " +
                                        std::to_string(id));
        const ClusterData rows = restrict(dataset, tree.cluster(id));
        sum_sq += (rows.target - predict(it->second, rows.features)).squaredNorm();
        covered += rows.target.size();
    }
    if (covered != n) throw std::invalid_argument("partition_rmse: partition does not cover dataset");
    return std::sqrt(sum_sq / static_cast<double>(n));
}

/// Table baselines: one OLS over the whole population, and the global mean.
inline double pooled_linear_rmse(const Dataset& dataset, const FitOptions& options = {}) {
    const RegressionModel model = fit_model(dataset.features, dataset.target, options);
    return rmse(dataset.target, predict(model, dataset.features));
}

inline double null_model_rmse(const Dataset& dataset) {
    const RegressionModel model = fit_null(dataset.target);
    return rmse(dataset.target, predict(model, dataset.features));
}

}  // namespace mdlpart
