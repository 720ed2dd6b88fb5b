#pragma once

#include <Eigen/Dense>

#include <map>
#include <span>
#include <stdexcept>
#include <vector>

#include "mdlpart/code_length.hpp"
#include "mdlpart/regression.hpp"
#include "mdlpart/types.hpp"

namespace mdlpart {

/// Bits to encode the targets given the model: sum over rows of
/// bits_real(y_i - yhat_i). A zero residual still costs one bit. The
/// feature-encoding term is deliberately left out here; it is identical for
/// every model on the same rows (see partition_code_length's include_x).
inline CodeLength residual_bits(const Eigen::MatrixXd& features, const Eigen::VectorXd& target,
                                const RegressionModel& model) {
    return bits_vector((target - predict(model, features)).eval());
}

inline CodeLength residual_bits(const ClusterData& rows, const RegressionModel& model) {
    return residual_bits(rows.features, rows.target, model);
}

/// Two-part total for a partition: per cluster, the model's parameter bits
/// plus its residual bits. include_x adds the feature-encoding term, a
/// constant independent of the model map.
inline CodeLength partition_code_length(const Partition& partition,
                                        const std::map<ClusterId, RegressionModel>& models,
                                        const Dataset& dataset, const HierarchyTree& tree,
                                        bool include_x = false) {
    CodeLength total;
    for (ClusterId id : partition.cluster_ids()) {
        auto it = models.find(id);
        if (it == models.end())
            throw std::invalid_argument("partition_code_length: no model for cluster " +
                                        std::to_string(id));
        const ClusterData rows = restrict(dataset, tree.cluster(id));
        total += model_bits(it->second);
        total += residual_bits(rows, it->second);
    }
    if (include_x) total += bits_vector(dataset.features);
    return total;
}

/// Model Information Reduction Ratio on one cluster's rows:
///   (R1 - R2 + B1 - B2) / (R1 + B1)
/// with R the residual bits and B the parameter bits of each model.
/// Positive means model_2 encodes the rows more compactly than model_1.
inline double model_irr(const Eigen::MatrixXd& features, const Eigen::VectorXd& target,
                        const RegressionModel& model_1, const RegressionModel& model_2) {
    const double r1 = static_cast<double>(residual_bits(features, target, model_1).bits);
    const double r2 = static_cast<double>(residual_bits(features, target, model_2).bits);
    const double b1 = static_cast<double>(model_bits(model_1).bits);
    const double b2 = static_cast<double>(model_bits(model_2).bits);
    return (r1 - r2 + b1 - b2) / (r1 + b1);
}

inline double model_irr(const ClusterData& rows, const RegressionModel& model_1,
                        const RegressionModel& model_2) {
    return model_irr(rows.features, rows.target, model_1, model_2);
}

/// Cluster Information Reduction Ratio of a parent against its children:
///   (R_children - R_parent + c_H * (k - 1)) / (R_children + c_H * k)
/// where k is the number of children, R are residual bits under each side's
/// own fitted model, and c_H is the per-model parameter cost. Positive means
/// the single parent model encodes the same rows more compactly.
inline double cluster_irr(const Dataset& dataset, const HierarchyTree& tree,
                          std::span<const ClusterId> children, const Cluster& parent,
                          const std::map<ClusterId, RegressionModel>& models, CodeLength c_h) {
    std::vector<int> merged;
    CodeLength r_children;
    for (ClusterId id : children) {
        const Cluster& child = tree.cluster(id);
        merged.insert(merged.end(), child.members.begin(), child.members.end());
        auto it = models.find(id);
        if (it == models.end())
            throw std::invalid_argument("cluster_irr: no model for child " + std::to_string(id));
        r_children += residual_bits(restrict(dataset, child), it->second);
    }
    std::sort(merged.begin(), merged.end());
    if (merged != parent.members)
        throw std::invalid_argument("cluster_irr: children do not cover parent '" + parent.name +
                                    "' exactly");
    auto it = models.find(parent.id);
    if (it == models.end())
        throw std::invalid_argument("cluster_irr: no model for parent " + std::to_string(parent.id));
    const double r1 = static_cast<double>(r_children.bits);
    const double r2 = static_cast<double>(residual_bits(restrict(dataset, parent), it->second).bits);
    const double k = static_cast<double>(children.size());
    const double ch = static_cast<double>(c_h.bits);
    return (r1 - r2 + ch * (k - 1.0)) / (r1 + ch * k);
}

}  // namespace mdlpart
