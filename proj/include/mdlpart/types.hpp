#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace mdlpart {

using ClusterId = int;

/// One node of the multi-resolution hierarchy. `members` is the sorted list
/// of 0-based individual indices the cluster covers; `name` is the canonical
/// path label ("province/district/village") used for reports and matching.
struct Cluster {
    ClusterId id = -1;
    int layer = 0;  // 1-based; layer 1 is the coarsest
    std::string name;
    std::vector<int> members;
    std::optional<ClusterId> parent;
    std::vector<ClusterId> children;

    std::string token() const {
        auto pos = name.rfind('/');
        return pos == std::string::npos ? name : name.substr(pos + 1);
    }
};

/// Observation table: n individuals by d independent variables plus a target.
struct Dataset {
    Eigen::MatrixXd features;  // n x d
    Eigen::VectorXd target;    // n
    std::vector<std::string> column_names;  // empty, or one name per feature

    Dataset(Eigen::MatrixXd x, Eigen::VectorXd y, std::vector<std::string> names = {})
        : features(std::move(x)), target(std::move(y)), column_names(std::move(names)) {
        if (features.rows() < 1 || features.cols() < 1)
            throw std::invalid_argument("Dataset: need at least one row and one feature");
        if (target.size() != features.rows())
            throw std::invalid_argument("Dataset: target length does not match row count");
        if (!features.allFinite() || !target.allFinite())
            throw std::invalid_argument("Dataset: non-finite entry");
        if (!column_names.empty() &&
            static_cast<Eigen::Index>(column_names.size()) != features.cols())
            throw std::invalid_argument("Dataset: column_names size mismatch");
    }

    int n() const { return static_cast<int>(features.rows()); }
    int d() const { return static_cast<int>(features.cols()); }
};

enum class ModelKind { linear, exponential_linear, null_mean };

inline const char* to_string(ModelKind k) {
    switch (k) {
        case ModelKind::linear: return "linear";
        case ModelKind::exponential_linear: return "exponential_linear";
        case ModelKind::null_mean: return "null_mean";
    }
    return "?";
}

/// A fitted per-cluster predictor. Linear kinds store d+1 coefficients with
/// the intercept first; the null model stores the single mean value.
struct RegressionModel {
    ModelKind kind = ModelKind::null_mean;
    Eigen::VectorXd coefficients;
    std::int64_t param_bits = 0;
    ClusterId fitted_on = -1;

    double mean() const {
        if (kind != ModelKind::null_mean)
            throw std::logic_error("RegressionModel::mean: not a null model");
        return coefficients(0);
    }
};

struct Violation {
    enum class Kind { overlap, coverage_gap, broken_nesting, bad_cluster };
    Kind kind;
    int layer = 0;
    std::vector<ClusterId> clusters;
    std::string detail;
};

struct ValidationResult {
    std::vector<Violation> violations;
    bool ok() const { return violations.empty(); }
};

/// The multi-resolution cluster hierarchy: n_layers stacked partitions of
/// the same population, each layer refining the one above it.
///
/// The structure is immutable after construction; algorithms share it
/// freely across threads.
class HierarchyTree {
public:
    HierarchyTree() = default;

    HierarchyTree(int n_individuals, int n_layers, std::vector<Cluster> clusters)
        : n_(n_individuals), n_layers_(n_layers), clusters_(std::move(clusters)) {
        if (n_ < 1 || n_layers_ < 1)
            throw std::invalid_argument("HierarchyTree: need n >= 1 and at least one layer");
        layer_index_.assign(static_cast<std::size_t>(n_layers_), {});
        for (const auto& c : clusters_) {
            if (c.id < 0 || c.id >= static_cast<ClusterId>(clusters_.size()) ||
                clusters_[static_cast<std::size_t>(c.id)].id != c.id)
                throw std::invalid_argument("HierarchyTree: cluster ids must be dense 0..m-1");
            if (c.layer < 1 || c.layer > n_layers_)
                throw std::invalid_argument("HierarchyTree: cluster layer out of range");
            layer_index_[static_cast<std::size_t>(c.layer - 1)].push_back(c.id);
        }
        membership_.assign(static_cast<std::size_t>(n_layers_),
                           std::vector<ClusterId>(static_cast<std::size_t>(n_), -1));
        for (const auto& c : clusters_)
            for (int i : c.members)
                if (i >= 0 && i < n_)
                    membership_[static_cast<std::size_t>(c.layer - 1)][static_cast<std::size_t>(i)] = c.id;
    }

    /// Builds a tree from per-individual labels, one vector per layer.
    /// Clusters are keyed by the full label path, so nesting holds by
    /// construction; ids are assigned in order of first appearance.
    static HierarchyTree from_layer_labels(int n,
                                           const std::vector<std::vector<std::string>>& labels) {
        const int n_layers = static_cast<int>(labels.size());
        if (n_layers < 1) throw std::invalid_argument("from_layer_labels: no layers");
        for (const auto& layer : labels)
            if (static_cast<int>(layer.size()) != n)
                throw std::invalid_argument("from_layer_labels: label vector length mismatch");

        std::vector<Cluster> clusters;
        std::unordered_map<std::string, ClusterId> by_path;
        std::vector<std::string> path(static_cast<std::size_t>(n));
        std::vector<ClusterId> prev_cluster(static_cast<std::size_t>(n), -1);
        for (int k = 0; k < n_layers; ++k) {
            for (int i = 0; i < n; ++i) {
                auto& p = path[static_cast<std::size_t>(i)];
                if (k == 0)
                    p = labels[0][static_cast<std::size_t>(i)];
                else
                    p += "/" + labels[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)];
                auto [it, inserted] = by_path.try_emplace(p, static_cast<ClusterId>(clusters.size()));
                if (inserted) {
                    Cluster c;
                    c.id = it->second;
                    c.layer = k + 1;
                    c.name = p;
                    if (k > 0) {
                        c.parent = prev_cluster[static_cast<std::size_t>(i)];
                        clusters[static_cast<std::size_t>(*c.parent)].children.push_back(c.id);
                    }
                    clusters.push_back(std::move(c));
                }
                clusters[static_cast<std::size_t>(it->second)].members.push_back(i);
                prev_cluster[static_cast<std::size_t>(i)] = it->second;
            }
        }
        return HierarchyTree(n, n_layers, std::move(clusters));
    }

    int n_individuals() const { return n_; }
    int n_layers() const { return n_layers_; }
    int num_clusters() const { return static_cast<int>(clusters_.size()); }
    const std::vector<Cluster>& clusters() const { return clusters_; }

    const Cluster& cluster(ClusterId id) const {
        if (id < 0 || id >= num_clusters())
            throw std::out_of_range("HierarchyTree: bad cluster id");
        return clusters_[static_cast<std::size_t>(id)];
    }

    /// Cluster ids at layer k (1-based).
    const std::vector<ClusterId>& layer(int k) const {
        if (k < 1 || k > n_layers_) throw std::out_of_range("HierarchyTree: bad layer");
        return layer_index_[static_cast<std::size_t>(k - 1)];
    }

    /// Cluster containing individual i at layer k, or -1 if uncovered.
    ClusterId membership(int k, int i) const {
        if (k < 1 || k > n_layers_ || i < 0 || i >= n_)
            throw std::out_of_range("HierarchyTree: bad membership query");
        return membership_[static_cast<std::size_t>(k - 1)][static_cast<std::size_t>(i)];
    }

private:
    int n_ = 0;
    int n_layers_ = 0;
    std::vector<Cluster> clusters_;
    std::vector<std::vector<ClusterId>> layer_index_;
    std::vector<std::vector<ClusterId>> membership_;
};

/// Structural check of the nested-partition invariants: every layer covers
/// all individuals exactly once and every cluster sits inside one parent.
/// Violations are returned as data, not thrown.
inline ValidationResult validate_tree(const HierarchyTree& tree) {
    ValidationResult result;
    const int n = tree.n_individuals();

    for (const auto& c : tree.clusters()) {
        if (c.members.empty()) {
            result.violations.push_back({Violation::Kind::bad_cluster, c.layer, {c.id},
                                         "cluster '" + c.name + "' has no members"});
            continue;
        }
        if (!std::is_sorted(c.members.begin(), c.members.end()) ||
            std::adjacent_find(c.members.begin(), c.members.end()) != c.members.end())
            result.violations.push_back({Violation::Kind::bad_cluster, c.layer, {c.id},
                                         "cluster '" + c.name + "' members not sorted/unique"});
        if (c.members.front() < 0 || c.members.back() >= n)
            result.violations.push_back({Violation::Kind::bad_cluster, c.layer, {c.id},
                                         "cluster '" + c.name + "' has out-of-range members"});
        if (!c.children.empty()) {
            std::vector<int> merged;
            for (ClusterId ch : c.children) {
                const auto& child = tree.cluster(ch);
                merged.insert(merged.end(), child.members.begin(), child.members.end());
            }
            std::sort(merged.begin(), merged.end());
            bool dup = std::adjacent_find(merged.begin(), merged.end()) != merged.end();
            if (dup || merged != c.members)
                result.violations.push_back({Violation::Kind::bad_cluster, c.layer, {c.id},
                                             "children of '" + c.name +
                                                 "' do not partition the cluster"});
        } else if (c.layer < tree.n_layers()) {
            // branches that end early must be padded down to the last layer
            result.violations.push_back({Violation::Kind::bad_cluster, c.layer, {c.id},
                                         "cluster '" + c.name + "' at layer " +
                                             std::to_string(c.layer) +
                                             " has no children (unpadded branch)"});
        }
        if (c.layer > 1) {
            if (!c.parent) {
                result.violations.push_back({Violation::Kind::broken_nesting, c.layer, {c.id},
                                             "cluster '" + c.name + "' has no parent link"});
            } else {
                const Cluster& p = tree.cluster(*c.parent);
                const bool linked =
                    std::find(p.children.begin(), p.children.end(), c.id) != p.children.end();
                if (p.layer != c.layer - 1 || !linked)
                    result.violations.push_back({Violation::Kind::broken_nesting, c.layer,
                                                 {c.id, p.id},
                                                 "parent link of '" + c.name +
                                                     "' is inconsistent"});
            }
        }
    }

    for (int k = 1; k <= tree.n_layers(); ++k) {
        std::vector<ClusterId> owner(static_cast<std::size_t>(n), -1);
        for (ClusterId id : tree.layer(k)) {
            for (int i : tree.cluster(id).members) {
                if (i < 0 || i >= n) continue;
                ClusterId& slot = owner[static_cast<std::size_t>(i)];
                if (slot >= 0) {
                    result.violations.push_back(
                        {Violation::Kind::overlap, k, {slot, id},
                         "overlap at layer " + std::to_string(k) + ": clusters '" +
                             tree.cluster(slot).name + "' and '" + tree.cluster(id).name +
                             "' share individual " + std::to_string(i)});
                } else {
                    slot = id;
                }
            }
        }
        for (int i = 0; i < n; ++i) {
            if (owner[static_cast<std::size_t>(i)] < 0) {
                result.violations.push_back({Violation::Kind::coverage_gap, k, {},
                                             "layer " + std::to_string(k) +
                                                 " does not cover individual " +
                                                 std::to_string(i)});
                break;  // one gap report per layer is enough
            }
        }
    }

    for (const auto& c : tree.clusters()) {
        if (c.layer == 1) continue;
        // find the layer-(k-1) cluster of the first member; all members must sit in it
        bool nested = false;
        std::vector<ClusterId> parents;
        for (ClusterId pid : tree.layer(c.layer - 1)) {
            const auto& p = tree.cluster(pid).members;
            if (std::includes(p.begin(), p.end(), c.members.begin(), c.members.end())) {
                nested = true;
                break;
            }
            bool intersects = false;
            for (int i : c.members)
                if (std::binary_search(p.begin(), p.end(), i)) { intersects = true; break; }
            if (intersects) parents.push_back(pid);
        }
        if (!nested) {
            std::vector<ClusterId> offenders = {c.id};
            offenders.insert(offenders.end(), parents.begin(), parents.end());
            result.violations.push_back({Violation::Kind::broken_nesting, c.layer, offenders,
                                         "broken nesting: cluster '" + c.name +
                                             "' is not contained in a single layer-" +
                                             std::to_string(c.layer - 1) + " cluster"});
        }
    }
    return result;
}

struct ClusterData {
    Eigen::MatrixXd features;
    Eigen::VectorXd target;
};

/// Rows of `dataset` for the cluster's members, in member order.
inline ClusterData restrict(const Dataset& dataset, const Cluster& cluster) {
    const int n = dataset.n();
    ClusterData out;
    out.features.resize(static_cast<Eigen::Index>(cluster.members.size()), dataset.d());
    out.target.resize(static_cast<Eigen::Index>(cluster.members.size()));
    Eigen::Index r = 0;
    for (int i : cluster.members) {
        if (i < 0 || i >= n)
            throw std::out_of_range("restrict: member index " + std::to_string(i) +
                                    " outside dataset");
        out.features.row(r) = dataset.features.row(i);
        out.target(r) = dataset.target(i);
        ++r;
    }
    return out;
}

/// An antichain of tree clusters covering every individual exactly once.
/// The constructor rejects anything else.
class Partition {
public:
    Partition(const HierarchyTree& tree, std::vector<ClusterId> ids) : ids_(std::move(ids)) {
        std::sort(ids_.begin(), ids_.end());
        if (std::adjacent_find(ids_.begin(), ids_.end()) != ids_.end())
            throw std::invalid_argument("Partition: duplicate cluster id");
        const int n = tree.n_individuals();
        std::vector<char> covered(static_cast<std::size_t>(n), 0);
        long long total = 0;
        for (ClusterId id : ids_) {
            const Cluster& c = tree.cluster(id);
            for (int i : c.members) {
                if (covered[static_cast<std::size_t>(i)])
                    throw std::invalid_argument("Partition: clusters overlap at individual " +
                                                std::to_string(i));
                covered[static_cast<std::size_t>(i)] = 1;
            }
            total += static_cast<long long>(c.members.size());
        }
        if (total != n)
            throw std::invalid_argument("Partition: clusters do not cover all individuals");
    }

    const std::vector<ClusterId>& cluster_ids() const { return ids_; }
    std::size_t size() const { return ids_.size(); }
    bool contains(ClusterId id) const {
        return std::binary_search(ids_.begin(), ids_.end(), id);
    }

private:
    std::vector<ClusterId> ids_;
};

/// Full output of a partition search: the selected partition, every fitted
/// cluster model, the per-cluster scores that drove the selection, and the
/// post-hoc homogeneity floor gamma_prime = min eta over selected clusters.
struct InferenceReport {
    Partition partition;
    std::map<ClusterId, RegressionModel> models;          // one per tree cluster
    std::map<ClusterId, RegressionModel> optimal_models;  // keys == partition ids
    std::map<ClusterId, double> eta;
    std::map<ClusterId, double> model_irr;    // null vs linear-class, per cluster
    std::map<ClusterId, double> cluster_irr;  // children vs parent, where evaluated
    double gamma_used = 0.0;
    double gamma_prime = 0.0;
};

}  // namespace mdlpart
