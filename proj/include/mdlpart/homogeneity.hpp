#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

#include "mdlpart/regression.hpp"
#include "mdlpart/types.hpp"

namespace mdlpart {

struct FoldPlan {
    enum class Source { subclusters, kfold };
    std::vector<std::vector<int>> folds;  // disjoint, nonempty, union = cluster members
    Source source = Source::kfold;
    unsigned long long seed = 0;
    bool degenerate = false;  // single fold; eta is defined as 0
};

/// Cross-validation folds for a cluster. A cluster with children uses the
/// children as folds (leave one subcluster out); a last-layer cluster is
/// split into k seeded near-equal folds. Folds that end up with fewer than
/// two members are merged into the smallest adjacent fold.
inline FoldPlan build_folds(const Cluster& cluster, const HierarchyTree& tree, int k = 10,
                            unsigned long long seed = 0) {
    FoldPlan plan;
    plan.seed = seed;
    if (!cluster.children.empty()) {
        plan.source = FoldPlan::Source::subclusters;
        for (ClusterId id : cluster.children) plan.folds.push_back(tree.cluster(id).members);
    } else {
        plan.source = FoldPlan::Source::kfold;
        if (k < 1) throw std::invalid_argument("build_folds: k must be positive");
        std::vector<int> shuffled = cluster.members;
        std::seed_seq seq{seed, static_cast<unsigned long long>(cluster.id)};
        std::mt19937_64 rng(seq);
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        const int n = static_cast<int>(shuffled.size());
        const int folds = std::min(k, n);
        const int base = n / folds;
        const int extra = n % folds;
        int offset = 0;
        for (int f = 0; f < folds; ++f) {
            const int size = base + (f < extra ? 1 : 0);
            plan.folds.emplace_back(shuffled.begin() + offset, shuffled.begin() + offset + size);
            offset += size;
        }
    }

    // merge undersized folds into the smallest neighbor
    bool merged = true;
    while (merged && plan.folds.size() > 1) {
        merged = false;
        for (std::size_t f = 0; f < plan.folds.size(); ++f) {
            if (plan.folds[f].size() >= 2) continue;
            std::size_t target;
            if (f == 0)
                target = 1;
            else if (f + 1 == plan.folds.size())
                target = f - 1;
            else
                target = plan.folds[f - 1].size() <= plan.folds[f + 1].size() ? f - 1 : f + 1;
            auto& dst = plan.folds[target];
            dst.insert(dst.end(), plan.folds[f].begin(), plan.folds[f].end());
            plan.folds.erase(plan.folds.begin() + static_cast<std::ptrdiff_t>(f));
            merged = true;
            break;
        }
    }
    for (auto& fold : plan.folds) std::sort(fold.begin(), fold.end());
    plan.degenerate = plan.folds.size() < 2;
    return plan;
}

/// Sample Pearson correlation, clamped to [-1, 1]. Zero variance on either
/// side counts as non-predictive and returns 0.
inline double pearson_corr(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (a.size() != b.size()) throw std::invalid_argument("pearson_corr: length mismatch");
    if (a.size() < 2) throw std::domain_error("pearson_corr: need at least two points");
    const Eigen::VectorXd da = a.array() - a.mean();
    const Eigen::VectorXd db = b.array() - b.mean();
    const double va = da.squaredNorm();
    const double vb = db.squaredNorm();
    if (va <= 0.0 || vb <= 0.0) return 0.0;
    return std::clamp(da.dot(db) / std::sqrt(va * vb), -1.0, 1.0);
}

struct EtaDetail {
    double eta = 0.0;
    std::vector<double> fold_corr;  // per-fold correlation, fold order
    bool degenerate = false;
};

namespace detail {

inline ClusterData rows_for(const Dataset& dataset, const std::vector<int>& indices) {
    ClusterData out;
    out.features.resize(static_cast<Eigen::Index>(indices.size()), dataset.d());
    out.target.resize(static_cast<Eigen::Index>(indices.size()));
    Eigen::Index r = 0;
    for (int i : indices) {
        out.features.row(r) = dataset.features.row(i);
        out.target(r) = dataset.target(i);
        ++r;
    }
    return out;
}

}  // namespace detail

/// Homogeneity score: mean over folds C' of corr(y_C', h_{C-C'}(x_C'))^2,
/// where h_{C-C'} is fitted on the complement rows with the same function
/// class as the main search. Folds whose complement is too small to fit
/// contribute 0. Always in [0, 1].
inline EtaDetail eta_detail(const Cluster& cluster, const Dataset& dataset,
                            const HierarchyTree& tree, const FitOptions& fit_options = {},
                            unsigned long long seed = 0, int k = 10) {
    const FoldPlan plan = build_folds(cluster, tree, k, seed);
    EtaDetail detail_out;
    if (plan.degenerate) {
        detail_out.degenerate = true;
        return detail_out;
    }
    std::vector<double> squared;
    squared.reserve(plan.folds.size());
    for (std::size_t f = 0; f < plan.folds.size(); ++f) {
        std::vector<int> complement;
        for (std::size_t g = 0; g < plan.folds.size(); ++g)
            if (g != f)
                complement.insert(complement.end(), plan.folds[g].begin(), plan.folds[g].end());
        std::sort(complement.begin(), complement.end());

        const ClusterData train = detail::rows_for(dataset, complement);
        const ClusterData test = detail::rows_for(dataset, plan.folds[f]);
        double corr = 0.0;
        if (auto model = fit_ols(train.features, train.target, fit_options))
            corr = pearson_corr(test.target, predict(*model, test.features));
        detail_out.fold_corr.push_back(corr);
        squared.push_back(corr * corr);
    }
    // canonical summation order: invariant to fold ordering
    std::sort(squared.begin(), squared.end());
    detail_out.eta = std::accumulate(squared.begin(), squared.end(), 0.0) /
                     static_cast<double>(squared.size());
    return detail_out;
}

inline double eta(const Cluster& cluster, const Dataset& dataset, const HierarchyTree& tree,
                  const FitOptions& fit_options = {}, unsigned long long seed = 0, int k = 10) {
    return eta_detail(cluster, dataset, tree, fit_options, seed, k).eta;
}

}  // namespace mdlpart
