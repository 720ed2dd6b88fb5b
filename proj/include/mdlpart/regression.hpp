#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>

#include "mdlpart/code_length.hpp"
#include "mdlpart/types.hpp"

namespace mdlpart {

struct FitOptions {
    ModelKind kind = ModelKind::linear;
    std::optional<int> min_rows;  // default d + 2
    double rank_tolerance = 1e-10;

    int effective_min_rows(int d) const { return min_rows.value_or(d + 2); }
};

/// Elementwise e^x. Entries with |x| > 700 would overflow a double and are
/// rejected with the offending cell.
inline Eigen::MatrixXd transform_exponential(const Eigen::MatrixXd& features) {
    for (Eigen::Index i = 0; i < features.rows(); ++i)
        for (Eigen::Index j = 0; j < features.cols(); ++j)
            if (std::fabs(features(i, j)) > 700.0)
                throw std::domain_error("transform_exponential: |x| > 700 at row " +
                                        std::to_string(i) + ", column " + std::to_string(j));
    return features.array().exp();
}

namespace detail {

inline Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& x) {
    Eigen::MatrixXd x1(x.rows(), x.cols() + 1);
    x1.col(0).setOnes();
    x1.rightCols(x.cols()) = x;
    return x1;
}

}  // namespace detail

/// Ordinary least squares with an intercept column prepended. Uses a
/// rank-revealing orthogonal decomposition, so collinear feature sets get
/// the minimum-norm solution instead of blowing up. Returns nullopt when
/// there are fewer rows than options.min_rows.
inline std::optional<RegressionModel> fit_ols(const Eigen::MatrixXd& features,
                                              const Eigen::VectorXd& target,
                                              const FitOptions& options = {}) {
    const int n = static_cast<int>(features.rows());
    const int d = static_cast<int>(features.cols());
    if (target.size() != n) throw std::invalid_argument("fit_ols: row count mismatch");
    if (n < 1) throw std::invalid_argument("fit_ols: empty input");
    if (n < options.effective_min_rows(d)) return std::nullopt;

    const Eigen::MatrixXd x1 =
        detail::with_intercept(options.kind == ModelKind::exponential_linear
                                   ? transform_exponential(features)
                                   : features);
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(x1.rows(), x1.cols());
    cod.setThreshold(options.rank_tolerance);
    cod.compute(x1);

    RegressionModel model;
    model.kind = options.kind == ModelKind::exponential_linear ? ModelKind::exponential_linear
                                                               : ModelKind::linear;
    model.coefficients = cod.solve(target);
    model.param_bits = model_bits(model).bits;
    return model;
}

/// The null model: predict every target by the cluster mean.
inline RegressionModel fit_null(const Eigen::VectorXd& target) {
    if (target.size() < 1) throw std::invalid_argument("fit_null: empty target");
    RegressionModel model;
    model.kind = ModelKind::null_mean;
    model.coefficients = Eigen::VectorXd::Constant(1, target.mean());
    model.param_bits = model_bits(model).bits;
    return model;
}

/// Fit with the configured kind, falling back to the null model when the
/// cluster is too small for OLS.
inline RegressionModel fit_model(const Eigen::MatrixXd& features, const Eigen::VectorXd& target,
                                 const FitOptions& options = {}) {
    if (options.kind == ModelKind::null_mean) return fit_null(target);
    if (auto fitted = fit_ols(features, target, options)) return *fitted;
    return fit_null(target);
}

inline Eigen::VectorXd predict(const RegressionModel& model, const Eigen::MatrixXd& features) {
    switch (model.kind) {
        case ModelKind::null_mean:
            return Eigen::VectorXd::Constant(features.rows(), model.mean());
        case ModelKind::linear:
        case ModelKind::exponential_linear: {
            if (features.cols() + 1 != model.coefficients.size())
                throw std::invalid_argument("predict: feature dimension mismatch");
            const Eigen::MatrixXd x1 =
                detail::with_intercept(model.kind == ModelKind::exponential_linear
                                           ? transform_exponential(features)
                                           : features);
            return x1 * model.coefficients;
        }
    }
    throw std::logic_error("predict: unknown model kind");
}

inline double rmse(const Eigen::VectorXd& target, const Eigen::VectorXd& estimates) {
    if (target.size() != estimates.size()) throw std::invalid_argument("rmse: length mismatch");
    if (target.size() < 1) throw std::invalid_argument("rmse: empty input");
    return std::sqrt((target - estimates).squaredNorm() / static_cast<double>(target.size()));
}

}  // namespace mdlpart
