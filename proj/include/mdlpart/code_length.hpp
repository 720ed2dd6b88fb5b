#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "mdlpart/types.hpp"

namespace mdlpart {

/// A count of encoding bits. 64-bit so that sums over ~10^6 rows at up to
/// ~64 bits per residual stay exact.
struct CodeLength {
    std::int64_t bits = 0;

    CodeLength() = default;
    explicit CodeLength(std::int64_t b) : bits(b) {
        if (b < 0) throw std::invalid_argument("CodeLength: negative bit count");
    }
    CodeLength& operator+=(CodeLength other) {
        bits += other.bits;
        return *this;
    }
    friend CodeLength operator+(CodeLength a, CodeLength b) { return CodeLength(a.bits + b.bits); }
    friend bool operator==(CodeLength a, CodeLength b) { return a.bits == b.bits; }
    friend bool operator<(CodeLength a, CodeLength b) { return a.bits < b.bits; }
    friend bool operator<=(CodeLength a, CodeLength b) { return a.bits <= b.bits; }
};

/// Bits to encode one real value: ceil(log2 |y|) + 1 for |y| >= 1, else 1.
/// The ceiling is computed from the binary exponent so exact powers of two
/// never round wrong (bits_real(8) == 4).
inline CodeLength bits_real(double y) {
    if (!std::isfinite(y)) throw std::domain_error("bits_real: non-finite value");
    const double a = std::fabs(y);
    if (a < 1.0) return CodeLength(1);
    int exp = 0;
    const double mant = std::frexp(a, &exp);  // a == mant * 2^exp, mant in [0.5, 1)
    const std::int64_t ceil_log2 = (mant == 0.5) ? exp - 1 : exp;
    return CodeLength(ceil_log2 + 1);
}

/// Bits for a vector or matrix: the sum over entries.
template <typename Derived>
CodeLength bits_vector(const Eigen::DenseBase<Derived>& v) {
    CodeLength total;
    for (Eigen::Index j = 0; j < v.cols(); ++j)
        for (Eigen::Index i = 0; i < v.rows(); ++i) total += bits_real(v.derived()(i, j));
    return total;
}

/// Bits to encode the model parameters: all stored coefficients for linear
/// kinds, the single mean for the null model.
inline CodeLength model_bits(const RegressionModel& model) {
    return bits_vector(model.coefficients);
}

}  // namespace mdlpart
