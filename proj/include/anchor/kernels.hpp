#pragma once

// Covariance kernels of infinitely wide single-hidden-layer networks with
// output-weight variance 1/H. Inputs are implicitly bias-augmented: with
// s(x, x') = bias_var + weight_var * <x, x'>, the pre-activations at two
// inputs are jointly Gaussian with covariance s, and the kernel is the
// expectation of the activation product.

#include <cmath>

#include "anchor/linalg.hpp"

namespace anchor {

enum class KernelFamily { Relu, Erf };

struct KernelSpec {
  KernelFamily family = KernelFamily::Relu;
  double bias_var = 1.0;    // first-layer bias variance
  double weight_var = 1.0;  // first-layer weight variance
};

namespace detail {

inline double clamp_unit(double v) { return std::min(1.0, std::max(-1.0, v)); }

}  // namespace detail

inline double kernel_eval(const KernelSpec& spec, const Vector& x,
                          const Vector& x2) {
  if (x.size() != x2.size())
    throw ShapeMismatch("kernel_eval: input dimension mismatch");
  const double sxx = spec.bias_var + spec.weight_var * x.squaredNorm();
  const double syy = spec.bias_var + spec.weight_var * x2.squaredNorm();
  const double sxy = spec.bias_var + spec.weight_var * x.dot(x2);

  switch (spec.family) {
    case KernelFamily::Relu: {
      if (sxx <= 0.0 || syy <= 0.0) return 0.0;
      const double norm = std::sqrt(sxx * syy);
      const double theta = std::acos(detail::clamp_unit(sxy / norm));
      return norm / (2.0 * M_PI) *
             (std::sin(theta) + (M_PI - theta) * std::cos(theta));
    }
    case KernelFamily::Erf: {
      const double denom = std::sqrt((1.0 + 2.0 * sxx) * (1.0 + 2.0 * syy));
      return 2.0 / M_PI * std::asin(detail::clamp_unit(2.0 * sxy / denom));
    }
  }
  return 0.0;
}

inline Matrix gram_matrix(const KernelSpec& spec, const Matrix& x) {
  const auto n = x.rows();
  Matrix k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      double v = kernel_eval(spec, x.row(i).transpose(), x.row(j).transpose());
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return k;
}

// Cross-kernel matrix, rows indexed by a, columns by b.
inline Matrix cross_gram(const KernelSpec& spec, const Matrix& a,
                         const Matrix& b) {
  Matrix k(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.rows(); ++j)
      k(i, j) = kernel_eval(spec, a.row(i).transpose(), b.row(j).transpose());
  return k;
}

}  // namespace anchor
