#pragma once

#include <Eigen/Dense>

namespace lambada {

/// Numerically stable softmax of a score vector.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> softmax(const Eigen::MatrixBase<Derived>& scores) {
  using Scalar = typename Derived::Scalar;
  const Scalar shift = scores.maxCoeff();
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> p = (scores.array() - shift).exp().matrix();
  return p / p.sum();
}

/// Index of the largest entry; ties resolve to the lowest index.
template <typename Derived>
Eigen::Index argmax_first(const Eigen::MatrixBase<Derived>& v) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i)
    if (v(i) > v(best)) best = i;
  return best;
}

}  // namespace lambada
