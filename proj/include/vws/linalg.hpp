#pragma once

#include <Eigen/Dense>
#include <span>

namespace vws {

/// A 2xN gradient-shaped matrix (N <= 2), stack allocated.
using Grad = Eigen::Matrix<double, 2, Eigen::Dynamic, Eigen::ColMajor, 2, 2>;
/// Linear map on column-major flattened 2xN matrices, (2N)x(2N).
using Tensor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, 4, 4>;
using FlatGrad = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, 4, 1>;

inline Grad to_grad(std::span<const double> block, int N) {
  Grad g(2, N);
  for (int k = 0; k < 2 * N; ++k) g.data()[k] = block[static_cast<std::size_t>(k)];
  return g;
}

inline void store(const Grad& g, std::span<double> block) {
  for (Eigen::Index k = 0; k < g.size(); ++k) block[static_cast<std::size_t>(k)] = g.data()[k];
}

inline Tensor to_tensor(std::span<const double> block, int N) {
  Tensor T(2 * N, 2 * N);
  for (int k = 0; k < 4 * N * N; ++k) T.data()[k] = block[static_cast<std::size_t>(k)];
  return T;
}

inline void store(const Tensor& T, std::span<double> block) {
  for (Eigen::Index k = 0; k < T.size(); ++k) block[static_cast<std::size_t>(k)] = T.data()[k];
}

/// Applies a (2N)x(2N) tensor to a 2xN matrix through the flattening.
inline Grad apply(const Tensor& T, const Grad& eta) {
  Grad out(2, eta.cols());
  Eigen::Map<const FlatGrad> in(eta.data(), eta.size());
  Eigen::Map<FlatGrad>(out.data(), out.size()) = T * in;
  return out;
}

inline Tensor identity_tensor(int N, double scale = 1.0) {
  return scale * Tensor::Identity(2 * N, 2 * N);
}

}  // namespace vws
