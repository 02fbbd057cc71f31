#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "vws/mesh.hpp"

namespace vws {

/// Storage layout of a PiecewiseField.
///   vertex           N values per vertex (P1 nodal values)
///   triangle_scalar  1 value per triangle
///   triangle_vector  2*N values per triangle, a 2xN matrix stored column-major
///                    (entry (i, alpha) at i + 2*alpha)
///   triangle_tensor  (2N)^2 values per triangle, a matrix acting on the
///                    column-major flattening of 2xN matrices, stored column-major
enum class Layout { vertex, triangle_scalar, triangle_vector, triangle_tensor };

std::string to_string(Layout layout);
Layout layout_from_string(const std::string& name);

class PiecewiseField {
 public:
  PiecewiseField(MeshPtr mesh, Layout layout, int components = 1);
  PiecewiseField(MeshPtr mesh, Layout layout, int components, std::vector<double> values);

  const MeshPtr& mesh_ptr() const { return mesh_; }
  const TriMesh& mesh() const { return *mesh_; }
  Layout layout() const { return layout_; }
  int components() const { return N_; }
  /// Values per entity (vertex or triangle).
  int stride() const { return stride_; }
  std::size_t entities() const;

  std::span<double> at(std::size_t entity) {
    return {values_.data() + entity * static_cast<std::size_t>(stride_), static_cast<std::size_t>(stride_)};
  }
  std::span<const double> at(std::size_t entity) const {
    return {values_.data() + entity * static_cast<std::size_t>(stride_), static_cast<std::size_t>(stride_)};
  }
  double& operator[](std::size_t k) { return values_[k]; }
  double operator[](std::size_t k) const { return values_[k]; }
  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  /// Euclidean (Frobenius) norm of the value block of one entity.
  double norm_at(std::size_t entity) const;
  /// Throws std::domain_error if any entry is non-finite.
  void require_finite(const char* what) const;
  void require_layout(Layout expected, const char* what) const;

  void dump(std::ostream& os) const;
  /// Reads a field in the `vws-field v1` format onto `mesh`; throws on any
  /// mismatch between the header and the mesh.
  static PiecewiseField load(std::istream& is, MeshPtr mesh);

 private:
  MeshPtr mesh_;
  Layout layout_;
  int N_;
  int stride_;
  std::vector<double> values_;
};

/// Nodal interpolation of a scalar function.
PiecewiseField interpolate(const MeshPtr& mesh, const std::function<double(Point)>& fn);
/// Scalar triangle field sampled at centroids.
PiecewiseField sample_scalar(const MeshPtr& mesh, const std::function<double(Point)>& fn);
/// 2xN triangle field sampled at centroids; fn writes the 2N column-major entries.
PiecewiseField sample_vector(const MeshPtr& mesh, int N,
                             const std::function<void(Point, std::span<double>)>& fn);
PiecewiseField constant_scalar(const MeshPtr& mesh, double value);

/// Sets every boundary vertex value of a vertex field to exactly zero.
void zero_boundary(PiecewiseField& u);

/// Per-triangle gradient of the P1 interpolant (2xN per triangle).
PiecewiseField gradient(const PiecewiseField& u);

/// Per-triangle Euclidean norm of a vector/tensor field as a scalar field.
PiecewiseField pointwise_norm(const PiecewiseField& g);

/// sum_T |g_T|^p w_T |T| (midpoint quadrature of the integral of |g|^p w).
double weighted_power_integral(const PiecewiseField& g, const PiecewiseField& w, double p);
double power_integral(const PiecewiseField& g, double p);
/// (sum_T |g_T|^p w_T |T|)^{1/p}; w must be positive.
double weighted_lp_norm(const PiecewiseField& g, const PiecewiseField& w, double p);
double lp_norm(const PiecewiseField& g, double p);

}  // namespace vws
