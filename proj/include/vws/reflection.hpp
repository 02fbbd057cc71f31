#pragma once

#include "vws/field.hpp"
#include "vws/linalg.hpp"

namespace vws {

/// Jacobian of T(x1, x2) = (x1, 2 a(x1) - x2) at x.
Eigen::Matrix2d reflection_jacobian(const BoundaryGraph& graph, Point x);
/// T applied to x; T is an involution.
Point reflect(const BoundaryGraph& graph, Point x);

struct ExtendedFields {
  MeshPtr mesh;          ///< reflected_band mesh of B+ u B-
  PiecewiseField u;      ///< vertex, odd extension -u o T^{-1}
  PiecewiseField f;      ///< triangle_vector, -J f o T^{-1}
  PiecewiseField A;      ///< triangle_tensor, J A J^T o T^{-1}
  PiecewiseField w;      ///< triangle_scalar, w o T^{-1}
  double max_det_deviation = 0.0;  ///< max | |det J| - 1 | over sampled points
};

/// Extends fields given on a graph-domain band across the graph. Throws
/// std::invalid_argument if u does not vanish on the graph (relative
/// tolerance `trace_tol`) or a Jacobian is degenerate.
ExtendedFields reflect_extend(const PiecewiseField& u, const PiecewiseField& f, const PiecewiseField& A,
                              const PiecewiseField& w, double trace_tol = 1e-12);

}  // namespace vws
