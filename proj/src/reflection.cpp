#include "vws/reflection.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace vws {

Eigen::Matrix2d reflection_jacobian(const BoundaryGraph& graph, Point x) {
  Eigen::Matrix2d J;
  J << 1.0, 0.0, 2.0 * graph.da(x.x), -1.0;
  return J;
}

Point reflect(const BoundaryGraph& graph, Point x) { return {x.x, 2.0 * graph.a(x.x) - x.y}; }

namespace {

Tensor block_jacobian(const Eigen::Matrix2d& J, int N) {
  Tensor B = Tensor::Zero(2 * N, 2 * N);
  for (int a = 0; a < N; ++a) B.block(2 * a, 2 * a, 2, 2) = J;
  return B;
}

}  // namespace

ExtendedFields reflect_extend(const PiecewiseField& u, const PiecewiseField& f, const PiecewiseField& A,
                              const PiecewiseField& w, double trace_tol) {
  u.require_layout(Layout::vertex, "reflect_extend u");
  f.require_layout(Layout::triangle_vector, "reflect_extend f");
  A.require_layout(Layout::triangle_tensor, "reflect_extend A");
  w.require_layout(Layout::triangle_scalar, "reflect_extend w");
  const TriMesh& band = u.mesh();
  if (band.kind() != DomainKind::graph_domain)
    throw std::invalid_argument("reflect_extend: fields must live on a graph-domain mesh");
  const int N = u.components();
  if (f.components() != N || A.components() != N)
    throw std::invalid_argument("reflect_extend: component counts differ");
  const BoundaryGraph& graph = band.graph();

  double scale = 0.0;
  for (double v : u.values()) scale = std::max(scale, std::abs(v));
  const int top = band.cells_y();
  for (int i = 0; i <= band.cells_x(); ++i) {
    const auto vals = u.at(static_cast<std::size_t>(band.vertex_index(i, top)));
    for (double v : vals) {
      if (std::abs(v) > trace_tol * std::max(1.0, scale)) {
        std::ostringstream msg;
        msg << "reflect_extend: u has nonzero trace " << v << " on the graph at column " << i;
        throw std::invalid_argument(msg.str());
      }
    }
  }

  auto ext_mesh = std::make_shared<const TriMesh>(band.reflected_extension());
  ExtendedFields out{ext_mesh,
                     PiecewiseField(ext_mesh, Layout::vertex, N),
                     PiecewiseField(ext_mesh, Layout::triangle_vector, N),
                     PiecewiseField(ext_mesh, Layout::triangle_tensor, N),
                     PiecewiseField(ext_mesh, Layout::triangle_scalar, 1)};

  for (int v = 0; v < static_cast<int>(band.num_vertices()); ++v) {
    const auto src = u.at(static_cast<std::size_t>(v));
    auto keep = out.u.at(static_cast<std::size_t>(v));
    auto image = out.u.at(static_cast<std::size_t>(band.mirror_vertex(v)));
    for (int a = 0; a < N; ++a) {
      keep[static_cast<std::size_t>(a)] = src[static_cast<std::size_t>(a)];
      // graph vertices are their own mirror; the trace there is zero
      if (band.mirror_vertex(v) != v) image[static_cast<std::size_t>(a)] = -src[static_cast<std::size_t>(a)];
    }
  }

  for (int t = 0; t < static_cast<int>(band.num_triangles()); ++t) {
    const auto ts = static_cast<std::size_t>(t);
    const auto ms = static_cast<std::size_t>(band.mirror_triangle(t));
    const Point x = band.centroid(t);
    const Eigen::Matrix2d J = reflection_jacobian(graph, x);
    const double det = J.determinant();
    if (!(std::abs(det) > 1e-12)) throw std::invalid_argument("reflect_extend: degenerate Jacobian");
    out.max_det_deviation = std::max(out.max_det_deviation, std::abs(std::abs(det) - 1.0));

    std::copy(f.at(ts).begin(), f.at(ts).end(), out.f.at(ts).begin());
    std::copy(A.at(ts).begin(), A.at(ts).end(), out.A.at(ts).begin());
    out.w[ts] = w[ts];

    const Grad fm = -(J * to_grad(f.at(ts), N));
    store(fm, out.f.at(ms));
    const Tensor B = block_jacobian(J, N);
    const Tensor Am = B * to_tensor(A.at(ts), N) * B.transpose();
    store(Am, out.A.at(ms));
    out.w[ms] = w[ts];
  }
  return out;
}

}  // namespace vws
