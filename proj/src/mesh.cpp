#include "vws/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace vws {

double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

void BoundaryGraph::validate(int samples) const {
  if (!a || !da) throw std::invalid_argument("boundary graph: a and a' must be set");
  if (!(alpha > 0.0) || !(beta > 0.0) || !(r0 > 0.0))
    throw std::invalid_argument("boundary graph: alpha, beta, r0 must be positive");
  for (int s = 0; s < samples; ++s) {
    const double x = -alpha + 2.0 * alpha * s / (samples - 1);
    if (!std::isfinite(a(x)) || !std::isfinite(da(x))) {
      std::ostringstream msg;
      msg << "boundary graph: non-finite a or a' at x1 = " << x;
      throw std::invalid_argument(msg.str());
    }
  }
}

std::string to_string(DomainKind kind) {
  switch (kind) {
    case DomainKind::unit_square: return "unit_square";
    case DomainKind::graph_domain: return "graph_domain";
    case DomainKind::reflected_band: return "reflected_band";
  }
  return "unknown";
}

std::string CellRect::describe() const {
  std::ostringstream os;
  os << "cells[" << i0 << "," << i1 << ")x[" << j0 << "," << j1 << ")";
  return os.str();
}

namespace {

double signed_area(Point a, Point b, Point c) {
  return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

}  // namespace

TriMesh TriMesh::unit_square(int M) {
  if (M < 2) throw std::invalid_argument("unit square mesh: M must be >= 2");
  TriMesh mesh;
  mesh.M_ = M;
  mesh.nx_ = M;
  mesh.ny_ = M;
  mesh.kind_ = DomainKind::unit_square;
  const double h = 1.0 / M;
  mesh.vertices_.reserve(static_cast<std::size_t>((M + 1) * (M + 1)));
  for (int j = 0; j <= M; ++j)
    for (int i = 0; i <= M; ++i) mesh.vertices_.push_back({i * h, j * h});
  mesh.finalize();
  return mesh;
}

TriMesh TriMesh::graph_domain(const BoundaryGraph& graph, int M) {
  if (M < 2) throw std::invalid_argument("graph domain mesh: M must be >= 2");
  graph.validate();
  TriMesh mesh;
  mesh.M_ = M;
  mesh.nx_ = M;
  mesh.ny_ = M;
  mesh.kind_ = DomainKind::graph_domain;
  mesh.graph_ = std::make_shared<BoundaryGraph>(graph);
  for (int j = 0; j <= M; ++j) {
    for (int i = 0; i <= M; ++i) {
      const double x1 = -graph.alpha + 2.0 * graph.alpha * i / M;
      const double s = static_cast<double>(j) / M;
      mesh.vertices_.push_back({x1, graph.a(x1) - graph.beta + s * graph.beta});
    }
  }
  mesh.finalize();
  return mesh;
}

void TriMesh::finalize() {
  if (triangles_.empty()) {
    triangles_.reserve(static_cast<std::size_t>(2 * nx_ * ny_));
    for (int j = 0; j < ny_; ++j) {
      for (int i = 0; i < nx_; ++i) {
        const int v00 = vertex_index(i, j), v10 = vertex_index(i + 1, j);
        const int v01 = vertex_index(i, j + 1), v11 = vertex_index(i + 1, j + 1);
        triangles_.push_back({v00, v10, v11});
        triangles_.push_back({v00, v11, v01});
      }
    }
  }
  boundary_.assign(vertices_.size(), false);
  for (int j = 0; j <= ny_; ++j)
    for (int i = 0; i <= nx_; ++i)
      if (i == 0 || j == 0 || i == nx_ || j == ny_) boundary_[vertex_index(i, j)] = true;

  const std::size_t nt = triangles_.size();
  area_.resize(nt);
  centroid_.resize(nt);
  grad_basis_.resize(nt);
  for (std::size_t t = 0; t < nt; ++t) {
    const auto& tri = triangles_[t];
    const Point a = vertices_[tri[0]], b = vertices_[tri[1]], c = vertices_[tri[2]];
    const double A = signed_area(a, b, c);
    if (!(A > 0.0)) throw std::logic_error("mesh: degenerate or inverted triangle");
    area_[t] = A;
    centroid_[t] = {(a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0};
    // grad phi_k = rot90(opposite edge) / (2A)
    const double inv = 1.0 / (2.0 * A);
    grad_basis_[t][0] = {(b.y - c.y) * inv, (c.x - b.x) * inv};
    grad_basis_[t][1] = {(c.y - a.y) * inv, (a.x - c.x) * inv};
    grad_basis_[t][2] = {(a.y - b.y) * inv, (b.x - a.x) * inv};
  }
}

double TriMesh::total_area() const {
  double s = 0.0;
  for (double a : area_) s += a;
  return s;
}

double TriMesh::min_spacing() const {
  double h = std::numeric_limits<double>::infinity();
  for (const auto& tri : triangles_)
    for (int k = 0; k < 3; ++k)
      h = std::min(h, distance(vertices_[tri[k]], vertices_[tri[(k + 1) % 3]]));
  return h;
}

double TriMesh::extent() const {
  double xmin = vertices_[0].x, xmax = xmin, ymin = vertices_[0].y, ymax = ymin;
  for (const auto& p : vertices_) {
    xmin = std::min(xmin, p.x);
    xmax = std::max(xmax, p.x);
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
  }
  return std::max(xmax - xmin, ymax - ymin);
}

double TriMesh::lipschitz_geometric_factor() const {
  // Vertex data with v0 = 0 and 1-Lipschitz differences form the polygon
  // |d1| <= l1, |d2| <= l2, |d2 - d1| <= l3; |grad| is convex in (d1, d2), so
  // its maximum sits at a polygon corner.
  double factor = 0.0;
  for (const auto& tri : triangles_) {
    const Point o = vertices_[tri[0]];
    const Point e1 = vertices_[tri[1]] - o, e2 = vertices_[tri[2]] - o;
    const double det = e1.x * e2.y - e2.x * e1.y;
    const double l1 = std::hypot(e1.x, e1.y), l2 = std::hypot(e2.x, e2.y), l3 = distance(vertices_[tri[1]], vertices_[tri[2]]);
    auto grad_norm = [&](double d1, double d2) {
      const double gx = (e2.y * d1 - e1.y * d2) / det, gy = (-e2.x * d1 + e1.x * d2) / det;
      return std::hypot(gx, gy);
    };
    for (double s1 : {-1.0, 1.0}) {
      for (double s2 : {-1.0, 1.0}) {
        const double candidates[3][2] = {{s1 * l1, s2 * l2}, {s1 * l1, s1 * l1 + s2 * l3}, {s2 * l2 - s1 * l3, s2 * l2}};
        for (const auto& c : candidates) {
          const double d1 = c[0], d2 = c[1];
          const double slack = 1e-12 * (l1 + l2 + l3);
          if (std::abs(d1) <= l1 + slack && std::abs(d2) <= l2 + slack && std::abs(d2 - d1) <= l3 + slack)
            factor = std::max(factor, grad_norm(d1, d2));
        }
      }
    }
  }
  return factor;
}

std::array<double, 3> TriMesh::barycentric(int t, Point p) const {
  const auto& tri = triangles_[static_cast<std::size_t>(t)];
  const Point a = vertices_[tri[0]], b = vertices_[tri[1]], c = vertices_[tri[2]];
  const double A = area_[static_cast<std::size_t>(t)];
  const double l0 = signed_area(p, b, c) / A;
  const double l1 = signed_area(a, p, c) / A;
  return {l0, l1, 1.0 - l0 - l1};
}

int TriMesh::locate(Point p) const {
  constexpr double tol = 1e-12;
  auto inside = [&](int t) {
    const auto l = barycentric(t, p);
    return l[0] >= -tol && l[1] >= -tol && l[2] >= -tol;
  };
  if (kind_ == DomainKind::unit_square) {
    const double h = 1.0 / M_;
    const int i = std::clamp(static_cast<int>(std::floor(p.x / h)), 0, nx_ - 1);
    const int j = std::clamp(static_cast<int>(std::floor(p.y / h)), 0, ny_ - 1);
    const int c = j * nx_ + i;
    for (int t : {2 * c, 2 * c + 1})
      if (inside(t)) return t;
    return -1;
  }
  for (int t = 0; t < static_cast<int>(triangles_.size()); ++t)
    if (inside(t)) return t;
  return -1;
}

const BoundaryGraph& TriMesh::graph() const {
  if (!graph_) throw std::logic_error("mesh has no boundary graph");
  return *graph_;
}

int TriMesh::mirror_vertex(int v) const {
  const auto [i, j] = vertex_ij(v);
  return (2 * ny_ - j) * (nx_ + 1) + i;
}

int TriMesh::mirror_triangle(int t) const {
  const int c = cell_of(t);
  const int i = c % nx_, j = c / nx_;
  return 2 * ((2 * ny_ - 1 - j) * nx_ + i) + t % 2;
}

TriMesh TriMesh::reflected_extension() const {
  if (kind_ != DomainKind::graph_domain || !graph_)
    throw std::logic_error("reflected_extension requires a graph-domain mesh");
  const BoundaryGraph& g = *graph_;
  TriMesh ext;
  ext.M_ = M_;
  ext.nx_ = nx_;
  ext.ny_ = 2 * ny_;
  ext.kind_ = DomainKind::reflected_band;
  ext.graph_ = graph_;
  ext.vertices_.resize(static_cast<std::size_t>((nx_ + 1) * (2 * ny_ + 1)));
  for (int v = 0; v < static_cast<int>(vertices_.size()); ++v) {
    const Point p = vertices_[static_cast<std::size_t>(v)];
    ext.vertices_[static_cast<std::size_t>(v)] = p;
    ext.vertices_[static_cast<std::size_t>(mirror_vertex(v))] = {p.x, 2.0 * g.a(p.x) - p.y};
  }
  ext.triangles_.resize(2 * triangles_.size());
  for (int t = 0; t < static_cast<int>(triangles_.size()); ++t) {
    const auto& tri = triangles_[static_cast<std::size_t>(t)];
    ext.triangles_[static_cast<std::size_t>(t)] = tri;
    // reflection reverses orientation
    ext.triangles_[static_cast<std::size_t>(mirror_triangle(t))] = {
        mirror_vertex(tri[0]), mirror_vertex(tri[2]), mirror_vertex(tri[1])};
  }
  ext.finalize();
  return ext;
}

void TriMesh::dump(std::ostream& os) const {
  os << "vws-mesh v1 " << to_string(kind_) << ' ' << M_ << ' ' << nx_ << ' ' << ny_ << '\n';
  os.precision(17);
  for (std::size_t v = 0; v < vertices_.size(); ++v)
    os << vertices_[v].x << ' ' << vertices_[v].y << ' ' << (boundary_[v] ? 1 : 0) << '\n';
  for (const auto& tri : triangles_) os << tri[0] << ' ' << tri[1] << ' ' << tri[2] << '\n';
}

MeshPtr build_unit_square_mesh(int M) { return std::make_shared<const TriMesh>(TriMesh::unit_square(M)); }

MeshPtr build_graph_domain_mesh(const BoundaryGraph& graph, int M) {
  return std::make_shared<const TriMesh>(TriMesh::graph_domain(graph, M));
}

}  // namespace vws
