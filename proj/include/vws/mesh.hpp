#pragma once

#include <array>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace vws {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

inline Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
inline Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
inline Point operator*(double s, Point a) { return {s * a.x, s * a.y}; }
double distance(Point a, Point b);

/// Local C^1 chart of a boundary piece: the domain is the band of height
/// `beta` below the graph x2 = a(x1), x1 in [-alpha, alpha].
struct BoundaryGraph {
  std::function<double(double)> a;
  std::function<double(double)> da;
  double alpha = 0.5;
  double beta = 0.25;
  double r0 = 0.25;

  /// Throws std::invalid_argument if a or a' is non-finite on `samples`
  /// equispaced points or the band parameters are not positive.
  void validate(int samples = 257) const;
};

enum class DomainKind { unit_square, graph_domain, reflected_band };

std::string to_string(DomainKind kind);

/// Cell rectangle [i0, i1) x [j0, j1) in structured index space.
struct CellRect {
  int i0 = 0, i1 = 0, j0 = 0, j1 = 0;
  bool empty() const { return i1 <= i0 || j1 <= j0; }
  std::string describe() const;
};

/// Structured triangulation: an nx-by-ny grid of quadrilateral cells mapped
/// into the plane, each cell split into two triangles along one diagonal.
/// Connectivity never changes under the mapping, so cell windows stay valid
/// on graph domains and on reflected bands.
class TriMesh {
 public:
  static TriMesh unit_square(int M);
  static TriMesh graph_domain(const BoundaryGraph& graph, int M);

  int resolution() const { return M_; }
  int cells_x() const { return nx_; }
  int cells_y() const { return ny_; }
  DomainKind kind() const { return kind_; }

  std::size_t num_vertices() const { return vertices_.size(); }
  std::size_t num_triangles() const { return triangles_.size(); }

  const std::vector<Point>& vertices() const { return vertices_; }
  const std::vector<std::array<int, 3>>& triangles() const { return triangles_; }
  const std::vector<bool>& boundary_flags() const { return boundary_; }
  bool is_boundary(int v) const { return boundary_[static_cast<std::size_t>(v)]; }

  int vertex_index(int i, int j) const { return j * (nx_ + 1) + i; }
  std::array<int, 2> vertex_ij(int v) const { return {v % (nx_ + 1), v / (nx_ + 1)}; }
  /// Triangles 2c and 2c+1 belong to cell c = j*nx + i.
  int cell_of(int t) const { return t / 2; }

  double area(int t) const { return area_[static_cast<std::size_t>(t)]; }
  const std::vector<double>& areas() const { return area_; }
  Point centroid(int t) const { return centroid_[static_cast<std::size_t>(t)]; }
  /// Gradients of the three P1 basis functions of triangle t.
  const std::array<Point, 3>& basis_gradients(int t) const {
    return grad_basis_[static_cast<std::size_t>(t)];
  }
  double total_area() const;
  double min_spacing() const;
  /// Largest side of the bounding box; used as the top of radius ladders.
  double extent() const;
  /// Largest |grad| of a P1 function whose vertex values are 1-Lipschitz
  /// (sqrt 2 on the structured square meshes).
  double lipschitz_geometric_factor() const;

  /// Triangle containing p (closed), or -1.
  int locate(Point p) const;
  /// Barycentric coordinates of p in triangle t.
  std::array<double, 3> barycentric(int t, Point p) const;

  bool has_graph() const { return static_cast<bool>(graph_); }
  const BoundaryGraph& graph() const;

  /// Mesh of B+ u B- obtained by mirroring a graph-domain mesh through the
  /// graph with T(x1, x2) = (x1, 2 a(x1) - x2). Vertex (i, j) of the band maps
  /// to vertex (i, 2M - j) of the extension. Band vertices and triangles keep
  /// their indices; see mirror_vertex / mirror_triangle for the images.
  TriMesh reflected_extension() const;
  int mirror_vertex(int v) const;
  int mirror_triangle(int t) const;

  void dump(std::ostream& os) const;

 private:
  TriMesh() = default;
  void finalize();

  int M_ = 0;
  int nx_ = 0;
  int ny_ = 0;
  DomainKind kind_ = DomainKind::unit_square;
  std::vector<Point> vertices_;
  std::vector<std::array<int, 3>> triangles_;
  std::vector<bool> boundary_;
  std::vector<double> area_;
  std::vector<Point> centroid_;
  std::vector<std::array<Point, 3>> grad_basis_;
  std::shared_ptr<const BoundaryGraph> graph_;
};

using MeshPtr = std::shared_ptr<const TriMesh>;

MeshPtr build_unit_square_mesh(int M);
MeshPtr build_graph_domain_mesh(const BoundaryGraph& graph, int M);

}  // namespace vws
