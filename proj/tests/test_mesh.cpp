#include <doctest.h>

#include <cmath>
#include <sstream>

#include "vws/field.hpp"
#include "vws/mesh.hpp"
#include "vws/reflection.hpp"

using namespace vws;

namespace {

BoundaryGraph bump_graph() {
  BoundaryGraph g;
  g.a = [](double x) { return 0.1 * std::sin(3.0 * x); };
  g.da = [](double x) { return 0.3 * std::cos(3.0 * x); };
  return g;
}

}  // namespace

TEST_CASE("unit square mesh counts, areas and boundary") {
  for (int M : {2, 4, 7}) {
    const MeshPtr m = build_unit_square_mesh(M);
    CHECK(m->num_vertices() == static_cast<std::size_t>((M + 1) * (M + 1)));
    CHECK(m->num_triangles() == static_cast<std::size_t>(2 * M * M));
    CHECK(m->total_area() == doctest::Approx(1.0).epsilon(1e-14));
    std::size_t nb = 0;
    for (bool b : m->boundary_flags()) nb += b;
    CHECK(nb == static_cast<std::size_t>(4 * M));
    for (std::size_t t = 0; t < m->num_triangles(); ++t) CHECK(m->area(static_cast<int>(t)) > 0.0);
  }
}

TEST_CASE("geometric factor is sqrt 2 on structured squares") {
  CHECK(build_unit_square_mesh(8)->lipschitz_geometric_factor() == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("basis gradients sum to zero and reproduce affine functions") {
  const MeshPtr m = build_unit_square_mesh(5);
  for (std::size_t t = 0; t < m->num_triangles(); ++t) {
    const auto& g = m->basis_gradients(static_cast<int>(t));
    CHECK(std::abs(g[0].x + g[1].x + g[2].x) < 1e-12);
    CHECK(std::abs(g[0].y + g[1].y + g[2].y) < 1e-12);
  }
}

TEST_CASE("locate and barycentric") {
  const MeshPtr m = build_unit_square_mesh(6);
  const Point p{0.31, 0.77};
  const int t = m->locate(p);
  REQUIRE(t >= 0);
  const auto b = m->barycentric(t, p);
  CHECK(b[0] + b[1] + b[2] == doctest::Approx(1.0));
  Point back{0, 0};
  for (int k = 0; k < 3; ++k) back = back + b[static_cast<std::size_t>(k)] * m->vertices()[static_cast<std::size_t>(m->triangles()[static_cast<std::size_t>(t)][static_cast<std::size_t>(k)])];
  CHECK(back.x == doctest::Approx(p.x));
  CHECK(back.y == doctest::Approx(p.y));
  CHECK(m->locate({1.5, 0.5}) == -1);
}

TEST_CASE("mesh dump is deterministic") {
  std::ostringstream a, b;
  build_unit_square_mesh(3)->dump(a);
  build_unit_square_mesh(3)->dump(b);
  CHECK(a.str() == b.str());
}

TEST_CASE("graph domain rejects non-finite charts") {
  BoundaryGraph g = bump_graph();
  g.a = [](double x) { return x > 0.2 ? std::nan("") : 0.0; };
  CHECK_THROWS_AS(build_graph_domain_mesh(g, 8), std::invalid_argument);
}

TEST_CASE("reflection is an involution with unit Jacobian determinant") {
  const BoundaryGraph g = bump_graph();
  for (Point x : {Point{0.1, -0.05}, Point{-0.3, 0.02}, Point{0.45, -0.2}}) {
    const Point y = reflect(g, reflect(g, x));
    CHECK(y.x == doctest::Approx(x.x));
    CHECK(y.y == doctest::Approx(x.y));
    CHECK(std::abs(reflection_jacobian(g, x).determinant()) == doctest::Approx(1.0));
  }
}

TEST_CASE("reflected extension mirrors vertices and gives odd extensions") {
  const BoundaryGraph gr = bump_graph();
  const MeshPtr m = build_graph_domain_mesh(gr, 8);
  PiecewiseField u = interpolate(m, [&](Point p) { return (gr.a(p.x) - p.y) * std::cos(p.x); });
  const PiecewiseField f = sample_vector(m, 1, [](Point p, std::span<double> out) {
    out[0] = p.x;
    out[1] = 1.0;
  });
  PiecewiseField A(m, Layout::triangle_tensor, 1);
  for (std::size_t t = 0; t < A.entities(); ++t) {
    auto a = A.at(t);
    a[0] = 1.0, a[3] = 2.0;
  }
  const PiecewiseField w = constant_scalar(m, 1.0);
  const ExtendedFields ext = reflect_extend(u, f, A, w);
  const TriMesh& band = *m;
  for (std::size_t v = 0; v < band.num_vertices(); ++v) {
    const int mv = band.mirror_vertex(static_cast<int>(v));
    CHECK(ext.u[static_cast<std::size_t>(mv)] == doctest::Approx(-u[v]).epsilon(1e-12).scale(1.0));
    const Point y = reflect(gr, band.vertices()[v]);
    CHECK(ext.mesh->vertices()[static_cast<std::size_t>(mv)].y == doctest::Approx(y.y));
  }
  CHECK(ext.max_det_deviation < 1e-12);
}

TEST_CASE("reflection rejects fields that do not vanish on the graph") {
  const BoundaryGraph gr = bump_graph();
  const MeshPtr m = build_graph_domain_mesh(gr, 8);
  const PiecewiseField u = interpolate(m, [](Point) { return 1.0; });
  PiecewiseField A(m, Layout::triangle_tensor, 1);
  CHECK_THROWS_AS(reflect_extend(u, PiecewiseField(m, Layout::triangle_vector, 1), A, constant_scalar(m, 1.0)),
                  std::invalid_argument);
}
