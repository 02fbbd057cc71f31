#include <doctest.h>

#include <cmath>

#include "vws/lab.hpp"
#include "vws/solvers.hpp"

using namespace vws;

namespace {

double rate(double e_coarse, double e_fine) { return std::log2(e_coarse / e_fine); }

}  // namespace

TEST_CASE("constant flux data gives the zero solution") {
  const MeshPtr m = build_unit_square_mesh(8);
  const PiecewiseField f = sample_vector(m, 1, [](Point, std::span<double> v) {
    v[0] = 1.5;
    v[1] = -0.25;
  });
  SolveReport rep;
  const PiecewiseField u = solve_linear(sample_target(make_operator("linear_smooth"), m), Rhs::field(f), rep);
  double mx = 0.0;
  for (double x : u.values()) mx = std::max(mx, std::abs(x));
  CHECK(mx < 1e-10);
}

TEST_CASE("zero data returns zero and linear solves reach the requested residual") {
  const MeshPtr m = build_unit_square_mesh(8);
  const PiecewiseField A = sample_target(make_operator("linear_identity"), m);
  SolveReport rep;
  const PiecewiseField u0 = solve_linear(A, Rhs::field(PiecewiseField(m, Layout::triangle_vector, 1)), rep);
  for (double x : u0.values()) CHECK(x == 0.0);
  const PiecewiseField f = make_rhs("rough_random", {{"seed", 5}}, m);
  const PiecewiseField u = solve_linear(A, Rhs::field(f), rep, LinearOptions{1e-11, 20000});
  const LinearSystem sys(A);
  const Eigen::VectorXd b = sys.load(Rhs::field(f));
  CHECK((sys.stiffness() * sys.restrict(u) - b).norm() <= 1e-11 * b.norm() * 1.0001);
}

TEST_CASE("manufactured solutions converge at first order in H1") {
  for (const char* id : {"linear_identity", "linear_smooth"}) {
    const OperatorSpec spec = make_operator(id);
    const Manufactured sol = sine_solution();
    std::vector<double> errs;
    for (int M : {8, 16, 32}) {
      const MeshPtr m = build_unit_square_mesh(M);
      SolveReport rep;
      const PiecewiseField u = solve_linear(sample_target(spec, m), Rhs::field(manufactured_rhs(spec, m, sol)), rep);
      errs.push_back(h1_error(u, sol));
    }
    CHECK(rate(errs[0], errs[1]) > 0.9);
    CHECK(rate(errs[1], errs[2]) > 0.9);
  }
}

TEST_CASE("nonsymmetric targets use the stabilized solver") {
  const MeshPtr m = build_unit_square_mesh(8);
  SolveReport rep;
  (void)solve_linear(sample_target(make_operator("linear_nonsymmetric"), m), Rhs::field(make_rhs("grad_sin", {}, m)), rep);
  CHECK(rep.solver == "bicgstab");
  CHECK(rep.converged);
}

TEST_CASE("non-elliptic targets are rejected") {
  const MeshPtr m = build_unit_square_mesh(4);
  SolveReport rep;
  CHECK_THROWS_AS(solve_linear(sample_target(make_operator("negation"), m), Rhs::field(make_rhs("grad_sin", {}, m)), rep),
                  std::domain_error);
}

TEST_CASE("comparison iteration is exact in one step on linear specs") {
  const MeshPtr m = build_unit_square_mesh(16);
  const OperatorSpec spec = make_operator("linear_diag", {{"d1", 1.0}, {"d2", 2.0}});
  const PiecewiseField f = make_rhs("smooth", {}, m);
  SolveReport lin, non;
  NonlinearOptions opt;
  opt.linear_tol = 1e-10;
  const PiecewiseField a = solve_linear(sample_target(spec, m), Rhs::field(f), lin, LinearOptions{1e-10, 20000});
  const PiecewiseField b = solve_nonlinear(spec, Rhs::field(f), m, non, opt);
  CHECK(non.converged);
  CHECK(non.iterations == 1);
  CHECK(a.values() == b.values());
}

TEST_CASE("converged nonlinear solutions satisfy an independently assembled residual") {
  const MeshPtr m = build_unit_square_mesh(16);
  const OperatorSpec spec = make_operator("prototype_smooth");
  const PiecewiseField f = make_rhs("grad_sin", {{"amplitude", 5.0}}, m);
  SolveReport rep;
  NonlinearOptions opt;
  const PiecewiseField u = solve_nonlinear(spec, Rhs::field(f), m, rep, opt);
  REQUIRE(rep.converged);

  // Residual from the P1 basis directly, without the solver's assembly.
  const TriMesh& mesh = *m;
  std::vector<double> r(mesh.num_vertices(), 0.0), load(mesh.num_vertices(), 0.0);
  const PiecewiseField g = gradient(u);
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    Grad eta(2, 1);
    eta << g.at(t)[0], g.at(t)[1];
    const Grad flux = spec(mesh.centroid(static_cast<int>(t)), eta);
    for (int k = 0; k < 3; ++k) {
      const Point gb = mesh.basis_gradients(static_cast<int>(t))[static_cast<std::size_t>(k)];
      const auto v = static_cast<std::size_t>(mesh.triangles()[t][static_cast<std::size_t>(k)]);
      r[v] += (flux(0) * gb.x + flux(1) * gb.y - f.at(t)[0] * gb.x - f.at(t)[1] * gb.y) * mesh.area(static_cast<int>(t));
      load[v] += (f.at(t)[0] * gb.x + f.at(t)[1] * gb.y) * mesh.area(static_cast<int>(t));
    }
  }
  double rn = 0.0, ln = 0.0;
  for (std::size_t v = 0; v < r.size(); ++v)
    if (!mesh.is_boundary(static_cast<int>(v))) rn += r[v] * r[v], ln += load[v] * load[v];
  CHECK(std::sqrt(rn / ln) <= 2.0 * opt.tol);
}

TEST_CASE("dirac loads at a vertex and a centroid") {
  const MeshPtr m = build_unit_square_mesh(4);
  const auto at_vertex = dirac_load({0.5, 0.25}, *m);
  const int v = m->vertex_index(2, 1);
  for (std::size_t k = 0; k < at_vertex.size(); ++k) CHECK(at_vertex[k] == doctest::Approx(k == static_cast<std::size_t>(v) ? 1.0 : 0.0));
  const Point c = m->centroid(5);
  const auto at_centroid = dirac_load(c, *m);
  for (int k : m->triangles()[5]) CHECK(at_centroid[static_cast<std::size_t>(k)] == doctest::Approx(1.0 / 3.0));
  CHECK_THROWS(dirac_load({1.2, 0.5}, *m));
}

TEST_CASE("approximation routes: identical members past max|f| and zero distance after the spike") {
  const MeshPtr m = build_unit_square_mesh(16);
  const PiecewiseField f = make_rhs("spike", {{"height", 10.0}}, m);
  const OperatorSpec spec = make_operator("prototype_smooth");
  const RouteResult r = approximation_route(spec, f, {1.0, 4.0, 16.0, 64.0});
  REQUIRE(r.members.size() == 4);
  CHECK(r.members[2].distance == 0.0);
  CHECK(r.members[3].distance == 0.0);
  CHECK(r.members[2].u.values() == r.members[3].u.values());
}

TEST_CASE("truncate_rhs zeroes large values") {
  const MeshPtr m = build_unit_square_mesh(4);
  const PiecewiseField f = make_rhs("spike", {{"height", 10.0}}, m);
  const PiecewiseField t = truncate_rhs(f, 5.0);
  for (std::size_t e = 0; e < f.entities(); ++e) CHECK(t.norm_at(e) == (f.norm_at(e) < 5.0 ? f.norm_at(e) : 0.0));
}
