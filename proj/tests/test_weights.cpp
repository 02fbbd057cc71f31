#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <random>

#include "vws/lab.hpp"
#include "vws/parallel.hpp"
#include "vws/weights.hpp"

using namespace vws;

namespace {

// Average of |g| over triangles whose centroid lies in the closed square of
// half-side r around p.
double brute_average(const PiecewiseField& g, Point p, double r) {
  const TriMesh& m = g.mesh();
  double num = 0.0, den = 0.0;
  for (std::size_t t = 0; t < m.num_triangles(); ++t) {
    const Point c = m.centroid(static_cast<int>(t));
    if (std::abs(c.x - p.x) <= r && std::abs(c.y - p.y) <= r) {
      num += std::abs(g[t]) * m.area(static_cast<int>(t));
      den += m.area(static_cast<int>(t));
    }
  }
  return num / den;
}

PiecewiseField random_scalar(const MeshPtr& m, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  PiecewiseField g(m, Layout::triangle_scalar, 1);
  for (double& v : g.values()) v = u(rng);
  return g;
}

}  // namespace

TEST_CASE("maximal function matches a brute-force window scan") {
  const int M = 8;
  const MeshPtr m = build_unit_square_mesh(M);
  const PiecewiseField g = random_scalar(m, 3);
  const PiecewiseField Mg = maximal_function(g);
  const double h = 1.0 / M;
  for (std::size_t v = 0; v < m->num_vertices(); ++v) {
    double best = 0.0;
    for (int k = 1; k <= M; k *= 2) best = std::max(best, brute_average(g, m->vertices()[v], k * h));
    CHECK(Mg[v] == doctest::Approx(best).epsilon(1e-12));
  }
}

TEST_CASE("maximal function dominates |g| averages and is exact on constants") {
  const MeshPtr m = build_unit_square_mesh(6);
  const PiecewiseField c = constant_scalar(m, -2.5);
  const PiecewiseField Mc = maximal_function(c);
  for (double v : Mc.values()) CHECK(v == doctest::Approx(2.5));
}

TEST_CASE("A_p of constants is 1 and of the step weight has a closed form") {
  const MeshPtr m = build_unit_square_mesh(16);
  CHECK(ap_constant(constant_scalar(m, 7.0), 2.0).ap_constant == doctest::Approx(1.0));
  CHECK(ap_constant(constant_scalar(m, 7.0), 1.0).ap_constant == doctest::Approx(1.0));
  // Balanced windows give (1 + 4)/2 * (1 + 1/4)/2.
  const PiecewiseField step = make_weight("step", {{"low", 1.0}, {"high", 4.0}}, m);
  CHECK(ap_constant(step, 2.0).ap_constant == doctest::Approx(1.5625));
}

TEST_CASE("A_p is invariant under scaling and at least 1") {
  const MeshPtr m = build_unit_square_mesh(16);
  const PiecewiseField w = make_weight("power", {{"alpha", 0.5}}, m);
  PiecewiseField w3(w);
  for (double& v : w3.values()) v *= 3.0;
  const double a = ap_constant(w, 2.0).ap_constant;
  CHECK(a >= 1.0);
  CHECK(ap_constant(w3, 2.0).ap_constant == doctest::Approx(a).epsilon(1e-12));
}

TEST_CASE("embedding exponent closed form") {
  CHECK(embedding_exponent(2.0, 2.0) == doctest::Approx(4.0 / 3.0));
  CHECK_THROWS(embedding_exponent(1.0, 3.0));
}

TEST_CASE("nonpositive weights are rejected") {
  const MeshPtr m = build_unit_square_mesh(4);
  CHECK_THROWS_AS(ap_constant(constant_scalar(m, 0.0), 2.0), std::invalid_argument);
}

TEST_CASE("results do not depend on the thread cap") {
  const MeshPtr m = build_unit_square_mesh(16);
  const PiecewiseField g = random_scalar(m, 11);
  ::setenv("VWS_THREADS", "1", 1);
  CHECK(worker_count() == 1u);
  const auto one = maximal_function(g).values();
  ::setenv("VWS_THREADS", "4", 1);
  const auto four = maximal_function(g).values();
  ::unsetenv("VWS_THREADS");
  CHECK(one == four);
}
