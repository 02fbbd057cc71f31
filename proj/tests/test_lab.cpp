#include <doctest.h>

#include <cmath>
#include <random>

#include "vws/lab.hpp"
#include "vws/weights.hpp"

using namespace vws;

TEST_CASE("estimate ratios and sentinels") {
  CHECK(make_estimate("keyest", 0.0, 0.0).sentinel());
  CHECK(std::isinf(make_estimate("keyest", 1.0, 0.0).ratio));
  CHECK(make_estimate("keyest", 1.0, 4.0).ratio == 0.25);
  nlohmann::json j = make_estimate("apriori", 0.0, 0.0);
  CHECK(j.at("ratio").is_null());
  CHECK(j.get<EstimateReport>().sentinel());
  nlohmann::json inf = make_estimate("apriori", 1.0, 0.0);
  CHECK(std::isinf(inf.get<EstimateReport>().ratio));
}

TEST_CASE("keyest: zero data is the sentinel and the energy identity bounds the ratio") {
  const auto reports = verify_linear_weighted(make_operator("linear_identity"), {{"zero", {}}, {"grad_sin", {}}},
                                              {{"one", {}}}, 2.0, {16});
  REQUIRE(reports.size() == 2);
  CHECK(reports[0].sentinel());
  CHECK(reports[1].ratio <= 1.0);
  CHECK(reports[1].ratio > 0.95);
}

TEST_CASE("apriori2 at q = 2 equals apriori bit-for-bit") {
  const MeshPtr m = build_unit_square_mesh(16);
  const PiecewiseField f = make_rhs("spike", {{"height", 10.0}}, m);
  SolveReport rep;
  const PiecewiseField u = solve_nonlinear(make_operator("prototype_smooth"), Rhs::field(f), m, rep);
  const EstimateReport a = apriori_report(u, f, 2.0), b = apriori2_report(u, f, 2.0);
  CHECK(a.lhs == b.lhs);
  CHECK(a.rhs == b.rhs);
  CHECK(a.ratio == b.ratio);
}

TEST_CASE("biting sets meet their measure budgets exactly and are nested") {
  const MeshPtr m = build_unit_square_mesh(16);
  std::mt19937_64 rng(1);
  std::exponential_distribution<double> e(1.0);
  std::vector<PiecewiseField> seq;
  for (int n = 0; n < 4; ++n) {
    PiecewiseField v(m, Layout::triangle_scalar, 1);
    for (double& x : v.values()) x = e(rng) * (n + 1);
    seq.push_back(v);
  }
  const BitingDecomposition b = biting_sets(seq, 6);
  REQUIRE(b.sets.size() == 6);
  for (std::size_t j = 0; j < b.sets.size(); ++j) {
    double excluded = 0.0;
    for (std::size_t t = 0; t < b.sets[j].size(); ++t)
      if (!b.sets[j][t]) excluded += m->area(static_cast<int>(t));
    CHECK(excluded == doctest::Approx(b.excluded[j]));
    CHECK(b.excluded[j] <= b.budgets[j]);
    CHECK(b.budgets[j] == std::ldexp(1.0, -static_cast<int>(j + 1)) * b.total_measure);
    if (j > 0) {
      CHECK(b.thresholds[j] >= b.thresholds[j - 1]);
      for (std::size_t t = 0; t < b.sets[j].size(); ++t)
        if (b.sets[j - 1][t]) CHECK(b.sets[j][t]);
    }
  }
}

TEST_CASE("loglog slope recovers power laws") {
  CHECK(loglog_slope({1, 2, 4, 8}, {3, 0.75, 0.1875, 0.046875}) == doctest::Approx(-2.0));
}

TEST_CASE("div-curl recipes: exact zero errors and the negative-control offset") {
  const MeshPtr m = build_unit_square_mesh(32);
  const PiecewiseField w = constant_scalar(m, 1.0);
  for (const char* id : {"orthogonal", "constant"}) {
    const DivCurlTable t = divcurl_experiment(make_divcurl_recipe(id), w, default_basket(), {4, 8}, 3);
    for (double e : t.max_error) CHECK(e == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
  }
  const DivCurlTable neg = divcurl_experiment(make_divcurl_recipe("negative_control"), w, default_basket(), {8, 16}, 3);
  CHECK(neg.flagged_negative);
  CHECK(neg.max_error.back() == doctest::Approx(0.5).epsilon(0.02));
  CHECK_THROWS(make_divcurl_recipe("nope"));
}

TEST_CASE("recipe registries reject unknown ids and keys") {
  const MeshPtr m = build_unit_square_mesh(4);
  CHECK_THROWS(make_rhs("nope", {}, m));
  CHECK_THROWS(make_rhs("spike", {{"heigth", 3}}, m));
  CHECK_THROWS(make_weight("power", {{"alpha", 0.5}, {"beta", 1}}, m));
}

TEST_CASE("seeded random fields are reproducible and vanish on the boundary") {
  const MeshPtr m = build_unit_square_mesh(8);
  const PiecewiseField a = random_zero_boundary_field(m, 42), b = random_zero_boundary_field(m, 42);
  CHECK(a.values() == b.values());
  CHECK(a.values() != random_zero_boundary_field(m, 43).values());
  for (std::size_t v = 0; v < m->num_vertices(); ++v)
    if (m->is_boundary(static_cast<int>(v))) CHECK(a[v] == 0.0);
}
