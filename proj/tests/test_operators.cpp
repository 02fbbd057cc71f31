#include <doctest.h>

#include <cmath>

#include "vws/operators.hpp"

using namespace vws;

namespace {

Grad scalar_grad(double a, double b) {
  Grad g(2, 1);
  g << a, b;
  return g;
}

}  // namespace

TEST_CASE("p-Laplace clamps are exactly linear beyond the clamp radius") {
  for (auto [p, mu] : {std::pair{1.8, 0.5}, std::pair{2.5, 0.5}}) {
    const OperatorSpec s = make_operator("p_laplace_clamp", {{"p", p}, {"mu", mu}});
    const double radius = std::pow(mu, (p < 2.0 ? 1.0 : -1.0) / (p - 2.0));
    CHECK(s.kinks.front() == doctest::Approx(radius));
    const double slope = p < 2.0 ? mu : 1.0 / mu;
    for (double scale : {1.01, 2.0, 50.0}) {
      const Grad eta = scalar_grad(0.6, 0.8) * radius * scale;
      CHECK((s({0.3, 0.3}, eta) - slope * eta).norm() <= 1e-12 * eta.norm());
    }
  }
}

TEST_CASE("prototype with a = 1 is the identity") {
  const OperatorSpec s = make_prototype([](Point, double) { return 1.0; }, [](Point) { return 1.0; });
  const Grad eta = scalar_grad(-2.0, 5.0);
  CHECK((s({0.2, 0.7}, eta) - eta).norm() == 0.0);
}

TEST_CASE("value-mode threshold for (1 + e^{-|eta|}) eta lies within one ladder step of ln(1/eps)") {
  const OperatorSpec s = make_operator("prototype_exp");
  const double step = std::pow(10.0, 1.0 / SamplerConfig{}.magnitudes_per_decade);
  for (double eps : {0.1, 0.01}) {
    const auto cert = check_asymptotic(s, eps, AsymptoticCertificate::Mode::value);
    REQUIRE(cert.passed);
    CHECK(cert.k >= std::log(1.0 / eps) / step);
    CHECK(cert.k <= std::log(1.0 / eps) * step);
    CHECK(cert.worst_violation <= eps);
  }
}

TEST_CASE("linear specs certify with k = 0 and algebra C = 0") {
  const OperatorSpec s = make_operator("linear_diag", {{"d1", 1.0}, {"d2", 2.0}});
  CHECK(check_asymptotic(s, 1e-3, AsymptoticCertificate::Mode::value).k == 0.0);
  CHECK(check_algebra_bound(s, 0.1).C == 0.0);
}

TEST_CASE("algebra constant is nonincreasing in delta") {
  const OperatorSpec s = make_operator("prototype_exp");
  double last = std::numeric_limits<double>::infinity();
  for (double d : {0.05, 0.1, 0.2, 0.4}) {
    const double C = check_algebra_bound(s, d).C;
    CHECK(C <= last);
    last = C;
  }
}

TEST_CASE("structure checks") {
  const StructureReport id = check_monotonicity_coercivity(make_operator("linear_identity"));
  CHECK(id.passed());
  CHECK(id.strictly_monotone);
  CHECK(check_monotonicity_coercivity(make_operator("prototype_rational")).monotone);
  const StructureReport neg = check_monotonicity_coercivity(make_operator("negation"));
  CHECK_FALSE(neg.coercivity);
  CHECK_FALSE(neg.witness.empty());
}

TEST_CASE("registry rejects unknown ids and bad parameters") {
  CHECK_THROWS(make_operator("nope"));
  CHECK_THROWS(make_operator("p_laplace_clamp", {{"p", 1.8}, {"mu", -1.0}}));
  CHECK(operator_registered("prototype_smooth"));
}
