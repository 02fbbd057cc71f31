#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vws/linalg.hpp"
#include "vws/mesh.hpp"

namespace vws {

/// A nonlinear Caratheodory map A(x, eta) on 2xN matrices together with its
/// asymptotic linear target A~(x).
struct OperatorSpec {
  enum class Kind { linear, prototype, p_laplace_clamp, custom };

  Kind kind = Kind::custom;
  std::string id;           ///< registry id, e.g. "prototype_smooth"
  nlohmann::json params;    ///< registry parameters echoed into reports
  int N = 1;
  std::function<Grad(Point, const Grad&)> evaluate;
  std::function<Tensor(Point)> target;
  double c1 = 1.0;
  double c2 = 1.0;
  /// |eta| values where A(x, .) fails to be differentiable (clamp radii).
  std::vector<double> kinks;
  /// Registry knowledge used to pick uniqueness-probe candidates.
  bool strictly_monotone = false;
  bool target_symmetric = true;

  Grad operator()(Point x, const Grad& eta) const { return evaluate(x, eta); }
};

std::string to_string(OperatorSpec::Kind kind);

/// a(x, lambda) for the prototype A(x, eta) = a(x, |eta|) eta.
using Profile = std::function<double(Point, double)>;

struct SamplerConfig {
  int directions = 32;              ///< per matrix slot
  double magnitude_min = 1e-3;
  double magnitude_max = 1e6;
  int magnitudes_per_decade = 8;
  std::vector<Point> points{{0.5, 0.5}, {0.25, 0.75}, {0.8, 0.1}};
  int pairs = 20000;                ///< random pairs for pair checks
  std::uint64_t seed = 20240501;

  std::vector<double> magnitude_ladder() const;
  /// Unit directions in R^{2N}: evenly spread angles in each coordinate plane
  /// plus seeded random directions, `directions` per slot.
  std::vector<Grad> direction_set(int N) const;
};

/// Builds the prototype operator; samples a(x, lambda) lambda for
/// monotonicity and positivity. c1 and c2 are derived from the samples so
/// that coercivity and growth hold on them. Throws std::invalid_argument on a
/// sampled violation.
OperatorSpec make_prototype(Profile a, std::function<double(Point)> a_tilde, int N = 1,
                            const SamplerConfig& sampler = {});

OperatorSpec make_linear(std::function<Tensor(Point)> target, int N = 1, bool symmetric = true);

/// a(lambda) = max{mu, lambda^{p-2}} for p < 2, min{1/mu, lambda^{p-2}} for p > 2.
/// The clamp radius is mu^{1/(p-2)} for p < 2 and mu^{-1/(p-2)} for p > 2.
OperatorSpec make_p_laplace_clamp(double p, double mu, int N = 1);

/// Registry lookup by id with JSON parameters. Known ids:
///   linear_identity, linear_diag {d1, d2}, linear_smooth, linear_nonsymmetric,
///   prototype_rational (a = 1 + 1/(1+l)), prototype_smooth (a = 2 - 1/(1+l)),
///   prototype_exp (a = 1 + e^{-l}), p_laplace_clamp {p, mu}, negation.
OperatorSpec make_operator(const std::string& id, const nlohmann::json& params = nlohmann::json::object(),
                           int N = 1);
std::vector<std::string> operator_registry_ids();
bool operator_registered(const std::string& id);

struct AsymptoticCertificate {
  enum class Mode { value, derivative };
  double epsilon = 0.0;
  double k = 0.0;                 ///< smallest ladder threshold; 0 if every sample passes
  Mode mode = Mode::value;
  std::size_t samples_checked = 0;
  std::size_t samples_excluded = 0;  ///< derivative stencils straddling a kink
  double worst_violation = 0.0;      ///< over samples with |eta| >= k
  bool passed = false;
  std::uint64_t seed = 0;
  std::vector<double> magnitudes;    ///< ladder
  std::vector<double> profile;       ///< worst violation per ladder magnitude
};

void to_json(nlohmann::json& j, const AsymptoticCertificate& c);

/// value mode:      |A(x, eta) - A~(x) eta| / |eta| <= eps
/// derivative mode: |D_eta A(x, eta) - A~(x)|_F <= eps, central differences
///                  with step 1e-4 |eta| + 1e-8
AsymptoticCertificate check_asymptotic(const OperatorSpec& spec, double epsilon, AsymptoticCertificate::Mode mode,
                                       const SamplerConfig& sampler = {});

struct AlgebraCertificate {
  double delta = 0.0;
  double C = 0.0;
  Grad worst_eta1, worst_eta2;
  std::size_t pairs = 0;
  std::uint64_t seed = 0;
  double cap = 0.0;
  std::vector<double> C_by_cap;  ///< C measured with caps cap/8, cap/4, cap/2, cap
};

void to_json(nlohmann::json& j, const AlgebraCertificate& c);

/// Smallest C with |A(x,e1) - A(x,e2) - A~(x)(e1 - e2)| <= delta |e1 - e2| + C
/// over sampled pairs with |e_i| <= cap. Requires both asymptotic checks to
/// pass at eps = delta / 4 and throws std::domain_error if C keeps growing
/// with the cap.
AlgebraCertificate check_algebra_bound(const OperatorSpec& spec, double delta, const SamplerConfig& sampler = {},
                                       double cap = 1e3);

struct StructureReport {
  bool coercivity = true;
  bool growth = true;
  bool monotone = true;
  bool strictly_monotone = true;
  std::string witness;  ///< first failing sample, human readable
  std::size_t samples = 0;
  bool passed() const { return coercivity && growth && monotone; }
};

void to_json(nlohmann::json& j, const StructureReport& r);

StructureReport check_monotonicity_coercivity(const OperatorSpec& spec, const SamplerConfig& sampler = {});

/// Frobenius norm of a 2xN matrix.
inline double frob(const Grad& g) { return g.norm(); }

}  // namespace vws
