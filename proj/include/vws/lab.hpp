#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vws/estimate.hpp"
#include "vws/field.hpp"
#include "vws/operators.hpp"
#include "vws/solvers.hpp"

namespace vws {

// ---- recipes ---------------------------------------------------------------

/// Right-hand sides f (triangle_vector, 2xN, sampled at centroids):
///   zero; grad_sin (grad of sin(pi x1) sin(pi x2)); smooth;
///   spike {height, center, width, direction}: height * direction on the
///     square of side `width` around `center`;
///   rough_random {seed, blocks}: standard normal entries constant on a
///     blocks x blocks grid of squares.
PiecewiseField make_rhs(const std::string& id, const nlohmann::json& params, const MeshPtr& mesh, int N = 1);
std::vector<std::string> rhs_registry_ids();

/// Weights (triangle_scalar):
///   one; power {center, alpha}; step {low, high} (split at x1 = 1/2);
///   spike_maximal {height, width, exponent}: (1 + M|f_spike|)^exponent.
PiecewiseField make_weight(const std::string& id, const nlohmann::json& params, const MeshPtr& mesh);
std::vector<std::string> weight_registry_ids();

/// Seeded random vertex field vanishing on the boundary of the unit square:
/// a few low sine modes plus compactly supported bumps.
PiecewiseField random_zero_boundary_field(const MeshPtr& mesh, std::uint64_t seed, int N = 1);

/// A scalar manufactured solution with its gradient.
struct Manufactured {
  std::function<double(Point)> u;
  std::function<Point(Point)> grad;
};
/// sin(pi x1) sin(pi x2) scaled by `amplitude`.
Manufactured sine_solution(double amplitude = 1.0);

/// Flux-form data f = A(x, grad u*) at centroids, so that u* solves the
/// continuum problem (N = 1).
PiecewiseField manufactured_rhs(const OperatorSpec& spec, const MeshPtr& mesh, const Manufactured& sol);

/// H^1 seminorm of u_h - u* with the three-edge-midpoint rule on each triangle.
double h1_error(const PiecewiseField& u, const Manufactured& sol);

// ---- inequality checks -----------------------------------------------------

/// keyest: for each (f, w, M) solve the A~-linear problem and report
/// int |grad v|^p w against int |f|^p w.
struct NamedRecipe {
  std::string id;
  nlohmann::json params = nlohmann::json::object();
  bool operator==(const NamedRecipe&) const = default;
};
std::vector<EstimateReport> verify_linear_weighted(const OperatorSpec& spec, const std::vector<NamedRecipe>& fs,
                                                   const std::vector<NamedRecipe>& ws, double p,
                                                   const std::vector<int>& ladder, const LinearOptions& options = {});

struct Ball {
  Point center;
  double radius = 0.0;
};

/// unlocal on a ball B with 2B inside the unit square.
EstimateReport verify_local_interior(const PiecewiseField& A, const PiecewiseField& f, const PiecewiseField& u,
                                     Ball ball, const PiecewiseField& w, double p, double q_tilde);

/// apriori: int |grad u|^q against 1 + int |f|^q (weight of ones).
EstimateReport apriori_report(const PiecewiseField& u, const PiecewiseField& f, double q);
/// apriori3: int |grad u|^p w against 1 + int |f|^p w.
EstimateReport apriori3_report(const PiecewiseField& u, const PiecewiseField& f, const PiecewiseField& w, double p);
/// apriori2: int |grad u|^2 / (1 + M|f|)^{2-q} against 1 + int |f|^q.
EstimateReport apriori2_report(const PiecewiseField& u, const PiecewiseField& f, double q);

/// Solves the nonlinear problem and reports apriori2.
EstimateReport verify_duality_estimate(const OperatorSpec& spec, const PiecewiseField& f, double q,
                                       const NonlinearOptions& options = {});

// ---- biting ----------------------------------------------------------------

struct BitingDecomposition {
  std::vector<double> thresholds;            ///< t_j, j = 1..j_max
  std::vector<std::vector<char>> sets;       ///< E_j per triangle
  std::vector<double> excluded;              ///< |Omega \ E_j|
  std::vector<double> budgets;               ///< 2^{-j} |Omega|
  double total_measure = 0.0;
  double l1_bound = 0.0;                     ///< sup_n int v^n
};

/// Thresholds from the pointwise sup envelope: t_j is the smallest value with
/// |{sup_n v^n > t_j}| <= 2^{-j} |Omega|, and E_j = {sup_n v^n <= t_j}.
BitingDecomposition biting_sets(const std::vector<PiecewiseField>& sequence, int j_max);

// ---- div-curl -------------------------------------------------------------

/// A sequence recipe: a^k, b^k and their limits a, b as pointwise 2-vectors.
/// positive_trig: a^k = (x2, x1) + grad(sin(w x1) sin(w x2) / w),
///                b^k = (1, 1) + curl(cos(w x1) cos(w x2) / w), w = (k + 1/2) pi.
struct DivCurlRecipe {
  std::string id;
  std::function<Point(Point, int)> a_k, b_k;
  std::function<Point(Point)> a, b;
  bool declared_controlled = true;
};

/// positive_trig, orthogonal, constant, negative_control.
DivCurlRecipe make_divcurl_recipe(const std::string& id);
std::vector<std::string> divcurl_registry_ids();

struct BasketFunction {
  std::string id;
  std::function<double(Point)> phi;
};
/// {1, x1, x2, x1 x2, bump}.
std::vector<BasketFunction> default_basket();

struct DivCurlRow {
  std::string recipe;
  int k = 0;
  int M = 0;
  std::string phi;
  int j = 0;              ///< 0: all of Omega, j >= 1: the biting set E_j
  double pairing = 0.0;   ///< int_E a^k . b^k w phi
  double limit = 0.0;     ///< int_E a . b w phi
  double error = 0.0;     ///< pairing - limit
};

struct DivCurlTable {
  std::string recipe;
  std::string weight;
  int M = 0;
  std::vector<int> ks;
  std::vector<DivCurlRow> rows;
  std::vector<double> max_error;       ///< per k, over the basket, on Omega
  std::vector<double> divergence_probe;///< per k: int b^k . grad c^k
  double slope = 0.0;                  ///< least-squares slope of log max_error vs log k
  bool divergence_controlled = true;
  bool flagged_negative = false;
  BitingDecomposition biting;
};

DivCurlTable divcurl_experiment(const DivCurlRecipe& recipe, const PiecewiseField& w,
                                const std::vector<BasketFunction>& basket, const std::vector<int>& ks, int j_max = 6);

/// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

// ---- measure data ----------------------------------------------------------

struct DiracRow {
  int M = 0;
  double norm_q = 0.0;   ///< ||grad u_h||_{L^q}
  double norm_2 = 0.0;   ///< ||grad u_h||_{L^2}
  SolveReport report;
};

std::vector<DiracRow> dirac_experiment(const OperatorSpec& spec, Point x0, const std::vector<int>& ladder,
                                       double q = 1.5, const NonlinearOptions& options = {});

}  // namespace vws
