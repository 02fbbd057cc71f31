#pragma once

#include <iosfwd>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "vws/estimate.hpp"
#include "vws/field.hpp"

namespace vws {

struct TruncationOptions {
  double c0 = 1.0;        ///< initial Lipschitz factor
  int max_doublings = 6;  ///< c is capped at c0 * 2^max_doublings
  double boundary_tol = 1e-12;
};

struct TruncationResult {
  PiecewiseField g_lambda;
  double lambda = 0.0;
  std::vector<char> good_set;            ///< per vertex: M|grad g| <= lambda, or boundary
  double c_used = 0.0;                   ///< c after consistency doubling
  double lipschitz_constant_used = 0.0;  ///< c_used * lambda
  double data_lipschitz = 0.0;           ///< Lipschitz constant of g on the good set
  double measured_gradient_bound = 0.0;  ///< max |grad g_lambda| over triangles with a bad vertex
  double geometric_factor = 0.0;         ///< mesh factor times sqrt(N)
  PiecewiseField maximal;                ///< M|grad g| at vertices

  double good_fraction() const;
  /// Triangles with at least one bad vertex.
  std::vector<char> bad_triangles() const;
  /// Sidecar {lambda, c_used, good_fraction, measured_gradient_bound, ...}.
  nlohmann::json sidecar() const;
  void dump(std::ostream& field_out) const;
};

/// Lipschitz truncation g^lambda of a zero-boundary P1 field. Bad vertices
/// are filled with the midpoint of the two McShane extensions of g from the
/// good set with constant c lambda, componentwise.
TruncationResult lipschitz_truncate(const PiecewiseField& g, double lambda, const TruncationOptions& options = {});

/// Same, with M|grad g| supplied (it does not depend on lambda).
TruncationResult lipschitz_truncate(const PiecewiseField& g, const PiecewiseField& maximal, double lambda,
                                    const TruncationOptions& options = {});

/// Both weighted stability ratios:
///   first:  int |grad g^l|^p w / int |grad g|^p w
///   second: int |grad(g - g^l)|^p w / int_{M grad g > l} |grad g|^p w
/// The bad region is the union of triangles with a bad vertex.
std::pair<EstimateReport, EstimateReport> verify_truncation_weighted(const PiecewiseField& g, double lambda,
                                                                     const PiecewiseField& w, double p,
                                                                     const TruncationOptions& options = {});
std::pair<EstimateReport, EstimateReport> verify_truncation_weighted(const PiecewiseField& g,
                                                                     const TruncationResult& result,
                                                                     const PiecewiseField& w, double p);

}  // namespace vws
