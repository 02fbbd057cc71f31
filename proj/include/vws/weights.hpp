#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vws/field.hpp"

namespace vws {

/// A finite family of axis-parallel square windows in cell index space.
///
/// `centered`: windows of half-side r in `half_sides` (cells) around each
/// vertex in `centers`, clipped to the domain. The radius ladder is
/// h, 2h, 4h, ... up to the first radius covering the domain.
///
/// `dyadic_shifted`: squares of side s in {1, 2, 4, ...} cells anchored at
/// multiples of max(1, s/2), clipped to the domain. This is the default family
/// for A_p estimation and costs O(M^2 log M) windows.
struct WindowFamily {
  enum class Kind { centered, dyadic_shifted };
  Kind kind = Kind::centered;
  std::vector<int> centers;
  std::vector<int> half_sides;  ///< centered: ladder; dyadic: side lengths
  int nx = 0, ny = 0;           ///< cell grid the family was built for
  double spacing = 0.0;         ///< h, the physical size of one cell

  static WindowFamily centered(const TriMesh& mesh);
  static WindowFamily dyadic_shifted(const TriMesh& mesh);

  /// Enumerates every window (clipped, nonempty) in a fixed order.
  std::vector<CellRect> windows() const;
  std::string descriptor() const;
};

/// Per-cell prefix sums of a triangle scalar field integrated against area.
class CellIntegrals {
 public:
  CellIntegrals(const TriMesh& mesh, const std::vector<double>& triangle_values);
  /// Integral of the field over the window.
  double integral(const CellRect& r) const;
  double measure(const CellRect& r) const;
  double average(const CellRect& r) const { return integral(r) / measure(r); }

 private:
  double sum(const std::vector<double>& prefix, const CellRect& r) const;
  int nx_, ny_;
  std::vector<double> value_prefix_;
  std::vector<double> area_prefix_;
};

/// Hardy-Littlewood maximal function over a centered family: at each center
/// vertex, the largest window average of |g|. `g` is a triangle scalar or a
/// triangle vector/tensor field (its pointwise norm is used). Returns a
/// vertex field with one component.
PiecewiseField maximal_function(const PiecewiseField& g, const WindowFamily& family);
PiecewiseField maximal_function(const PiecewiseField& g);

/// M_q^{<rho}: sup over ladder radii <= rho of (window average of |g|^q)^{1/q}.
PiecewiseField restricted_maximal(const PiecewiseField& g, double q, double rho);

/// Triangle scalar field holding the largest vertex value of each triangle.
PiecewiseField vertex_max_to_triangles(const PiecewiseField& vertex_field);

struct ApReport {
  double p = 2.0;
  double ap_constant = 1.0;
  std::string worst_window;
  double reverse_holder_s = 1.0;          ///< measured on w
  double reverse_holder_constant = 1.0;
  double dual_reverse_holder_s = 1.0;     ///< measured on w^{-(p'-1)}
  bool reverse_holder_found = false;
  double embedding_q = 1.0;               ///< s p / (p + s - 1) with the dual s
  std::string family_descriptor;
  std::size_t windows = 0;
};

void to_json(nlohmann::json& j, const ApReport& r);
void from_json(const nlohmann::json& j, ApReport& r);

struct ApOptions {
  std::vector<double> reverse_holder_ladder{1.1, 1.25, 1.5, 2.0};
  double reverse_holder_threshold = 10.0;
};

/// q = s p / (p + s - 1), the exponent of the embedding L^p_w -> L^q_loc.
double embedding_exponent(double s, double p);

/// Largest ladder exponent s with sup over windows of
/// (avg w^s)^{1/s} / avg w <= threshold; returns {s, constant} or {1, inf}.
std::pair<double, double> reverse_holder_exponent(const PiecewiseField& w, const WindowFamily& family,
                                                  const ApOptions& options = {});

/// Lower estimate of A_p(w) over a finite window family:
///   p > 1: sup (avg w)(avg w^{-1/(p-1)})^{p-1}
///   p = 1: sup avg w / min w (the window form of M w <= A w)
ApReport ap_constant(const PiecewiseField& w, double p, const WindowFamily& family,
                     const ApOptions& options = {});
ApReport ap_constant(const PiecewiseField& w, double p);

/// (1 + M|f|)^exponent on triangles. Exponents outside (-1, 1) are reported
/// on std::clog but not rejected.
PiecewiseField weight_from_maximal(const PiecewiseField& f, double exponent);

/// Pointwise minimum of two positive weights.
PiecewiseField weight_min(const PiecewiseField& w1, const PiecewiseField& w2);

/// |x - c|^alpha sampled at centroids.
PiecewiseField power_weight(const MeshPtr& mesh, Point center, double alpha);

void require_positive_weight(const PiecewiseField& w, const char* what);

}  // namespace vws
