#include "vws/truncation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "vws/parallel.hpp"
#include "vws/weights.hpp"

namespace vws {

double TruncationResult::good_fraction() const {
  if (good_set.empty()) return 1.0;
  return static_cast<double>(std::count(good_set.begin(), good_set.end(), 1)) / static_cast<double>(good_set.size());
}

std::vector<char> TruncationResult::bad_triangles() const {
  const TriMesh& mesh = g_lambda.mesh();
  std::vector<char> bad(mesh.num_triangles(), 0);
  for (std::size_t t = 0; t < bad.size(); ++t)
    for (int v : mesh.triangles()[t])
      if (!good_set[static_cast<std::size_t>(v)]) bad[t] = 1;
  return bad;
}

nlohmann::json TruncationResult::sidecar() const {
  return {{"lambda", lambda},
          {"c_used", c_used},
          {"lipschitz_constant_used", lipschitz_constant_used},
          {"good_fraction", good_fraction()},
          {"measured_gradient_bound", measured_gradient_bound},
          {"data_lipschitz", data_lipschitz},
          {"geometric_factor", geometric_factor},
          {"distance", "euclidean"}};
}

void TruncationResult::dump(std::ostream& field_out) const { g_lambda.dump(field_out); }

TruncationResult lipschitz_truncate(const PiecewiseField& g, double lambda, const TruncationOptions& options) {
  g.require_layout(Layout::vertex, "lipschitz_truncate");
  return lipschitz_truncate(g, maximal_function(gradient(g)), lambda, options);
}

TruncationResult lipschitz_truncate(const PiecewiseField& g, const PiecewiseField& maximal, double lambda,
                                    const TruncationOptions& options) {
  g.require_layout(Layout::vertex, "lipschitz_truncate");
  g.require_finite("lipschitz_truncate");
  maximal.require_layout(Layout::vertex, "lipschitz_truncate maximal function");
  if (!(lambda > 0.0)) throw std::invalid_argument("lipschitz_truncate: lambda must be positive");
  if (!(options.c0 > 0.0)) throw std::invalid_argument("lipschitz_truncate: c0 must be positive");
  const TriMesh& mesh = g.mesh();
  const auto N = static_cast<std::size_t>(g.components());
  const std::size_t nv = mesh.num_vertices();

  double gmax = 0.0;
  for (double v : g.values()) gmax = std::max(gmax, std::abs(v));
  const double btol = options.boundary_tol * std::max(1.0, gmax);
  for (std::size_t v = 0; v < nv; ++v) {
    if (!mesh.is_boundary(static_cast<int>(v))) continue;
    for (double x : g.at(v))
      if (std::abs(x) > btol) {
        std::ostringstream msg;
        msg << "lipschitz_truncate: boundary vertex " << v << " carries value " << x;
        throw std::invalid_argument(msg.str());
      }
  }

  TruncationResult r{g, lambda, std::vector<char>(nv, 0), options.c0, 0.0, 0.0, 0.0,
                     mesh.lipschitz_geometric_factor() * std::sqrt(static_cast<double>(N)), maximal};
  zero_boundary(r.g_lambda);
  std::vector<int> good, bad;
  for (std::size_t v = 0; v < nv; ++v) {
    r.good_set[v] = mesh.is_boundary(static_cast<int>(v)) || maximal[v] <= lambda;
    (r.good_set[v] ? good : bad).push_back(static_cast<int>(v));
  }
  if (bad.empty()) {
    r.lipschitz_constant_used = r.c_used * lambda;
    return r;
  }

  const auto& X = mesh.vertices();
  const PiecewiseField& gz = r.g_lambda;
  std::vector<double> row_max(good.size(), 0.0);
  parallel_for(good.size(), [&](std::size_t a) {
    const int x = good[a];
    double best = 0.0;
    for (std::size_t b = a + 1; b < good.size(); ++b) {
      const int y = good[b];
      const double d = distance(X[static_cast<std::size_t>(x)], X[static_cast<std::size_t>(y)]);
      for (std::size_t c = 0; c < N; ++c)
        best = std::max(best, std::abs(gz.at(static_cast<std::size_t>(x))[c] - gz.at(static_cast<std::size_t>(y))[c]) / d);
    }
    row_max[a] = best;
  });
  r.data_lipschitz = row_max.empty() ? 0.0 : *std::max_element(row_max.begin(), row_max.end());

  int doublings = 0;
  while (r.c_used * lambda < r.data_lipschitz) {
    if (++doublings > options.max_doublings) {
      std::ostringstream msg;
      msg << "lipschitz_truncate: data on the good set is " << r.data_lipschitz / lambda
          << " lambda-Lipschitz, beyond the cap c0 * 2^" << options.max_doublings;
      throw std::runtime_error(msg.str());
    }
    r.c_used *= 2.0;
  }
  const double L = r.c_used * lambda;
  r.lipschitz_constant_used = L;

  PiecewiseField out = r.g_lambda;
  parallel_for(bad.size(), [&](std::size_t a) {
    const auto x = static_cast<std::size_t>(bad[a]);
    for (std::size_t c = 0; c < N; ++c) {
      double low = -std::numeric_limits<double>::infinity(), high = std::numeric_limits<double>::infinity();
      for (int y : good) {
        const double gy = gz.at(static_cast<std::size_t>(y))[c];
        const double d = L * distance(X[x], X[static_cast<std::size_t>(y)]);
        low = std::max(low, gy - d);
        high = std::min(high, gy + d);
      }
      out.at(x)[c] = 0.5 * (low + high);
    }
  });
  r.g_lambda = std::move(out);

  const PiecewiseField grad = gradient(r.g_lambda);
  const std::vector<char> bad_tri = r.bad_triangles();
  for (std::size_t t = 0; t < bad_tri.size(); ++t)
    if (bad_tri[t]) r.measured_gradient_bound = std::max(r.measured_gradient_bound, grad.norm_at(t));
  return r;
}

namespace {

PiecewiseField masked(const PiecewiseField& g, const std::vector<char>& mask) {
  PiecewiseField out(g);
  for (std::size_t t = 0; t < mask.size(); ++t)
    if (!mask[t])
      for (double& v : out.at(t)) v = 0.0;
  return out;
}

}  // namespace

std::pair<EstimateReport, EstimateReport> verify_truncation_weighted(const PiecewiseField& g, double lambda,
                                                                     const PiecewiseField& w, double p,
                                                                     const TruncationOptions& options) {
  return verify_truncation_weighted(g, lipschitz_truncate(g, lambda, options), w, p);
}

std::pair<EstimateReport, EstimateReport> verify_truncation_weighted(const PiecewiseField& g,
                                                                     const TruncationResult& result,
                                                                     const PiecewiseField& w, double p) {
  require_positive_weight(w, "verify_truncation_weighted");
  if (!(p >= 1.0)) throw std::invalid_argument("verify_truncation_weighted: p must be >= 1");
  const PiecewiseField grad_g = gradient(g);
  const PiecewiseField grad_gl = gradient(result.g_lambda);
  PiecewiseField diff(g);
  for (std::size_t k = 0; k < diff.values().size(); ++k) diff[k] -= result.g_lambda[k];
  const PiecewiseField grad_diff = gradient(diff);
  const std::vector<char> bad = result.bad_triangles();

  nlohmann::json context{{"M", g.mesh().resolution()},
                         {"p", p},
                         {"lambda", result.lambda},
                         {"c_used", result.c_used},
                         {"good_fraction", result.good_fraction()},
                         {"ap", ap_constant(w, p).ap_constant}};
  nlohmann::json c1 = context, c2 = context;
  c1["ratio"] = "first";
  c2["ratio"] = "second";
  EstimateReport first = make_estimate("itm_weight", weighted_power_integral(grad_gl, w, p),
                                       weighted_power_integral(grad_g, w, p), std::move(c1));
  EstimateReport second = make_estimate("itm_weight", weighted_power_integral(grad_diff, w, p),
                                        weighted_power_integral(masked(grad_g, bad), w, p), std::move(c2));
  return {first, second};
}

}  // namespace vws
