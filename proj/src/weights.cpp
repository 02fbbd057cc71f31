#include "vws/weights.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "vws/parallel.hpp"

namespace vws {

namespace {

int ceil_pow2_at_least(int n) {
  int s = 1;
  while (s < n) s *= 2;
  return s;
}

CellRect clip(CellRect r, int nx, int ny) {
  return {std::max(r.i0, 0), std::min(r.i1, nx), std::max(r.j0, 0), std::min(r.j1, ny)};
}

CellRect centered_window(int ci, int cj, int k, int nx, int ny) {
  return clip({ci - k, ci + k, cj - k, cj + k}, nx, ny);
}

std::vector<double> scalar_values(const PiecewiseField& g, const char* what) {
  if (g.layout() == Layout::vertex)
    throw std::invalid_argument(std::string(what) + ": triangle layout expected");
  std::vector<double> v(g.entities());
  for (std::size_t t = 0; t < v.size(); ++t) v[t] = g.layout() == Layout::triangle_scalar ? std::abs(g[t]) : g.norm_at(t);
  return v;
}

}  // namespace

WindowFamily WindowFamily::centered(const TriMesh& mesh) {
  WindowFamily fam;
  fam.kind = Kind::centered;
  fam.nx = mesh.cells_x();
  fam.ny = mesh.cells_y();
  fam.spacing = mesh.extent() / std::max(fam.nx, fam.ny);
  fam.centers.resize(mesh.num_vertices());
  for (std::size_t v = 0; v < fam.centers.size(); ++v) fam.centers[v] = static_cast<int>(v);
  const int top = std::max(fam.nx, fam.ny);
  for (int k = 1;; k *= 2) {
    fam.half_sides.push_back(k);
    if (k >= top) break;
  }
  return fam;
}

WindowFamily WindowFamily::dyadic_shifted(const TriMesh& mesh) {
  WindowFamily fam;
  fam.kind = Kind::dyadic_shifted;
  fam.nx = mesh.cells_x();
  fam.ny = mesh.cells_y();
  fam.spacing = mesh.extent() / std::max(fam.nx, fam.ny);
  const int top = ceil_pow2_at_least(std::max(fam.nx, fam.ny));
  for (int s = 1; s <= top; s *= 2) fam.half_sides.push_back(s);
  return fam;
}

std::vector<CellRect> WindowFamily::windows() const {
  std::vector<CellRect> out;
  if (kind == Kind::centered) {
    for (int c : centers) {
      const int ci = c % (nx + 1), cj = c / (nx + 1);
      for (int k : half_sides) {
        const CellRect r = centered_window(ci, cj, k, nx, ny);
        if (!r.empty()) out.push_back(r);
      }
    }
    return out;
  }
  for (int s : half_sides) {
    const int step = std::max(1, s / 2);
    for (int j0 = 0; j0 < ny; j0 += step)
      for (int i0 = 0; i0 < nx; i0 += step) {
        const CellRect r = clip({i0, i0 + s, j0, j0 + s}, nx, ny);
        if (!r.empty()) out.push_back(r);
      }
  }
  return out;
}

std::string WindowFamily::descriptor() const {
  std::ostringstream os;
  os << (kind == Kind::centered ? "centered" : "dyadic_shifted") << " grid=" << nx << "x" << ny
     << " h=" << spacing << (kind == Kind::centered ? " half_sides=" : " sides=");
  for (std::size_t k = 0; k < half_sides.size(); ++k) os << (k ? "," : "") << half_sides[k];
  return os.str();
}

CellIntegrals::CellIntegrals(const TriMesh& mesh, const std::vector<double>& triangle_values)
    : nx_(mesh.cells_x()), ny_(mesh.cells_y()) {
  if (triangle_values.size() != mesh.num_triangles())
    throw std::invalid_argument("cell integrals: one value per triangle expected");
  const std::size_t stride = static_cast<std::size_t>(nx_ + 1);
  value_prefix_.assign(stride * static_cast<std::size_t>(ny_ + 1), 0.0);
  area_prefix_.assign(value_prefix_.size(), 0.0);
  for (int j = 0; j < ny_; ++j) {
    double row_v = 0.0, row_a = 0.0;
    for (int i = 0; i < nx_; ++i) {
      const int c = j * nx_ + i;
      for (int t : {2 * c, 2 * c + 1}) {
        row_v += triangle_values[static_cast<std::size_t>(t)] * mesh.area(t);
        row_a += mesh.area(t);
      }
      const std::size_t here = static_cast<std::size_t>(j + 1) * stride + static_cast<std::size_t>(i + 1);
      const std::size_t below = static_cast<std::size_t>(j) * stride + static_cast<std::size_t>(i + 1);
      value_prefix_[here] = value_prefix_[below] + row_v;
      area_prefix_[here] = area_prefix_[below] + row_a;
    }
  }
}

double CellIntegrals::sum(const std::vector<double>& prefix, const CellRect& r) const {
  const std::size_t stride = static_cast<std::size_t>(nx_ + 1);
  auto P = [&](int i, int j) { return prefix[static_cast<std::size_t>(j) * stride + static_cast<std::size_t>(i)]; };
  return P(r.i1, r.j1) - P(r.i0, r.j1) - P(r.i1, r.j0) + P(r.i0, r.j0);
}

double CellIntegrals::integral(const CellRect& r) const { return sum(value_prefix_, r); }
double CellIntegrals::measure(const CellRect& r) const { return sum(area_prefix_, r); }

namespace {

PiecewiseField centered_sup(const TriMesh& mesh, const MeshPtr& mesh_ptr, const std::vector<double>& values,
                            const WindowFamily& family, const std::vector<int>& ladder, double power) {
  if (family.kind != WindowFamily::Kind::centered)
    throw std::invalid_argument("maximal function: centered window family expected");
  if (family.centers.empty() || ladder.empty()) throw std::invalid_argument("maximal function: empty window family");
  if (family.nx != mesh.cells_x() || family.ny != mesh.cells_y())
    throw std::invalid_argument("maximal function: window family built for another mesh");
  std::vector<double> powered(values);
  if (power != 1.0)
    for (double& v : powered) v = std::pow(v, power);
  const CellIntegrals ints(mesh, powered);
  PiecewiseField out(mesh_ptr, Layout::vertex, 1);
  const int nx = mesh.cells_x(), ny = mesh.cells_y();
  parallel_for(family.centers.size(), [&](std::size_t k) {
    const int c = family.centers[k];
    const int ci = c % (nx + 1), cj = c / (nx + 1);
    double best = 0.0;
    for (int r : ladder) {
      const CellRect w = centered_window(ci, cj, r, nx, ny);
      if (w.empty()) continue;
      best = std::max(best, ints.average(w));
    }
    out[static_cast<std::size_t>(c)] = power != 1.0 ? std::pow(best, 1.0 / power) : best;
  });
  return out;
}

}  // namespace

PiecewiseField maximal_function(const PiecewiseField& g, const WindowFamily& family) {
  g.require_finite("maximal_function");
  return centered_sup(g.mesh(), g.mesh_ptr(), scalar_values(g, "maximal_function"), family, family.half_sides, 1.0);
}

PiecewiseField maximal_function(const PiecewiseField& g) {
  return maximal_function(g, WindowFamily::centered(g.mesh()));
}

PiecewiseField restricted_maximal(const PiecewiseField& g, double q, double rho) {
  if (!(q >= 1.0)) throw std::invalid_argument("restricted_maximal: q must be >= 1");
  const WindowFamily family = WindowFamily::centered(g.mesh());
  if (rho < family.spacing * (1.0 - 1e-12))
    throw std::invalid_argument("restricted_maximal: rho must be at least one mesh spacing");
  std::vector<int> ladder;
  for (int k : family.half_sides)
    if (k * family.spacing <= rho * (1.0 + 1e-12)) ladder.push_back(k);
  g.require_finite("restricted_maximal");
  return centered_sup(g.mesh(), g.mesh_ptr(), scalar_values(g, "restricted_maximal"), family, ladder, q);
}

PiecewiseField vertex_max_to_triangles(const PiecewiseField& vertex_field) {
  vertex_field.require_layout(Layout::vertex, "vertex_max_to_triangles");
  const TriMesh& mesh = vertex_field.mesh();
  PiecewiseField out(vertex_field.mesh_ptr(), Layout::triangle_scalar, 1);
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles()[t];
    out[t] = std::max({vertex_field[static_cast<std::size_t>(tri[0])], vertex_field[static_cast<std::size_t>(tri[1])],
                       vertex_field[static_cast<std::size_t>(tri[2])]});
  }
  return out;
}

void require_positive_weight(const PiecewiseField& w, const char* what) {
  w.require_layout(Layout::triangle_scalar, what);
  for (double x : w.values())
    if (!(x > 0.0) || !std::isfinite(x)) throw std::invalid_argument(std::string(what) + ": weight must be positive");
}

void to_json(nlohmann::json& j, const ApReport& r) {
  j = nlohmann::json{{"p", r.p},
                     {"ap_constant", r.ap_constant},
                     {"worst_window", r.worst_window},
                     {"reverse_holder_s", r.reverse_holder_s},
                     {"reverse_holder_constant", r.reverse_holder_constant},
                     {"dual_reverse_holder_s", r.dual_reverse_holder_s},
                     {"reverse_holder_found", r.reverse_holder_found},
                     {"embedding_q", r.embedding_q},
                     {"family_descriptor", r.family_descriptor},
                     {"windows", r.windows}};
}

void from_json(const nlohmann::json& j, ApReport& r) {
  j.at("p").get_to(r.p);
  j.at("ap_constant").get_to(r.ap_constant);
  j.at("worst_window").get_to(r.worst_window);
  j.at("reverse_holder_s").get_to(r.reverse_holder_s);
  r.reverse_holder_constant = j.value("reverse_holder_constant", 1.0);
  r.dual_reverse_holder_s = j.value("dual_reverse_holder_s", r.reverse_holder_s);
  r.reverse_holder_found = j.value("reverse_holder_found", true);
  j.at("embedding_q").get_to(r.embedding_q);
  j.at("family_descriptor").get_to(r.family_descriptor);
  r.windows = j.value("windows", std::size_t{0});
}

double embedding_exponent(double s, double p) {
  if (!(s > 1.0) || !(p > 1.0)) throw std::invalid_argument("embedding_exponent: s > 1 and p > 1 required");
  return s * p / (p + s - 1.0);
}

std::pair<double, double> reverse_holder_exponent(const PiecewiseField& w, const WindowFamily& family,
                                                  const ApOptions& options) {
  require_positive_weight(w, "reverse_holder_exponent");
  const TriMesh& mesh = w.mesh();
  const auto windows = family.windows();
  const CellIntegrals base(mesh, w.values());
  double best_s = 1.0, best_c = std::numeric_limits<double>::infinity();
  for (double s : options.reverse_holder_ladder) {
    std::vector<double> ws(w.values());
    for (double& x : ws) x = std::pow(x, s);
    const CellIntegrals powered(mesh, ws);
    double C = 0.0;
    for (const auto& r : windows) C = std::max(C, std::pow(powered.average(r), 1.0 / s) / base.average(r));
    if (C <= options.reverse_holder_threshold && s > best_s) {
      best_s = s;
      best_c = C;
    }
  }
  return {best_s, best_c};
}

ApReport ap_constant(const PiecewiseField& w, double p, const WindowFamily& family, const ApOptions& options) {
  if (!(p >= 1.0)) throw std::invalid_argument("ap_constant: p must be >= 1");
  require_positive_weight(w, "ap_constant");
  const TriMesh& mesh = w.mesh();
  if (family.nx != mesh.cells_x() || family.ny != mesh.cells_y())
    throw std::invalid_argument("ap_constant: window family built for another mesh");
  const auto windows = family.windows();
  if (windows.empty()) throw std::invalid_argument("ap_constant: empty window family");

  ApReport rep;
  rep.p = p;
  rep.family_descriptor = family.descriptor();
  rep.windows = windows.size();
  const CellIntegrals avg_w(mesh, w.values());
  double best = -1.0;
  std::size_t worst = 0;
  if (p > 1.0) {
    const double e = 1.0 / (p - 1.0);
    std::vector<double> dual(w.values());
    for (double& x : dual) x = std::pow(x, -e);
    const CellIntegrals avg_dual(mesh, dual);
    for (std::size_t k = 0; k < windows.size(); ++k) {
      const double v = avg_w.average(windows[k]) * std::pow(avg_dual.average(windows[k]), p - 1.0);
      if (v > best) {
        best = v;
        worst = k;
      }
    }
  } else {
    const int nx = mesh.cells_x();
    std::vector<double> cell_min(static_cast<std::size_t>(nx * mesh.cells_y()));
    for (std::size_t c = 0; c < cell_min.size(); ++c) cell_min[c] = std::min(w[2 * c], w[2 * c + 1]);
    for (std::size_t k = 0; k < windows.size(); ++k) {
      const CellRect& r = windows[k];
      double m = std::numeric_limits<double>::infinity();
      for (int j = r.j0; j < r.j1; ++j)
        for (int i = r.i0; i < r.i1; ++i) m = std::min(m, cell_min[static_cast<std::size_t>(j * nx + i)]);
      const double v = avg_w.average(r) / m;
      if (v > best) {
        best = v;
        worst = k;
      }
    }
  }
  rep.ap_constant = best;
  rep.worst_window = windows[worst].describe();

  const auto [s, C] = reverse_holder_exponent(w, family, options);
  rep.reverse_holder_s = s;
  rep.reverse_holder_constant = C;
  rep.reverse_holder_found = s > 1.0;
  if (p > 1.0) {
    PiecewiseField dual(w);
    for (double& x : dual.values()) x = std::pow(x, -1.0 / (p - 1.0));
    const double ds = reverse_holder_exponent(dual, family, options).first;
    rep.dual_reverse_holder_s = ds;
    rep.embedding_q = ds > 1.0 ? embedding_exponent(ds, p) : 1.0;
  } else {
    rep.dual_reverse_holder_s = 1.0;
    rep.embedding_q = 1.0;
  }
  return rep;
}

ApReport ap_constant(const PiecewiseField& w, double p) {
  return ap_constant(w, p, WindowFamily::dyadic_shifted(w.mesh()));
}

PiecewiseField weight_from_maximal(const PiecewiseField& f, double exponent) {
  if (!(exponent > -1.0 && exponent < 1.0))
    std::clog << "vws: warning: weight exponent " << exponent << " lies outside (-1, 1); the A_2 check decides\n";
  PiecewiseField Mf = vertex_max_to_triangles(maximal_function(f));
  for (double& x : Mf.values()) x = std::pow(1.0 + x, exponent);
  return Mf;
}

PiecewiseField weight_min(const PiecewiseField& w1, const PiecewiseField& w2) {
  require_positive_weight(w1, "weight_min");
  require_positive_weight(w2, "weight_min");
  if (w1.entities() != w2.entities()) throw std::invalid_argument("weight_min: weights live on different meshes");
  PiecewiseField out(w1);
  for (std::size_t t = 0; t < out.entities(); ++t) out[t] = std::min(w1[t], w2[t]);
  return out;
}

PiecewiseField power_weight(const MeshPtr& mesh, Point center, double alpha) {
  return sample_scalar(mesh, [&](Point x) { return std::pow(distance(x, center), alpha); });
}

}  // namespace vws
