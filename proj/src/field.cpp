#include "vws/field.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace vws {

std::string to_string(Layout layout) {
  switch (layout) {
    case Layout::vertex: return "vertex";
    case Layout::triangle_scalar: return "triangle_scalar";
    case Layout::triangle_vector: return "triangle_vector";
    case Layout::triangle_tensor: return "triangle_tensor";
  }
  return "unknown";
}

Layout layout_from_string(const std::string& name) {
  if (name == "vertex") return Layout::vertex;
  if (name == "triangle_scalar") return Layout::triangle_scalar;
  if (name == "triangle_vector") return Layout::triangle_vector;
  if (name == "triangle_tensor") return Layout::triangle_tensor;
  throw std::invalid_argument("unknown field layout '" + name + "'");
}

namespace {

int stride_for(Layout layout, int N) {
  switch (layout) {
    case Layout::vertex: return N;
    case Layout::triangle_scalar: return 1;
    case Layout::triangle_vector: return 2 * N;
    case Layout::triangle_tensor: return 4 * N * N;
  }
  return 0;
}

}  // namespace

PiecewiseField::PiecewiseField(MeshPtr mesh, Layout layout, int components)
    : mesh_(std::move(mesh)), layout_(layout), N_(components), stride_(stride_for(layout, components)) {
  if (!mesh_) throw std::invalid_argument("field: null mesh");
  if (N_ < 1) throw std::invalid_argument("field: component count must be positive");
  if (layout_ == Layout::triangle_scalar && N_ != 1)
    throw std::invalid_argument("field: triangle_scalar fields have one component");
  values_.assign(entities() * static_cast<std::size_t>(stride_), 0.0);
}

PiecewiseField::PiecewiseField(MeshPtr mesh, Layout layout, int components, std::vector<double> values)
    : PiecewiseField(std::move(mesh), layout, components) {
  if (values.size() != values_.size()) {
    std::ostringstream msg;
    msg << "field: expected " << values_.size() << " values for layout " << to_string(layout_)
        << ", got " << values.size();
    throw std::invalid_argument(msg.str());
  }
  values_ = std::move(values);
}

std::size_t PiecewiseField::entities() const {
  return layout_ == Layout::vertex ? mesh_->num_vertices() : mesh_->num_triangles();
}

double PiecewiseField::norm_at(std::size_t entity) const {
  double s = 0.0;
  for (double v : at(entity)) s += v * v;
  return std::sqrt(s);
}

void PiecewiseField::require_finite(const char* what) const {
  for (double v : values_)
    if (!std::isfinite(v)) throw std::domain_error(std::string(what) + ": non-finite field entry");
}

void PiecewiseField::require_layout(Layout expected, const char* what) const {
  if (layout_ != expected)
    throw std::invalid_argument(std::string(what) + ": expected " + to_string(expected) + " layout, got " +
                                to_string(layout_));
}

void PiecewiseField::dump(std::ostream& os) const {
  os << "vws-field v1 " << to_string(layout_) << ' ' << mesh_->resolution() << ' ' << N_ << '\n';
  os.precision(17);
  const std::size_t n = entities();
  for (std::size_t e = 0; e < n; ++e) {
    const auto block = at(e);
    for (std::size_t k = 0; k < block.size(); ++k) {
      if (k) os << ' ';
      os << block[k];
    }
    os << '\n';
  }
}

PiecewiseField PiecewiseField::load(std::istream& is, MeshPtr mesh) {
  std::string magic, version, layout_name;
  int M = 0, N = 0;
  if (!(is >> magic >> version >> layout_name >> M >> N) || magic != "vws-field" || version != "v1")
    throw std::invalid_argument("field load: bad header");
  if (M != mesh->resolution()) throw std::invalid_argument("field load: resolution does not match mesh");
  PiecewiseField f(std::move(mesh), layout_from_string(layout_name), N);
  for (double& v : f.values_)
    if (!(is >> v)) throw std::invalid_argument("field load: truncated record list");
  std::string extra;
  if (is >> extra) throw std::invalid_argument("field load: trailing data");
  return f;
}

PiecewiseField interpolate(const MeshPtr& mesh, const std::function<double(Point)>& fn) {
  PiecewiseField u(mesh, Layout::vertex, 1);
  for (std::size_t v = 0; v < mesh->num_vertices(); ++v) u[v] = fn(mesh->vertices()[v]);
  return u;
}

PiecewiseField sample_scalar(const MeshPtr& mesh, const std::function<double(Point)>& fn) {
  PiecewiseField w(mesh, Layout::triangle_scalar, 1);
  for (std::size_t t = 0; t < mesh->num_triangles(); ++t) w[t] = fn(mesh->centroid(static_cast<int>(t)));
  return w;
}

PiecewiseField sample_vector(const MeshPtr& mesh, int N,
                             const std::function<void(Point, std::span<double>)>& fn) {
  PiecewiseField g(mesh, Layout::triangle_vector, N);
  for (std::size_t t = 0; t < mesh->num_triangles(); ++t) fn(mesh->centroid(static_cast<int>(t)), g.at(t));
  return g;
}

PiecewiseField constant_scalar(const MeshPtr& mesh, double value) {
  return PiecewiseField(mesh, Layout::triangle_scalar, 1, std::vector<double>(mesh->num_triangles(), value));
}

void zero_boundary(PiecewiseField& u) {
  u.require_layout(Layout::vertex, "zero_boundary");
  const auto& flags = u.mesh().boundary_flags();
  for (std::size_t v = 0; v < flags.size(); ++v)
    if (flags[v])
      for (double& x : u.at(v)) x = 0.0;
}

PiecewiseField gradient(const PiecewiseField& u) {
  u.require_layout(Layout::vertex, "gradient");
  const TriMesh& mesh = u.mesh();
  const int N = u.components();
  PiecewiseField g(u.mesh_ptr(), Layout::triangle_vector, N);
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles()[t];
    const auto& gb = mesh.basis_gradients(static_cast<int>(t));
    auto out = g.at(t);
    for (int a = 0; a < N; ++a) {
      double gx = 0.0, gy = 0.0;
      for (int k = 0; k < 3; ++k) {
        const double val = u.at(static_cast<std::size_t>(tri[k]))[a];
        gx += val * gb[k].x;
        gy += val * gb[k].y;
      }
      out[2 * a] = gx;
      out[2 * a + 1] = gy;
    }
  }
  return g;
}

PiecewiseField pointwise_norm(const PiecewiseField& g) {
  if (g.layout() == Layout::vertex) throw std::invalid_argument("pointwise_norm: triangle layout expected");
  PiecewiseField out(g.mesh_ptr(), Layout::triangle_scalar, 1);
  for (std::size_t t = 0; t < g.entities(); ++t) out[t] = g.norm_at(t);
  return out;
}

double weighted_power_integral(const PiecewiseField& g, const PiecewiseField& w, double p) {
  if (g.layout() == Layout::vertex) throw std::invalid_argument("weighted integral: triangle layout expected");
  w.require_layout(Layout::triangle_scalar, "weighted integral weight");
  if (w.mesh_ptr() != g.mesh_ptr() && w.entities() != g.entities())
    throw std::invalid_argument("weighted integral: fields live on different meshes");
  if (!(p > 0.0)) throw std::invalid_argument("weighted integral: exponent must be positive");
  const TriMesh& mesh = g.mesh();
  double sum = 0.0;
  for (std::size_t t = 0; t < g.entities(); ++t) {
    const double n = g.norm_at(t);
    sum += std::pow(n, p) * w[t] * mesh.area(static_cast<int>(t));
  }
  return sum;
}

double power_integral(const PiecewiseField& g, double p) {
  return weighted_power_integral(g, constant_scalar(g.mesh_ptr(), 1.0), p);
}

double weighted_lp_norm(const PiecewiseField& g, const PiecewiseField& w, double p) {
  w.require_layout(Layout::triangle_scalar, "weighted_lp_norm weight");
  for (double x : w.values())
    if (!(x > 0.0)) throw std::invalid_argument("weighted_lp_norm: weight must be positive");
  return std::pow(weighted_power_integral(g, w, p), 1.0 / p);
}

double lp_norm(const PiecewiseField& g, double p) {
  return weighted_lp_norm(g, constant_scalar(g.mesh_ptr(), 1.0), p);
}

}  // namespace vws
