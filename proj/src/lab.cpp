#include "vws/lab.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "vws/parallel.hpp"
#include "vws/weights.hpp"

namespace vws {

namespace {

constexpr double pi = std::numbers::pi;

Point point_param(const nlohmann::json& params, const char* key, Point fallback) {
  if (!params.contains(key)) return fallback;
  const auto& v = params.at(key);
  if (!v.is_array() || v.size() != 2) throw std::invalid_argument(std::string("parameter '") + key + "' must be [x, y]");
  return {v[0].get<double>(), v[1].get<double>()};
}

void check_keys(const nlohmann::json& params, std::initializer_list<const char*> allowed, const std::string& what) {
  if (params.is_null()) return;
  if (!params.is_object()) throw std::invalid_argument(what + ": parameters must be an object");
  for (const auto& [key, value] : params.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
      throw std::invalid_argument(what + ": unknown parameter '" + key + "'");
  }
}

double bump(Point x, Point c, double r) {
  const double s = (distance(x, c) / r);
  if (s >= 1.0) return 0.0;
  const double t = 1.0 - s * s;
  return t * t;
}

}  // namespace

PiecewiseField make_rhs(const std::string& id, const nlohmann::json& raw, const MeshPtr& mesh, int N) {
  const nlohmann::json params = raw.is_null() ? nlohmann::json::object() : raw;
  const std::size_t n2 = static_cast<std::size_t>(2 * N);
  if (id == "zero") {
    check_keys(params, {}, "rhs zero");
    return PiecewiseField(mesh, Layout::triangle_vector, N);
  }
  if (id == "grad_sin") {
    check_keys(params, {"amplitude"}, "rhs grad_sin");
    const double amp = params.value("amplitude", 1.0);
    return sample_vector(mesh, N, [&](Point x, std::span<double> out) {
      for (int a = 0; a < N; ++a) {
        out[static_cast<std::size_t>(2 * a)] = amp * pi * std::cos(pi * x.x) * std::sin(pi * x.y);
        out[static_cast<std::size_t>(2 * a + 1)] = amp * pi * std::sin(pi * x.x) * std::cos(pi * x.y);
      }
    });
  }
  if (id == "smooth") {
    check_keys(params, {"amplitude"}, "rhs smooth");
    const double amp = params.value("amplitude", 1.0);
    return sample_vector(mesh, N, [&](Point x, std::span<double> out) {
      for (int a = 0; a < N; ++a) {
        out[static_cast<std::size_t>(2 * a)] = amp * (a + 1) * x.y * std::cos(pi * x.x);
        out[static_cast<std::size_t>(2 * a + 1)] = amp * (a + 1) * (std::sin(pi * x.y) + x.x);
      }
    });
  }
  if (id == "spike") {
    check_keys(params, {"height", "center", "width", "direction"}, "rhs spike");
    const double height = params.value("height", 100.0);
    const double width = params.value("width", 0.25);
    const Point c = point_param(params, "center", {0.5, 0.5});
    std::vector<double> dir(n2, 0.0);
    dir[0] = 1.0;
    if (params.contains("direction")) dir = params.at("direction").get<std::vector<double>>();
    if (dir.size() != n2) throw std::invalid_argument("rhs spike: direction must have 2N entries");
    if (!(width > 0.0)) throw std::invalid_argument("rhs spike: width must be positive");
    return sample_vector(mesh, N, [&](Point x, std::span<double> out) {
      const bool inside = std::abs(x.x - c.x) < 0.5 * width && std::abs(x.y - c.y) < 0.5 * width;
      for (std::size_t k = 0; k < n2; ++k) out[k] = inside ? height * dir[k] : 0.0;
    });
  }
  if (id == "rough_random") {
    check_keys(params, {"seed", "blocks"}, "rhs rough_random");
    const auto seed = params.value("seed", std::uint64_t{1});
    const int blocks = params.value("blocks", 16);
    if (blocks < 1) throw std::invalid_argument("rhs rough_random: blocks must be positive");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    std::vector<double> table(static_cast<std::size_t>(blocks * blocks) * n2);
    for (double& v : table) v = normal(rng);
    return sample_vector(mesh, N, [&](Point x, std::span<double> out) {
      const int bi = std::clamp(static_cast<int>(std::floor(x.x * blocks)), 0, blocks - 1);
      const int bj = std::clamp(static_cast<int>(std::floor(x.y * blocks)), 0, blocks - 1);
      const std::size_t base = static_cast<std::size_t>(bj * blocks + bi) * n2;
      for (std::size_t k = 0; k < n2; ++k) out[k] = table[base + k];
    });
  }
  throw std::invalid_argument("unknown rhs recipe '" + id + "'");
}

std::vector<std::string> rhs_registry_ids() { return {"zero", "grad_sin", "smooth", "spike", "rough_random"}; }

PiecewiseField make_weight(const std::string& id, const nlohmann::json& raw, const MeshPtr& mesh) {
  const nlohmann::json params = raw.is_null() ? nlohmann::json::object() : raw;
  if (id == "one") {
    check_keys(params, {}, "weight one");
    return constant_scalar(mesh, 1.0);
  }
  if (id == "power") {
    check_keys(params, {"center", "alpha"}, "weight power");
    return power_weight(mesh, point_param(params, "center", {0.5, 0.5}), params.value("alpha", 0.5));
  }
  if (id == "step") {
    check_keys(params, {"low", "high"}, "weight step");
    const double lo = params.value("low", 1.0), hi = params.value("high", 4.0);
    if (!(lo > 0.0 && hi > 0.0)) throw std::invalid_argument("weight step: values must be positive");
    return sample_scalar(mesh, [&](Point x) { return x.x < 0.5 ? lo : hi; });
  }
  if (id == "spike_maximal") {
    check_keys(params, {"height", "width", "center", "exponent"}, "weight spike_maximal");
    nlohmann::json spike = nlohmann::json::object();
    for (const char* key : {"height", "width", "center"})
      if (params.contains(key)) spike[key] = params.at(key);
    return weight_from_maximal(make_rhs("spike", spike, mesh, 1), params.value("exponent", -0.5));
  }
  throw std::invalid_argument("unknown weight recipe '" + id + "'");
}

std::vector<std::string> weight_registry_ids() { return {"one", "power", "step", "spike_maximal"}; }

PiecewiseField random_zero_boundary_field(const MeshPtr& mesh, std::uint64_t seed, int N) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  struct Bump {
    Point c;
    double r, amp;
  };
  PiecewiseField g(mesh, Layout::vertex, N);
  for (int a = 0; a < N; ++a) {
    double modes[4][4];
    for (auto& row : modes)
      for (double& m : row) m = unit(rng);
    std::vector<Bump> bumps(3);
    for (auto& b : bumps) {
      b.r = 0.1 + 0.05 * (unit(rng) + 1.0);
      b.c = {0.5 + (0.5 - b.r) * unit(rng), 0.5 + (0.5 - b.r) * unit(rng)};
      b.amp = 2.0 * unit(rng);
    }
    for (std::size_t v = 0; v < mesh->num_vertices(); ++v) {
      const Point x = mesh->vertices()[v];
      double s = 0.0;
      for (int k = 0; k < 4; ++k)
        for (int l = 0; l < 4; ++l) s += modes[k][l] * std::sin((k + 1) * pi * x.x) * std::sin((l + 1) * pi * x.y) / (k + l + 2);
      for (const auto& b : bumps) s += b.amp * bump(x, b.c, b.r);
      g.at(v)[static_cast<std::size_t>(a)] = s;
    }
  }
  zero_boundary(g);
  return g;
}

Manufactured sine_solution(double amplitude) {
  return {[amplitude](Point x) { return amplitude * std::sin(pi * x.x) * std::sin(pi * x.y); },
          [amplitude](Point x) {
            return Point{amplitude * pi * std::cos(pi * x.x) * std::sin(pi * x.y),
                         amplitude * pi * std::sin(pi * x.x) * std::cos(pi * x.y)};
          }};
}

PiecewiseField manufactured_rhs(const OperatorSpec& spec, const MeshPtr& mesh, const Manufactured& sol) {
  if (spec.N != 1) throw std::invalid_argument("manufactured_rhs: scalar operators only");
  return sample_vector(mesh, 1, [&](Point x, std::span<double> out) {
    const Point g = sol.grad(x);
    Grad eta(2, 1);
    eta << g.x, g.y;
    const Grad a = spec(x, eta);
    out[0] = a(0, 0);
    out[1] = a(1, 0);
  });
}

double h1_error(const PiecewiseField& u, const Manufactured& sol) {
  u.require_layout(Layout::vertex, "h1_error");
  const PiecewiseField grad = gradient(u);
  const TriMesh& mesh = u.mesh();
  double sum = 0.0;
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles()[t];
    const auto g = grad.at(t);
    double local = 0.0;
    for (int e = 0; e < 3; ++e) {
      const Point a = mesh.vertices()[static_cast<std::size_t>(tri[e])];
      const Point b = mesh.vertices()[static_cast<std::size_t>(tri[(e + 1) % 3])];
      const Point exact = sol.grad(0.5 * (a + b));
      local += (g[0] - exact.x) * (g[0] - exact.x) + (g[1] - exact.y) * (g[1] - exact.y);
    }
    sum += mesh.area(static_cast<int>(t)) * local / 3.0;
  }
  return std::sqrt(sum);
}

std::vector<EstimateReport> verify_linear_weighted(const OperatorSpec& spec, const std::vector<NamedRecipe>& fs,
                                                   const std::vector<NamedRecipe>& ws, double p,
                                                   const std::vector<int>& ladder, const LinearOptions& options) {
  if (ladder.empty()) throw std::invalid_argument("verify_linear_weighted: empty mesh ladder");
  std::vector<EstimateReport> out;
  for (int M : ladder) {
    const MeshPtr mesh = build_unit_square_mesh(M);
    const LinearSystem sys(sample_target(spec, mesh), options);
    std::vector<PiecewiseField> weights;
    std::vector<double> aps;
    for (const auto& w : ws) {
      weights.push_back(make_weight(w.id, w.params, mesh));
      aps.push_back(ap_constant(weights.back(), p).ap_constant);
    }
    for (const auto& fr : fs) {
      const PiecewiseField f = make_rhs(fr.id, fr.params, mesh, spec.N);
      SolveReport rep;
      PiecewiseField v(mesh, Layout::vertex, spec.N);
      try {
        v = sys.solve(sys.load(Rhs::field(f)), rep);
      } catch (const std::exception& e) {
        std::ostringstream msg;
        msg << "verify_linear_weighted: solve failed for f = " << fr.id << " at M = " << M << ": " << e.what();
        throw std::runtime_error(msg.str());
      }
      const PiecewiseField gv = gradient(v);
      for (std::size_t i = 0; i < ws.size(); ++i) {
        nlohmann::json ctx{{"M", M},
                           {"p", p},
                           {"operator", spec.id},
                           {"operator_kind", to_string(spec.kind)},
                           {"f", {{"id", fr.id}, {"params", fr.params}}},
                           {"weight", {{"id", ws[i].id}, {"params", ws[i].params}}},
                           {"ap", aps[i]},
                           {"solver", rep.solver},
                           {"relative_residual", rep.relative_residual}};
        out.push_back(make_estimate("keyest", weighted_power_integral(gv, weights[i], p),
                                    weighted_power_integral(f, weights[i], p), std::move(ctx)));
      }
    }
  }
  return out;
}

EstimateReport verify_local_interior(const PiecewiseField& A, const PiecewiseField& f, const PiecewiseField& u,
                                     Ball ball, const PiecewiseField& w, double p, double q_tilde) {
  A.require_layout(Layout::triangle_tensor, "verify_local_interior");
  f.require_layout(Layout::triangle_vector, "verify_local_interior");
  u.require_layout(Layout::vertex, "verify_local_interior");
  require_positive_weight(w, "verify_local_interior");
  if (!(ball.radius > 0.0)) throw std::invalid_argument("verify_local_interior: radius must be positive");
  const TriMesh& mesh = u.mesh();
  for (int k = 0; k < 32; ++k) {
    const double th = 2.0 * pi * k / 32.0;
    const Point x{ball.center.x + 2.0 * ball.radius * std::cos(th), ball.center.y + 2.0 * ball.radius * std::sin(th)};
    if (mesh.locate(x) < 0) throw std::invalid_argument("verify_local_interior: 2B leaves the domain");
  }
  const PiecewiseField gu = gradient(u);
  const int N = u.components();
  const Tensor A0 = to_tensor(A.at(static_cast<std::size_t>(std::max(0, mesh.locate(ball.center)))), N);
  double b_meas = 0, b_lhs = 0, d_meas = 0, d_f = 0, d_w = 0, d_u = 0, osc = 0;
  int in_b = 0;
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const double r = distance(mesh.centroid(static_cast<int>(t)), ball.center);
    const double area = mesh.area(static_cast<int>(t));
    if (r < ball.radius) {
      ++in_b;
      b_meas += area;
      b_lhs += std::pow(gu.norm_at(t), p) * w[t] * area;
    }
    if (r < 2.0 * ball.radius) {
      d_meas += area;
      d_f += std::pow(f.norm_at(t), p) * w[t] * area;
      d_w += w[t] * area;
      d_u += std::pow(gu.norm_at(t), q_tilde) * area;
      osc = std::max(osc, (to_tensor(A.at(t), N) - A0).norm());
    }
  }
  if (in_b < 4) throw std::invalid_argument("verify_local_interior: ball covers fewer than 4 triangles");
  const double lhs = std::pow(b_lhs / b_meas, 1.0 / p);
  const double rhs = std::pow(d_f / d_meas, 1.0 / p) + std::pow(d_w / d_meas, 1.0 / p) * std::pow(d_u / d_meas, 1.0 / q_tilde);
  nlohmann::json ctx{{"M", mesh.resolution()},
                     {"p", p},
                     {"q_tilde", q_tilde},
                     {"ball", {{"center", {ball.center.x, ball.center.y}}, {"radius", ball.radius}}},
                     {"triangles_in_ball", in_b},
                     {"oscillation", osc},
                     {"ap", ap_constant(w, p).ap_constant}};
  return make_estimate("unlocal", lhs, rhs, std::move(ctx));
}

EstimateReport apriori_report(const PiecewiseField& u, const PiecewiseField& f, double q) {
  const PiecewiseField ones = constant_scalar(u.mesh_ptr(), 1.0);
  nlohmann::json ctx{{"M", u.mesh().resolution()}, {"q", q}, {"weight", "one"}};
  return make_estimate("apriori", weighted_power_integral(gradient(u), ones, q),
                       1.0 + weighted_power_integral(f, ones, q), std::move(ctx));
}

EstimateReport apriori3_report(const PiecewiseField& u, const PiecewiseField& f, const PiecewiseField& w, double p) {
  require_positive_weight(w, "apriori3_report");
  nlohmann::json ctx{{"M", u.mesh().resolution()}, {"p", p}, {"ap", ap_constant(w, p).ap_constant}};
  return make_estimate("apriori3", weighted_power_integral(gradient(u), w, p), 1.0 + weighted_power_integral(f, w, p),
                       std::move(ctx));
}

EstimateReport apriori2_report(const PiecewiseField& u, const PiecewiseField& f, double q) {
  if (!(q > 1.0 && q <= 2.0)) throw std::invalid_argument("apriori2_report: q must lie in (1, 2]");
  const PiecewiseField w = weight_from_maximal(f, q - 2.0);
  const PiecewiseField ones = constant_scalar(u.mesh_ptr(), 1.0);
  nlohmann::json ctx{{"M", u.mesh().resolution()},
                     {"q", q},
                     {"weight", "(1+Mf)^(q-2)"},
                     {"a2", ap_constant(w, 2.0).ap_constant}};
  return make_estimate("apriori2", weighted_power_integral(gradient(u), w, 2.0),
                       1.0 + weighted_power_integral(f, ones, q), std::move(ctx));
}

EstimateReport verify_duality_estimate(const OperatorSpec& spec, const PiecewiseField& f, double q,
                                       const NonlinearOptions& options) {
  SolveReport rep;
  const PiecewiseField u = solve_nonlinear(spec, Rhs::field(f), f.mesh_ptr(), rep, options);
  if (!rep.converged) {
    std::ostringstream msg;
    msg << "verify_duality_estimate: " << spec.id << " did not converge (" << rep.status << ", residual "
        << rep.relative_residual << ")";
    throw std::runtime_error(msg.str());
  }
  EstimateReport r = apriori2_report(u, f, q);
  r.context["operator"] = spec.id;
  r.context["iterations"] = rep.iterations;
  return r;
}

BitingDecomposition biting_sets(const std::vector<PiecewiseField>& sequence, int j_max) {
  if (sequence.empty()) throw std::invalid_argument("biting_sets: empty sequence");
  if (j_max < 1) throw std::invalid_argument("biting_sets: j_max must be >= 1");
  const TriMesh& mesh = sequence.front().mesh();
  const std::size_t nt = mesh.num_triangles();
  BitingDecomposition out;
  std::vector<double> env(nt, 0.0);
  for (const auto& v : sequence) {
    v.require_layout(Layout::triangle_scalar, "biting_sets");
    if (v.entities() != nt) throw std::invalid_argument("biting_sets: fields live on different meshes");
    double l1 = 0.0;
    for (std::size_t t = 0; t < nt; ++t) {
      if (!(v[t] >= 0.0) || !std::isfinite(v[t])) throw std::invalid_argument("biting_sets: values must be finite and nonnegative");
      env[t] = std::max(env[t], v[t]);
      l1 += v[t] * mesh.area(static_cast<int>(t));
    }
    out.l1_bound = std::max(out.l1_bound, l1);
  }
  std::vector<std::size_t> order(nt);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return env[a] > env[b]; });
  for (std::size_t t : order) out.total_measure += mesh.area(static_cast<int>(t));

  for (int j = 1; j <= j_max; ++j) {
    const double budget = std::ldexp(out.total_measure, -j);
    double threshold = env[order.front()], excluded = 0.0, before = 0.0;
    std::size_t i = 0;
    while (i < nt && before <= budget) {
      threshold = env[order[i]];
      excluded = before;
      while (i < nt && env[order[i]] == threshold) before += mesh.area(static_cast<int>(order[i++]));
    }
    std::vector<char> set(nt, 0);
    for (std::size_t t = 0; t < nt; ++t) set[t] = env[t] <= threshold;
    out.thresholds.push_back(threshold);
    out.sets.push_back(std::move(set));
    out.excluded.push_back(excluded);
    out.budgets.push_back(budget);
  }
  return out;
}

DivCurlRecipe make_divcurl_recipe(const std::string& id) {
  DivCurlRecipe r;
  r.id = id;
  if (id == "positive_trig") {
    // frequency (k + 1/2) pi keeps the oscillation out of phase with the square
    r.a_k = [](Point x, int k) {
      const double w = (k + 0.5) * pi;
      return Point{x.y + std::cos(w * x.x) * std::sin(w * x.y), x.x + std::sin(w * x.x) * std::cos(w * x.y)};
    };
    r.b_k = [](Point x, int k) {
      const double w = (k + 0.5) * pi;
      return Point{1.0 - std::cos(w * x.x) * std::sin(w * x.y), 1.0 + std::sin(w * x.x) * std::cos(w * x.y)};
    };
    r.a = [](Point x) { return Point{x.y, x.x}; };
    r.b = [](Point) { return Point{1.0, 1.0}; };
  } else if (id == "orthogonal") {
    r.a_k = [](Point x, int k) { return Point{std::cos(k * pi * x.x), 0.0}; };
    r.b_k = [](Point x, int k) { return Point{0.0, std::cos(k * pi * x.x)}; };
    r.a = r.b = [](Point) { return Point{0.0, 0.0}; };
  } else if (id == "constant") {
    r.a_k = [](Point x, int) { return Point{x.y, x.x}; };
    r.b_k = [](Point, int) { return Point{1.0, 1.0}; };
    r.a = [](Point x) { return Point{x.y, x.x}; };
    r.b = [](Point) { return Point{1.0, 1.0}; };
  } else if (id == "negative_control") {
    r.a_k = r.b_k = [](Point x, int k) { return Point{std::cos(k * pi * x.x), 0.0}; };
    r.a = r.b = [](Point) { return Point{0.0, 0.0}; };
  } else {
    throw std::invalid_argument("unknown div-curl recipe '" + id + "'");
  }
  return r;
}

std::vector<std::string> divcurl_registry_ids() { return {"positive_trig", "orthogonal", "constant", "negative_control"}; }

std::vector<BasketFunction> default_basket() {
  return {{"one", [](Point) { return 1.0; }},
          {"x1", [](Point x) { return x.x; }},
          {"x2", [](Point x) { return x.y; }},
          {"x1x2", [](Point x) { return x.x * x.y; }},
          {"bump", [](Point x) {
             const double s = distance(x, {0.5, 0.5}) / 0.4;
             return s < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - s * s)) : 0.0;
           }}};
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("loglog_slope: need two or more points");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]), ly = std::log(std::max(y[i], 1e-300));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

DivCurlTable divcurl_experiment(const DivCurlRecipe& recipe, const PiecewiseField& w,
                                const std::vector<BasketFunction>& basket, const std::vector<int>& ks, int j_max) {
  require_positive_weight(w, "divcurl_experiment");
  if (ks.empty()) throw std::invalid_argument("divcurl_experiment: empty k ladder");
  const MeshPtr& mesh = w.mesh_ptr();
  const std::size_t nt = mesh->num_triangles();
  DivCurlTable table;
  table.recipe = recipe.id;
  table.M = mesh->resolution();
  table.ks = ks;

  std::vector<double> area(nt), limit(nt);
  std::vector<Point> centroid(nt);
  for (std::size_t t = 0; t < nt; ++t) {
    area[t] = mesh->area(static_cast<int>(t));
    centroid[t] = mesh->centroid(static_cast<int>(t));
    const Point a = recipe.a(centroid[t]), b = recipe.b(centroid[t]);
    limit[t] = (a.x * b.x + a.y * b.y) * w[t];
  }
  std::vector<std::vector<double>> phis;
  for (const auto& f : basket) {
    std::vector<double> v(nt);
    for (std::size_t t = 0; t < nt; ++t) v[t] = f.phi(centroid[t]);
    phis.push_back(std::move(v));
  }

  std::vector<std::vector<double>> products(ks.size(), std::vector<double>(nt));
  table.divergence_probe.assign(ks.size(), 0.0);
  parallel_for(ks.size(), [&](std::size_t i) {
    const int k = ks[i];
    double probe = 0.0;
    for (std::size_t t = 0; t < nt; ++t) {
      const Point x = centroid[t];
      const Point a = recipe.a_k(x, k), b = recipe.b_k(x, k);
      products[i][t] = (a.x * b.x + a.y * b.y) * w[t];
      const Point dc{std::cos(k * pi * x.x) * std::sin(pi * x.y), std::sin(k * pi * x.x) * std::cos(pi * x.y) / k};
      probe += (b.x * dc.x + b.y * dc.y) * area[t];
    }
    table.divergence_probe[i] = probe;
  });

  std::vector<PiecewiseField> envelope_seq;
  for (const auto& prod : products) {
    PiecewiseField v(mesh, Layout::triangle_scalar, 1);
    for (std::size_t t = 0; t < nt; ++t) v[t] = std::abs(prod[t]);
    envelope_seq.push_back(std::move(v));
  }
  table.biting = biting_sets(envelope_seq, j_max);

  table.max_error.assign(ks.size(), 0.0);
  for (std::size_t i = 0; i < ks.size(); ++i) {
    for (std::size_t b = 0; b < basket.size(); ++b) {
      for (int j = 0; j <= j_max; ++j) {
        const std::vector<char>* set = j == 0 ? nullptr : &table.biting.sets[static_cast<std::size_t>(j - 1)];
        double pairing = 0, lim = 0, err = 0;
        for (std::size_t t = 0; t < nt; ++t) {
          if (set && !(*set)[t]) continue;
          const double m = phis[b][t] * area[t];
          pairing += products[i][t] * m;
          lim += limit[t] * m;
          err += (products[i][t] - limit[t]) * m;
        }
        table.rows.push_back({recipe.id, ks[i], table.M, basket[b].id, j, pairing, lim, err});
        if (j == 0) table.max_error[i] = std::max(table.max_error[i], std::abs(err));
      }
    }
  }
  if (ks.size() >= 2) {
    std::vector<double> kd(ks.begin(), ks.end());
    table.slope = loglog_slope(kd, table.max_error);
  }
  double worst_probe = 0.0;
  for (double v : table.divergence_probe) worst_probe = std::max(worst_probe, std::abs(v));
  table.divergence_controlled = worst_probe <= 0.05;
  table.flagged_negative = !table.divergence_controlled;
  return table;
}

std::vector<DiracRow> dirac_experiment(const OperatorSpec& spec, Point x0, const std::vector<int>& ladder, double q,
                                       const NonlinearOptions& options) {
  std::vector<DiracRow> rows;
  for (int M : ladder) {
    const MeshPtr mesh = build_unit_square_mesh(M);
    std::vector<double> dir(static_cast<std::size_t>(spec.N), 0.0);
    dir[0] = 1.0;
    DiracRow row;
    row.M = M;
    const PiecewiseField u = solve_nonlinear(spec, Rhs::functional(dirac_load(x0, *mesh, dir)), mesh, row.report, options);
    if (!row.report.converged) throw std::runtime_error("dirac_experiment: solve failed at M = " + std::to_string(M));
    const PiecewiseField g = gradient(u);
    row.norm_q = lp_norm(g, q);
    row.norm_2 = lp_norm(g, 2.0);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace vws
