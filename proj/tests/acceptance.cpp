// Acceptance run: one PASS/FAIL line per criterion, details indented below.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "vws/lab.hpp"
#include "vws/truncation.hpp"
#include "vws/weights.hpp"

using namespace vws;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "    failed: " << what << '\n';
    }
  }
};

double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  return v[static_cast<std::size_t>(q * static_cast<double>(v.size() - 1))];
}

std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string label(const std::string& id, const nlohmann::json& params) {
  return params.is_null() || params.empty() ? id : id + params.dump();
}

constexpr int kCorpus = 50;
const std::vector<double> kQuantiles{0.5, 0.75, 0.9};

void truncation_invariants(Outcome& out) {
  const MeshPtr mesh = build_unit_square_mesh(64);
  double corpus_C = 0.0, max_c = 0.0;
  std::size_t value_breaks = 0, gradient_breaks = 0, nesting_breaks = 0, boundary_breaks = 0, bound_breaks = 0;
  for (int s = 0; s < kCorpus; ++s) {
    const PiecewiseField g = random_zero_boundary_field(mesh, static_cast<std::uint64_t>(s + 1));
    const PiecewiseField grad = gradient(g);
    const PiecewiseField Mg = maximal_function(grad);
    std::vector<char> previous;
    for (double q : kQuantiles) {
      const double lambda = quantile(Mg.values(), q);
      const TruncationResult r = lipschitz_truncate(g, Mg, lambda);
      const PiecewiseField gl = gradient(r.g_lambda);
      const auto bad = r.bad_triangles();
      for (std::size_t v = 0; v < mesh->num_vertices(); ++v) {
        if (r.good_set[v] && r.g_lambda[v] != g[v]) ++value_breaks;
        if (mesh->is_boundary(static_cast<int>(v)) && r.g_lambda[v] != 0.0) ++boundary_breaks;
      }
      for (std::size_t t = 0; t < bad.size(); ++t) {
        if (!bad[t] && (gl.at(t)[0] != grad.at(t)[0] || gl.at(t)[1] != grad.at(t)[1])) ++gradient_breaks;
        if (bad[t] && gl.norm_at(t) > r.geometric_factor * r.lipschitz_constant_used * (1.0 + 1e-12)) ++bound_breaks;
      }
      if (!previous.empty())
        for (std::size_t v = 0; v < previous.size(); ++v)
          if (previous[v] && !r.good_set[v]) ++nesting_breaks;
      previous = r.good_set;
      corpus_C = std::max(corpus_C, r.measured_gradient_bound / lambda);
      max_c = std::max(max_c, r.c_used);
    }
  }
  out.detail << "    M=64 corpus=" << kCorpus << " quantiles=0.5,0.75,0.9 corpus C=" << fmt(corpus_C)
             << " max c_used=" << fmt(max_c) << '\n';
  out.require(value_breaks == 0, "good-vertex values differ (" + std::to_string(value_breaks) + ")");
  out.require(gradient_breaks == 0, "all-good gradients differ (" + std::to_string(gradient_breaks) + ")");
  out.require(boundary_breaks == 0, "boundary values changed");
  out.require(bound_breaks == 0, "bad-triangle gradient above the certified bound");
  out.require(nesting_breaks == 0, "good sets not nested in lambda");
  out.require(corpus_C <= 64.0 * max_c, "corpus constant above 64 c_used");
}

void weighted_truncation(Outcome& out) {
  const std::vector<NamedRecipe> weights{{"one", {}},
                                         {"power", {{"center", {0.5, 0.5}}, {"alpha", 0.5}}},
                                         {"spike_maximal", {{"exponent", -0.5}}}};
  std::vector<double> constants;
  for (int M : {32, 64}) {
    const MeshPtr mesh = build_unit_square_mesh(M);
    std::vector<PiecewiseField> ws;
    for (const auto& w : weights) ws.push_back(make_weight(w.id, w.params, mesh));
    double C = 0.0;
    bool finite = true;
    for (int s = 0; s < kCorpus; ++s) {
      const PiecewiseField g = random_zero_boundary_field(mesh, static_cast<std::uint64_t>(s + 1));
      const PiecewiseField Mg = maximal_function(gradient(g));
      for (double q : kQuantiles) {
        const TruncationResult r = lipschitz_truncate(g, Mg, quantile(Mg.values(), q));
        for (const auto& w : ws) {
          const auto [first, second] = verify_truncation_weighted(g, r, w, 2.0);
          for (const EstimateReport* e : {&first, &second}) {
            if (e->sentinel()) continue;
            finite = finite && std::isfinite(e->ratio);
            C = std::max(C, e->ratio);
          }
        }
      }
    }
    out.require(finite, "infinite ratio at M=" + std::to_string(M));
    constants.push_back(C);
    out.detail << "    M=" << M << " constant=" << fmt(C) << '\n';
  }
  const double spread = *std::max_element(constants.begin(), constants.end()) /
                        *std::min_element(constants.begin(), constants.end());
  out.detail << "    variation across M=" << fmt(spread) << '\n';
  out.require(spread <= 2.0, "constant varies more than 2x across M");
}

void linear_convergence(Outcome& out) {
  const std::vector<std::pair<std::string, nlohmann::json>> specs{
      {"linear_identity", {}}, {"linear_diag", {{"d1", 1.0}, {"d2", 2.0}}}, {"linear_smooth", {}}};
  const Manufactured sol = sine_solution();
  for (const auto& [id, params] : specs) {
    const OperatorSpec spec = make_operator(id, params);
    std::vector<double> errs;
    for (int M : {16, 32, 64, 128}) {
      const MeshPtr mesh = build_unit_square_mesh(M);
      SolveReport rep;
      const PiecewiseField u =
          solve_linear(sample_target(spec, mesh), Rhs::field(manufactured_rhs(spec, mesh, sol)), rep, LinearOptions{1e-12, 20000});
      errs.push_back(h1_error(u, sol));
    }
    out.detail << "    " << id << " errors";
    for (double e : errs) out.detail << ' ' << fmt(e);
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < errs.size(); ++k) worst = std::min(worst, std::log2(errs[k - 1] / errs[k]));
    out.detail << " min rate=" << fmt(worst) << '\n';
    out.require(worst >= 0.9, id + " rate below 0.9");
  }
}

void keyest(Outcome& out) {
  const std::vector<NamedRecipe> fs{{"grad_sin", {}}, {"smooth", {}}, {"spike", {}}, {"rough_random", {{"seed", 7}}}};
  const std::vector<NamedRecipe> ws{{"one", {}},
                                    {"power", {{"alpha", 0.5}}},
                                    {"step", {{"low", 1.0}, {"high", 4.0}}},
                                    {"spike_maximal", {{"exponent", -0.5}}}};
  const auto reports = verify_linear_weighted(make_operator("linear_identity"), fs, ws, 2.0, {16, 32, 64, 128},
                                              LinearOptions{1e-12, 20000});
  for (const auto& f : fs)
    for (const auto& w : ws) {
      double mx = 0.0, mn = std::numeric_limits<double>::infinity();
      bool finite = true;
      for (const auto& r : reports)
        if (r.context.at("f").at("id") == f.id && r.context.at("weight").at("id") == w.id) {
          finite = finite && std::isfinite(r.ratio);
          mx = std::max(mx, r.ratio);
          mn = std::min(mn, r.ratio);
          if (f.id == "grad_sin" && w.id == "one") out.require(r.ratio <= 1.05, "energy-identity ratio above 1.05");
        }
      out.detail << "    f=" << f.id << " w=" << w.id << " ratio " << fmt(mn) << ".." << fmt(mx)
                 << " variation=" << fmt(mx / mn) << '\n';
      out.require(finite, "non-finite ratio for " + f.id + "/" + w.id);
      out.require(mx / mn <= 2.0, "variation above 2 for " + f.id + "/" + w.id);
    }
}

void nonlinear_recovery(Outcome& out) {
  const std::vector<std::pair<std::string, nlohmann::json>> specs{{"prototype_smooth", {}},
                                                                  {"p_laplace_clamp", {{"p", 1.8}, {"mu", 0.5}}},
                                                                  {"p_laplace_clamp", {{"p", 2.5}, {"mu", 0.5}}}};
  for (const auto& [id, params] : specs) {
    const OperatorSpec spec = make_operator(id, params);
    for (double amp : {1.0, 30.0}) {
      const Manufactured sol = sine_solution(amp);
      std::vector<double> errs;
      for (int M : {32, 64}) {
        const MeshPtr mesh = build_unit_square_mesh(M);
        const PiecewiseField f = manufactured_rhs(spec, mesh, sol);
        SolveReport rep, tight_rep;
        NonlinearOptions opt;
        const PiecewiseField u = solve_nonlinear(spec, Rhs::field(f), mesh, rep, opt);
        NonlinearOptions tight;
        tight.tol = 1e-12;
        tight.max_iters = 1000;
        tight.initial_guess = u;
        const PiecewiseField ref = solve_nonlinear(spec, Rhs::field(f), mesh, tight_rep, tight);
        const double iteration_error = h1_seminorm_distance(u, ref);
        errs.push_back(h1_error(u, sol));
        out.detail << "    " << label(id, params) << " amp=" << amp << " M=" << M << " iters=" << rep.iterations
                   << " h1 error=" << fmt(errs.back()) << " iteration error=" << fmt(iteration_error) << '\n';
        out.require(rep.converged && rep.iterations <= 200, id + " did not converge within 200 iterations");
        out.require(tight_rep.converged, id + " reference solve did not converge");
        out.require(iteration_error <= 1e-6, id + " iteration error above 1e-6");
      }
      out.require(std::log2(errs[0] / errs[1]) >= 0.9, id + " discretization error not first order");
    }
  }
  for (const char* id : {"linear_identity", "linear_smooth", "linear_nonsymmetric"}) {
    const MeshPtr mesh = build_unit_square_mesh(32);
    SolveReport rep;
    (void)solve_nonlinear(make_operator(id), Rhs::field(make_rhs("smooth", {}, mesh)), mesh, rep);
    out.detail << "    " << id << " iterations=" << rep.iterations << " theta=" << rep.theta << '\n';
    out.require(rep.converged && rep.iterations == 1 && rep.halvings == 0, std::string(id) + " not one undamped iteration");
  }
}

void uniqueness(Outcome& out) {
  const MeshPtr mesh = build_unit_square_mesh(64);
  const PiecewiseField f = make_rhs("rough_random", {{"seed", 7}}, mesh);
  std::vector<std::pair<std::string, nlohmann::json>> specs;
  for (const auto& id : operator_registry_ids()) {
    if (id == "p_laplace_clamp") {
      specs.push_back({id, {{"p", 1.8}, {"mu", 0.5}}});
      specs.push_back({id, {{"p", 2.5}, {"mu", 0.5}}});
    } else {
      specs.push_back({id, nlohmann::json::object()});
    }
  }
  const NonlinearOptions base;
  const double bound = 10.0 * base.tol;
  for (const auto& [id, params] : specs) {
    const OperatorSpec spec = make_operator(id, params);
    if (!spec.strictly_monotone) continue;
    std::vector<PiecewiseField> us;
    for (const std::vector<double>& schedule : {std::vector<double>{0.5, 1.0, 2.0}, std::vector<double>{0.25, 1.5}})
      for (bool random_start : {false, true}) {
        // Degenerate specs contract slowly where the gradient is small.
        NonlinearOptions opt;
        opt.max_iters = 2000;
        opt.stagnation_window = 200;
        if (random_start) opt.initial_guess = random_zero_boundary_field(mesh, 99);
        us.push_back(approximation_route(spec, f, schedule, opt).u_final);
      }
    double d = 0.0;
    for (const auto& u : us) d = std::max(d, h1_seminorm_distance(u, us.front()));
    out.detail << "    " << id << label("", params) << " max distance=" << fmt(d) << '\n';
    out.require(d <= bound, id + " routes disagree");
  }
}

void duality(Outcome& out) {
  const OperatorSpec spec = make_operator("prototype_smooth");
  double mx = 0.0, mn = std::numeric_limits<double>::infinity();
  bool bitwise = true;
  for (int M : {32, 64, 128}) {
    const MeshPtr mesh = build_unit_square_mesh(M);
    for (double height : {10.0, 100.0, 1000.0}) {
      const PiecewiseField f = make_rhs("spike", {{"height", height}}, mesh);
      SolveReport rep;
      const PiecewiseField u = solve_nonlinear(spec, Rhs::field(f), mesh, rep);
      out.require(rep.converged, "solve failed at M=" + std::to_string(M));
      const EstimateReport r = apriori2_report(u, f, 1.5);
      mx = std::max(mx, r.ratio);
      mn = std::min(mn, r.ratio);
      const EstimateReport a = apriori_report(u, f, 2.0), b = apriori2_report(u, f, 2.0);
      bitwise = bitwise && a.lhs == b.lhs && a.rhs == b.rhs && a.ratio == b.ratio;
      out.detail << "    M=" << M << " height=" << height << " ratio=" << fmt(r.ratio) << '\n';
    }
  }
  out.detail << "    max/min=" << fmt(mx / mn) << " q=2 bitwise=" << (bitwise ? "yes" : "no") << '\n';
  out.require(mx / mn <= 3.0, "apriori2 ratio spread above 3");
  out.require(bitwise, "q=2 report differs from the unweighted one");
}

void dirac(Outcome& out) {
  for (const char* id : {"linear_identity", "prototype_rational"}) {
    const auto rows = dirac_experiment(make_operator(id), {0.5, 0.5}, {32, 64, 128}, 1.5);
    for (const auto& r : rows)
      out.detail << "    " << id << " M=" << r.M << " L1.5=" << fmt(r.norm_q) << " L2=" << fmt(r.norm_2) << '\n';
    const double change = std::abs(rows[2].norm_q - rows[1].norm_q) / rows[1].norm_q;
    out.require(change < 0.10, std::string(id) + " L^1.5 norm changes by 10% or more");
    for (std::size_t k = 1; k < rows.size(); ++k)
      out.require(rows[k].norm_2 >= 1.05 * rows[k - 1].norm_2, std::string(id) + " L^2 norm grows less than 5%");
  }
}

void divcurl(Outcome& out) {
  const MeshPtr mesh = build_unit_square_mesh(512);
  const std::vector<int> ks{8, 16, 32, 64};
  for (const auto& wr : std::vector<NamedRecipe>{{"one", {}}, {"power", {{"alpha", 0.5}}}}) {
    const PiecewiseField w = make_weight(wr.id, wr.params, mesh);
    const DivCurlTable pos = divcurl_experiment(make_divcurl_recipe("positive_trig"), w, default_basket(), ks, 6);
    const DivCurlTable neg = divcurl_experiment(make_divcurl_recipe("negative_control"), w, default_basket(), ks, 6);
    out.detail << "    w=" << wr.id << " positive slope=" << fmt(pos.slope) << " controlled=" << pos.divergence_controlled
               << " negative offset=" << fmt(neg.max_error.back()) << " flagged=" << neg.flagged_negative << '\n';
    out.require(pos.slope <= -0.8, "positive_trig slope above -0.8");
    out.require(pos.divergence_controlled && !pos.flagged_negative, "positive_trig not controlled");
    out.require(neg.flagged_negative, "negative control not flagged");
    if (wr.id == "one")
      for (double e : neg.max_error) out.require(std::abs(e - 0.5) <= 0.01, "negative-control offset off 1/2 by more than 2%");
    for (const DivCurlTable* t : {&pos, &neg})
      for (std::size_t j = 0; j < t->biting.excluded.size(); ++j)
        out.require(t->biting.excluded[j] <= std::ldexp(t->biting.total_measure, -static_cast<int>(j + 1)),
                    "biting set over budget at j=" + std::to_string(j + 1));
  }
}

void certificates(Outcome& out) {
  const OperatorSpec e = make_operator("prototype_exp");
  const double step = std::pow(10.0, 1.0 / SamplerConfig{}.magnitudes_per_decade);
  for (double eps : {0.1, 0.01, 0.001}) {
    const auto c = check_asymptotic(e, eps, AsymptoticCertificate::Mode::value);
    const double exact = std::log(1.0 / eps);
    out.detail << "    eps=" << eps << " k=" << fmt(c.k) << " ln(1/eps)=" << fmt(exact) << '\n';
    out.require(c.passed && c.k >= exact / step && c.k <= exact * step, "threshold off by more than one ladder step");
  }
  for (const char* id : {"linear_identity", "linear_diag", "linear_smooth", "linear_nonsymmetric"})
    for (double d : {0.05, 0.1, 0.2, 0.4}) out.require(check_algebra_bound(make_operator(id), d).C == 0.0, std::string(id) + " C != 0");
  const std::vector<std::pair<std::string, nlohmann::json>> nonlinear{{"prototype_rational", {}},
                                                                      {"prototype_smooth", {}},
                                                                      {"prototype_exp", {}},
                                                                      {"p_laplace_clamp", {{"p", 1.8}, {"mu", 0.5}}},
                                                                      {"p_laplace_clamp", {{"p", 2.5}, {"mu", 0.5}}}};
  for (const auto& [id, params] : nonlinear) {
    const OperatorSpec spec = make_operator(id, params);
    double last = std::numeric_limits<double>::infinity();
    out.detail << "    " << id << label("", params) << " C:";
    for (double d : {0.05, 0.1, 0.2, 0.4}) {
      const double C = check_algebra_bound(spec, d).C;
      out.detail << ' ' << fmt(C);
      out.require(C <= last, id + " C not nonincreasing in delta");
      last = C;
    }
    out.detail << '\n';
  }
}

}  // namespace

int main() {
  std::setvbuf(stdout, nullptr, _IONBF, 0);
  const std::vector<std::pair<const char*, std::function<void(Outcome&)>>> criteria{
      {"1 truncation invariants", truncation_invariants},
      {"2 weighted truncation stability", weighted_truncation},
      {"3 linear solver convergence", linear_convergence},
      {"4 weighted linear estimate", keyest},
      {"5 nonlinear recovery", nonlinear_recovery},
      {"6 uniqueness probe", uniqueness},
      {"7 duality estimate", duality},
      {"8 measure data", dirac},
      {"9 div-curl", divcurl},
      {"10 operator certificates", certificates}};
  int failures = 0;
  for (const auto& [name, body] : criteria) {
    Outcome out;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      body(out);
    } catch (const std::exception& ex) {
      out.pass = false;
      out.detail << "    exception: " << ex.what() << '\n';
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s criterion %s (%.1f s)\n%s", out.pass ? "PASS" : "FAIL", name, secs, out.detail.str().c_str());
    failures += !out.pass;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
