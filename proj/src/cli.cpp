#include "vws/cli.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include <openssl/evp.h>

#include "vws/truncation.hpp"
#include "vws/weights.hpp"

namespace fs = std::filesystem;

namespace vws::cli {

namespace {

constexpr const char* kVersion = "0.1.0";

std::string join(const std::vector<std::string>& parts, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? sep : "") + parts[i];
  return out;
}

// ---- config reading --------------------------------------------------------

class Reader {
 public:
  Reader(const nlohmann::json& j, std::string path, std::vector<std::string>& errors)
      : j_(j), path_(std::move(path)), errors_(errors) {
    if (!j_.is_object()) errors_.push_back(path_ + ": expected an object");
  }

  void allow(std::initializer_list<const char*> keys) {
    if (!j_.is_object()) return;
    for (const auto& [key, value] : j_.items())
      if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return key == k; }))
        errors_.push_back(where(key) + ": unknown key");
  }

  bool has(const char* key) const { return j_.is_object() && j_.contains(key); }
  const nlohmann::json& at(const char* key) const { return j_.at(key); }
  std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  template <class T>
  void get(const char* key, T& out) {
    if (!has(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      errors_.push_back(where(key) + ": wrong type (" + j_.at(key).dump() + ")");
    }
  }

  void recipe(const char* key, NamedRecipe& out) {
    if (!has(key)) return;
    Reader r(j_.at(key), where(key), errors_);
    r.allow({"id", "params"});
    r.get("id", out.id);
    out.params = nlohmann::json::object();
    if (r.has("params")) {
      if (!r.at("params").is_object()) errors_.push_back(r.where("params") + ": expected an object");
      else out.params = r.at("params");
    }
  }

  void recipes(const char* key, std::vector<NamedRecipe>& out) {
    if (!has(key)) return;
    if (!j_.at(key).is_array()) {
      errors_.push_back(where(key) + ": expected an array");
      return;
    }
    out.clear();
    for (std::size_t i = 0; i < j_.at(key).size(); ++i) {
      NamedRecipe n;
      Reader inner(j_.at(key)[i], where(key) + "[" + std::to_string(i) + "]", errors_);
      inner.allow({"id", "params"});
      inner.get("id", n.id);
      n.params = inner.has("params") ? inner.at("params") : nlohmann::json::object();
      out.push_back(std::move(n));
    }
  }

 private:
  const nlohmann::json& j_;
  std::string path_;
  std::vector<std::string>& errors_;
};

nlohmann::json recipe_json(const NamedRecipe& r) { return {{"id", r.id}, {"params", r.params}}; }

// ---- output ----------------------------------------------------------------

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

class Csv {
 public:
  explicit Csv(std::vector<std::string> header) : width_(header.size()) { line(header); }
  Csv& row(const std::vector<std::string>& cells) {
    if (cells.size() != width_) throw std::logic_error("csv row width mismatch");
    line(cells);
    return *this;
  }
  std::string str() const { return body_.str(); }

 private:
  void line(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) body_ << (i ? "," : "") << csv_field(cells[i]);
    body_ << '\n';
  }
  std::size_t width_;
  std::ostringstream body_;
};

class RunWriter {
 public:
  explicit RunWriter(fs::path dir) : dir_(std::move(dir)) {}
  void text(const std::string& name, const std::string& content) {
    std::ofstream os(dir_ / name, std::ios::binary);
    os << content;
    if (!os) throw std::runtime_error("cannot write " + (dir_ / name).string());
    files_.push_back(name);
  }
  void json(const std::string& name, const nlohmann::json& j) { text(name, j.dump(2) + "\n"); }
  void field(const std::string& name, const PiecewiseField& f) {
    std::ostringstream os;
    f.dump(os);
    text(name, os.str());
  }
  const std::vector<std::string>& files() const { return files_; }
  const fs::path& dir() const { return dir_; }

 private:
  fs::path dir_;
  std::vector<std::string> files_;
};

std::string timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

NonlinearOptions nonlinear_options(const ExperimentConfig& c) {
  NonlinearOptions o;
  o.tol = c.solver.tol;
  o.max_iters = c.solver.max_iters;
  o.theta = c.solver.theta;
  return o;
}

SamplerConfig sampler_for(const ExperimentConfig& c) {
  SamplerConfig s;
  s.seed = c.seed;
  return s;
}

double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  return v[static_cast<std::size_t>(q * static_cast<double>(v.size() - 1))];
}

std::string mtag(int M) { return "M" + std::to_string(M); }

// ---- commands --------------------------------------------------------------

void run_solve(const ExperimentConfig& c, RunWriter& out, nlohmann::json& summary) {
  const OperatorSpec spec = make_operator(c.op.id, c.op.params);
  Csv csv({"M", "solver", "iterations", "relative_residual", "converged", "grad_l2", "grad_lq"});
  for (int M : c.ladder) {
    const MeshPtr mesh = build_unit_square_mesh(M);
    const PiecewiseField f = make_rhs(c.rhs.id, c.rhs.params, mesh, spec.N);
    SolveReport rep;
    PiecewiseField u(mesh, Layout::vertex, spec.N);
    if (spec.kind == OperatorSpec::Kind::linear) {
      u = solve_linear(sample_target(spec, mesh), Rhs::field(f), rep, LinearOptions{c.solver.linear_tol, 20000});
    } else {
      u = solve_nonlinear(spec, Rhs::field(f), mesh, rep, nonlinear_options(c));
      if (!rep.converged) throw std::runtime_error("solve: no convergence at M = " + std::to_string(M) + " (" + rep.status + ")");
    }
    out.field("u_" + mtag(M) + ".field", u);
    out.json("solve_" + mtag(M) + ".json", rep);
    const PiecewiseField g = gradient(u);
    csv.row({std::to_string(M), rep.solver, std::to_string(rep.iterations), fmt(rep.relative_residual),
             rep.converged ? "1" : "0", fmt(lp_norm(g, 2.0)), fmt(lp_norm(g, c.q))});
  }
  out.text("solve.csv", csv.str());
  summary["rows"] = c.ladder.size();
}

void run_truncate(const ExperimentConfig& c, RunWriter& out, nlohmann::json& summary) {
  Csv csv({"M", "sample", "lambda", "c_used", "good_fraction", "measured_gradient_bound", "gradient_constant",
           "ratio_first", "ratio_second"});
  double worst_constant = 0.0, max_first = 0.0, max_second = 0.0;
  for (int M : c.ladder) {
    const MeshPtr mesh = build_unit_square_mesh(M);
    const PiecewiseField w = make_weight(c.weight.id, c.weight.params, mesh);
    for (int s = 0; s < c.truncate.corpus; ++s) {
      const PiecewiseField g = random_zero_boundary_field(mesh, c.seed + static_cast<std::uint64_t>(s));
      const PiecewiseField Mg = maximal_function(gradient(g));
      for (double ql : c.truncate.lambda_quantiles) {
        const double lambda = quantile(Mg.values(), ql);
        if (!(lambda > 0.0)) continue;
        const TruncationResult r = lipschitz_truncate(g, Mg, lambda, TruncationOptions{c.truncate.c0, 6, 1e-12});
        const auto [first, second] = verify_truncation_weighted(g, r, w, c.p);
        const double C = r.measured_gradient_bound / lambda;
        worst_constant = std::max(worst_constant, C);
        if (std::isfinite(first.ratio)) max_first = std::max(max_first, first.ratio);
        if (std::isfinite(second.ratio)) max_second = std::max(max_second, second.ratio);
        csv.row({std::to_string(M), std::to_string(s), fmt(lambda), fmt(r.c_used), fmt(r.good_fraction()),
                 fmt(r.measured_gradient_bound), fmt(C), fmt(first.ratio), fmt(second.ratio)});
        if (s == 0 && ql == c.truncate.lambda_quantiles.front()) {
          out.field("g_lambda_" + mtag(M) + ".field", r.g_lambda);
          out.json("g_lambda_" + mtag(M) + ".json", r.sidecar());
        }
      }
    }
  }
  out.text("truncate.csv", csv.str());
  summary["gradient_constant"] = worst_constant;
  summary["max_ratio_first"] = max_first;
  summary["max_ratio_second"] = max_second;
}

void run_weights_ap(const ExperimentConfig& c, RunWriter& out, nlohmann::json& summary) {
  Csv csv({"M", "weight", "p", "ap_constant", "reverse_holder_s", "dual_reverse_holder_s", "embedding_q", "worst_window"});
  nlohmann::json reports = nlohmann::json::array();
  for (int M : c.ladder) {
    const MeshPtr mesh = build_unit_square_mesh(M);
    const PiecewiseField w = make_weight(c.weight.id, c.weight.params, mesh);
    const ApReport r = ap_constant(w, c.p);
    reports.push_back(r);
    csv.row({std::to_string(M), c.weight.id, fmt(c.p), fmt(r.ap_constant), fmt(r.reverse_holder_s),
             fmt(r.dual_reverse_holder_s), fmt(r.embedding_q), r.worst_window});
  }
  out.text("weights_ap.csv", csv.str());
  out.json("ap_reports.json", reports);
  summary["rows"] = c.ladder.size();
}

std::vector<std::string> estimate_row(const EstimateReport& r) {
  const auto& ctx = r.context;
  auto str = [&](const char* key) -> std::string {
    if (!ctx.contains(key)) return "";
    const auto& v = ctx.at(key);
    if (v.is_string()) return v.get<std::string>();
    if (v.is_object() && v.contains("id")) return v.at("id").get<std::string>();
    if (v.is_number()) return fmt(v.get<double>());
    return v.dump();
  };
  return {r.id, str("M"), str("f"), str("weight"), str("operator"), str("p"), str("q"), fmt(r.lhs), fmt(r.rhs),
          fmt(r.ratio), str("ap")};
}

void run_verify(const ExperimentConfig& c, RunWriter& out, nlohmann::json& summary) {
  const VerifyBlock& v = c.verify;
  const OperatorSpec spec = make_operator(c.op.id, c.op.params);
  const std::vector<NamedRecipe> fs = v.f_family.empty() ? std::vector<NamedRecipe>{c.rhs} : v.f_family;
  const std::vector<NamedRecipe> ws = v.weight_family.empty() ? std::vector<NamedRecipe>{c.weight} : v.weight_family;
  std::vector<EstimateReport> reports;
  if (v.inequality == "keyest") {
    reports = verify_linear_weighted(spec, fs, ws, c.p, c.ladder, LinearOptions{c.solver.linear_tol, 20000});
  } else if (v.inequality == "apriori" || v.inequality == "apriori2" || v.inequality == "apriori3") {
    for (int M : c.ladder) {
      const MeshPtr mesh = build_unit_square_mesh(M);
      for (const auto& fr : fs) {
        const PiecewiseField f = make_rhs(fr.id, fr.params, mesh, spec.N);
        SolveReport rep;
        const PiecewiseField u = solve_nonlinear(spec, Rhs::field(f), mesh, rep, nonlinear_options(c));
        if (!rep.converged) throw std::runtime_error("verify: solve failed for f = " + fr.id + " at " + mtag(M));
        auto decorate = [&](EstimateReport r, const NamedRecipe& wr) {
          r.context["f"] = recipe_json(fr);
          r.context["operator"] = spec.id;
          r.context["iterations"] = rep.iterations;
          if (!wr.id.empty()) r.context["weight"] = recipe_json(wr);
          return r;
        };
        if (v.inequality == "apriori") reports.push_back(decorate(apriori_report(u, f, c.q), {}));
        else if (v.inequality == "apriori2") reports.push_back(decorate(apriori2_report(u, f, c.q), {}));
        else
          for (const auto& wr : ws)
            reports.push_back(decorate(apriori3_report(u, f, make_weight(wr.id, wr.params, mesh), c.p), wr));
      }
    }
  } else if (v.inequality == "unlocal") {
    for (int M : c.ladder) {
      const MeshPtr mesh = build_unit_square_mesh(M);
      const PiecewiseField A = sample_target(spec, mesh);
      for (const auto& fr : fs) {
        const PiecewiseField f = make_rhs(fr.id, fr.params, mesh, spec.N);
        SolveReport rep;
        const PiecewiseField u = solve_linear(A, Rhs::field(f), rep, LinearOptions{c.solver.linear_tol, 20000});
        for (const auto& wr : ws) {
          const PiecewiseField w = make_weight(wr.id, wr.params, mesh);
          for (const auto& b : v.balls) {
            EstimateReport r = verify_local_interior(
                A, f, u, Ball{{b.at("center")[0].get<double>(), b.at("center")[1].get<double>()}, b.at("radius").get<double>()},
                w, c.p, v.q_tilde);
            r.context["f"] = recipe_json(fr);
            r.context["weight"] = recipe_json(wr);
            r.context["operator"] = spec.id;
            reports.push_back(std::move(r));
          }
        }
      }
    }
  } else if (v.inequality == "itm_weight") {
    for (int M : c.ladder) {
      const MeshPtr mesh = build_unit_square_mesh(M);
      for (const auto& wr : ws) {
        const PiecewiseField w = make_weight(wr.id, wr.params, mesh);
        for (int s = 0; s < c.truncate.corpus; ++s) {
          const PiecewiseField g = random_zero_boundary_field(mesh, c.seed + static_cast<std::uint64_t>(s));
          const PiecewiseField Mg = maximal_function(gradient(g));
          for (double ql : c.truncate.lambda_quantiles) {
            const TruncationResult tr = lipschitz_truncate(g, Mg, quantile(Mg.values(), ql));
            auto [a, b] = verify_truncation_weighted(g, tr, w, c.p);
            for (EstimateReport* r : {&a, &b}) {
              r->context["weight"] = recipe_json(wr);
              r->context["sample"] = s;
              reports.push_back(*r);
            }
          }
        }
      }
    }
  } else if (v.inequality == "algebra") {
    for (double delta : v.deltas) {
      const AlgebraCertificate cert = check_algebra_bound(spec, delta, sampler_for(c));
      nlohmann::json ctx = cert;
      ctx["operator"] = spec.id;
      reports.push_back(make_estimate("algebra", cert.C, 1.0, std::move(ctx)));
    }
  }
  Csv csv({"id", "M", "f", "weight", "operator", "p", "q", "lhs", "rhs", "ratio", "ap"});
  for (const auto& r : reports) csv.row(estimate_row(r));
  out.text("verify.csv", csv.str());
  out.json("reports.json", reports);
  summary["rows"] = reports.size();
  summary["inequality"] = v.inequality;
}

void run_divcurl(const ExperimentConfig& c, RunWriter& out, nlohmann::json& summary) {
  Csv rows({"recipe", "k", "M", "phi", "j", "pairing", "limit", "error"});
  Csv per_k({"recipe", "M", "k", "max_error", "divergence_probe"});
  Csv biting({"recipe", "M", "j", "threshold", "excluded", "budget"});
  nlohmann::json tables = nlohmann::json::array();
  for (int M : c.ladder) {
    const MeshPtr mesh = build_unit_square_mesh(M);
    const PiecewiseField w = make_weight(c.weight.id, c.weight.params, mesh);
    for (const auto& id : c.divcurl.recipes) {
      const DivCurlTable t = divcurl_experiment(make_divcurl_recipe(id), w, default_basket(), c.divcurl.ks, c.divcurl.j_max);
      for (const auto& r : t.rows)
        rows.row({r.recipe, std::to_string(r.k), std::to_string(r.M), r.phi, std::to_string(r.j), fmt(r.pairing),
                  fmt(r.limit), fmt(r.error)});
      std::ostringstream plot;
      plot << "# k max_error\n";
      for (std::size_t i = 0; i < t.ks.size(); ++i) {
        per_k.row({id, std::to_string(M), std::to_string(t.ks[i]), fmt(t.max_error[i]), fmt(t.divergence_probe[i])});
        plot << t.ks[i] << ' ' << fmt(t.max_error[i]) << '\n';
      }
      out.text("plot_divcurl_" + id + "_" + mtag(M) + ".dat", plot.str());
      for (std::size_t j = 0; j < t.biting.thresholds.size(); ++j)
        biting.row({id, std::to_string(M), std::to_string(j + 1), fmt(t.biting.thresholds[j]), fmt(t.biting.excluded[j]),
                    fmt(t.biting.budgets[j])});
      tables.push_back({{"recipe", id},
                        {"M", M},
                        {"weight", recipe_json(c.weight)},
                        {"slope", t.slope},
                        {"divergence_controlled", t.divergence_controlled},
                        {"flagged_negative", t.flagged_negative},
                        {"max_error", t.max_error},
                        {"ks", t.ks}});
    }
  }
  out.text("divcurl.csv", rows.str());
  out.text("divcurl_summary.csv", per_k.str());
  out.text("biting.csv", biting.str());
  out.json("divcurl.json", tables);
  summary["tables"] = tables.size();
}

void run_dirac(const ExperimentConfig& c, RunWriter& out, nlohmann::json& summary) {
  const OperatorSpec spec = make_operator(c.op.id, c.op.params);
  const auto rows = dirac_experiment(spec, {c.dirac.x, c.dirac.y}, c.ladder, c.q, nonlinear_options(c));
  Csv csv({"M", "q", "grad_lq", "grad_l2", "iterations"});
  std::ostringstream plot;
  plot << "# M grad_lq grad_l2\n";
  for (const auto& r : rows) {
    csv.row({std::to_string(r.M), fmt(c.q), fmt(r.norm_q), fmt(r.norm_2), std::to_string(r.report.iterations)});
    plot << r.M << ' ' << fmt(r.norm_q) << ' ' << fmt(r.norm_2) << '\n';
  }
  out.text("dirac.csv", csv.str());
  out.text("plot_dirac.dat", plot.str());
  summary["rows"] = rows.size();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
  std::ifstream is(path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(is, line)) {
    std::vector<std::string> cells;
    std::string cell;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      const char ch = line[i];
      if (quoted) {
        if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') cell += '"', ++i;
        else if (ch == '"') quoted = false;
        else cell += ch;
      } else if (ch == '"') {
        quoted = true;
      } else if (ch == ',') {
        cells.push_back(cell);
        cell.clear();
      } else {
        cell += ch;
      }
    }
    cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  return rows;
}

void run_report(const ExperimentConfig& c, RunWriter& out, nlohmann::json& summary) {
  struct Group {
    std::vector<std::pair<int, double>> ratios;  // (M, ratio)
  };
  std::map<std::string, Group> groups;
  Csv slopes({"run", "recipe", "M", "slope", "flagged_negative"});
  std::size_t divcurl_tables = 0;
  for (const auto& dir : c.runs) {
    const nlohmann::json manifest = verify_manifest(dir);
    const fs::path root(dir);
    if (fs::exists(root / "reports.json")) {
      std::ifstream is(root / "reports.json");
      const auto reports = nlohmann::json::parse(is).get<std::vector<EstimateReport>>();
      for (const auto& r : reports) {
        if (!std::isfinite(r.ratio)) continue;
        const auto row = estimate_row(r);
        const std::string key = join({row[0], row[2], row[3], row[4], row[5], row[6]}, ",");
        groups[key].ratios.emplace_back(r.context.value("M", 0), r.ratio);
      }
    }
    if (fs::exists(root / "divcurl_summary.csv")) {
      const auto rows = read_csv(root / "divcurl_summary.csv");
      std::map<std::pair<std::string, int>, std::pair<std::vector<double>, std::vector<double>>> series;
      for (std::size_t i = 1; i < rows.size(); ++i) {
        auto& s = series[{rows[i][0], std::stoi(rows[i][1])}];
        s.first.push_back(std::stod(rows[i][2]));
        s.second.push_back(std::stod(rows[i][3]));
      }
      std::ifstream is(root / "divcurl.json");
      const auto tables = nlohmann::json::parse(is);
      for (const auto& [key, s] : series) {
        bool flagged = false;
        for (const auto& t : tables)
          if (t.at("recipe") == key.first && t.at("M") == key.second) flagged = t.at("flagged_negative").get<bool>();
        const double slope = s.first.size() >= 2 ? loglog_slope(s.first, s.second) : 0.0;
        slopes.row({dir, key.first, std::to_string(key.second), fmt(slope), flagged ? "1" : "0"});
        std::ostringstream plot;
        plot << "# k max_error\n";
        for (std::size_t i = 0; i < s.first.size(); ++i) plot << fmt(s.first[i]) << ' ' << fmt(s.second[i]) << '\n';
        out.text("plot_k_error_" + key.first + "_" + mtag(key.second) + "_" + std::to_string(divcurl_tables++) + ".dat",
                 plot.str());
      }
    }
  }
  Csv table({"id", "f", "weight", "operator", "p", "q", "rows", "max_ratio", "min_ratio", "variation_factor"});
  std::size_t plot_index = 0;
  for (auto& [key, g] : groups) {
    std::sort(g.ratios.begin(), g.ratios.end());
    double mx = 0.0, mn = std::numeric_limits<double>::infinity();
    for (const auto& [M, r] : g.ratios) {
      mx = std::max(mx, r);
      mn = std::min(mn, r);
    }
    std::vector<std::string> cells;
    std::stringstream ss(key);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    cells.resize(6);
    cells.push_back(std::to_string(g.ratios.size()));
    cells.push_back(fmt(mx));
    cells.push_back(fmt(mn));
    cells.push_back(fmt(mn > 0.0 ? mx / mn : std::numeric_limits<double>::infinity()));
    table.row(cells);
    std::ostringstream plot;
    plot << "# M ratio (" << key << ")\n";
    for (const auto& [M, r] : g.ratios) plot << M << ' ' << fmt(r) << '\n';
    out.text("plot_M_ratio_" + std::to_string(plot_index++) + ".dat", plot.str());
  }
  out.text("summary.csv", table.str());
  out.text("divcurl_slopes.csv", slopes.str());
  summary["groups"] = groups.size();
  summary["runs"] = c.runs.size();
}

class LockFile {
 public:
  explicit LockFile(std::string path) : path_(std::move(path)) {
    fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd_ < 0) throw ValidationError({"output directory is locked by another run (" + path_ + ")"});
    const std::string pid = std::to_string(::getpid()) + "\n";
    if (::write(fd_, pid.data(), pid.size()) < 0) {
    }
  }
  ~LockFile() {
    ::close(fd_);
    ::unlink(path_.c_str());
  }
  LockFile(const LockFile&) = delete;
  LockFile& operator=(const LockFile&) = delete;

 private:
  std::string path_;
  int fd_ = -1;
};

}  // namespace

ValidationError::ValidationError(std::vector<std::string> problems)
    : std::runtime_error("invalid configuration:\n  " + join(problems, "\n  ")), problems_(std::move(problems)) {}

const std::vector<std::string>& commands() {
  static const std::vector<std::string> c{"solve", "truncate", "weights-ap", "verify", "divcurl", "dirac", "report"};
  return c;
}

ExperimentConfig parse_config(const nlohmann::json& j) {
  std::vector<std::string> errors;
  ExperimentConfig c;
  Reader r(j, "", errors);
  r.allow({"command", "mesh", "operator", "rhs", "weight", "exponents", "solver", "seed", "output", "truncate", "verify",
           "divcurl", "dirac", "runs"});
  r.get("command", c.command);
  if (r.has("mesh")) {
    Reader m(r.at("mesh"), "mesh", errors);
    m.allow({"ladder"});
    m.get("ladder", c.ladder);
  }
  r.recipe("operator", c.op);
  r.recipe("rhs", c.rhs);
  r.recipe("weight", c.weight);
  if (r.has("exponents")) {
    Reader e(r.at("exponents"), "exponents", errors);
    e.allow({"p", "q"});
    e.get("p", c.p);
    e.get("q", c.q);
  }
  if (r.has("solver")) {
    Reader s(r.at("solver"), "solver", errors);
    s.allow({"tol", "max_iters", "theta", "linear_tol"});
    s.get("tol", c.solver.tol);
    s.get("max_iters", c.solver.max_iters);
    s.get("theta", c.solver.theta);
    s.get("linear_tol", c.solver.linear_tol);
  }
  r.get("seed", c.seed);
  r.get("output", c.output);
  if (r.has("truncate")) {
    Reader t(r.at("truncate"), "truncate", errors);
    t.allow({"corpus", "lambda_quantiles", "c0"});
    t.get("corpus", c.truncate.corpus);
    t.get("lambda_quantiles", c.truncate.lambda_quantiles);
    t.get("c0", c.truncate.c0);
  }
  if (r.has("verify")) {
    Reader v(r.at("verify"), "verify", errors);
    v.allow({"inequality", "f_family", "weight_family", "balls", "deltas", "q_tilde"});
    v.get("inequality", c.verify.inequality);
    v.recipes("f_family", c.verify.f_family);
    v.recipes("weight_family", c.verify.weight_family);
    v.get("balls", c.verify.balls);
    v.get("deltas", c.verify.deltas);
    v.get("q_tilde", c.verify.q_tilde);
  }
  if (r.has("divcurl")) {
    Reader d(r.at("divcurl"), "divcurl", errors);
    d.allow({"recipes", "ks", "j_max"});
    d.get("recipes", c.divcurl.recipes);
    d.get("ks", c.divcurl.ks);
    d.get("j_max", c.divcurl.j_max);
  }
  if (r.has("dirac")) {
    Reader d(r.at("dirac"), "dirac", errors);
    d.allow({"point"});
    std::vector<double> pt{c.dirac.x, c.dirac.y};
    d.get("point", pt);
    if (pt.size() != 2) errors.push_back("dirac.point: expected [x, y]");
    else c.dirac.x = pt[0], c.dirac.y = pt[1];
  }
  r.get("runs", c.runs);
  if (errors.empty()) errors = validate(c);
  else {
    const auto more = validate(c);
    errors.insert(errors.end(), more.begin(), more.end());
  }
  if (!errors.empty()) throw ValidationError(errors);
  return c;
}

nlohmann::json serialize_config(const ExperimentConfig& c) {
  nlohmann::json j{{"command", c.command},
                   {"mesh", {{"ladder", c.ladder}}},
                   {"operator", recipe_json(c.op)},
                   {"rhs", recipe_json(c.rhs)},
                   {"weight", recipe_json(c.weight)},
                   {"exponents", {{"p", c.p}, {"q", c.q}}},
                   {"solver",
                    {{"tol", c.solver.tol},
                     {"max_iters", c.solver.max_iters},
                     {"theta", c.solver.theta},
                     {"linear_tol", c.solver.linear_tol}}},
                   {"seed", c.seed},
                   {"output", c.output},
                   {"truncate",
                    {{"corpus", c.truncate.corpus}, {"lambda_quantiles", c.truncate.lambda_quantiles}, {"c0", c.truncate.c0}}},
                   {"divcurl", {{"recipes", c.divcurl.recipes}, {"ks", c.divcurl.ks}, {"j_max", c.divcurl.j_max}}},
                   {"dirac", {{"point", {c.dirac.x, c.dirac.y}}}},
                   {"runs", c.runs}};
  nlohmann::json fam = nlohmann::json::array(), wfam = nlohmann::json::array();
  for (const auto& f : c.verify.f_family) fam.push_back(recipe_json(f));
  for (const auto& w : c.verify.weight_family) wfam.push_back(recipe_json(w));
  j["verify"] = {{"inequality", c.verify.inequality}, {"f_family", fam},   {"weight_family", wfam},
                 {"balls", c.verify.balls},           {"deltas", c.verify.deltas}, {"q_tilde", c.verify.q_tilde}};
  return j;
}

std::vector<std::string> validate(const ExperimentConfig& c) {
  std::vector<std::string> e;
  if (std::find(commands().begin(), commands().end(), c.command) == commands().end())
    e.push_back("command: '" + c.command + "' is not one of " + join(commands(), ", "));
  if (c.command != "report") {
    if (c.ladder.empty()) e.push_back("mesh.ladder: must not be empty");
    for (int M : c.ladder)
      if (M < 2 || M > 4096) e.push_back("mesh.ladder: resolution " + std::to_string(M) + " outside [2, 4096]");
  }
  if (!operator_registered(c.op.id)) e.push_back("operator.id: unknown operator '" + c.op.id + "'");
  else {
    try {
      (void)make_operator(c.op.id, c.op.params);
    } catch (const std::exception& ex) {
      e.push_back(std::string("operator.params: ") + ex.what());
    }
  }
  const auto rhs_ids = rhs_registry_ids();
  const auto w_ids = weight_registry_ids();
  auto check_rhs = [&](const NamedRecipe& r, const std::string& where) {
    if (std::find(rhs_ids.begin(), rhs_ids.end(), r.id) == rhs_ids.end())
      e.push_back(where + ": unknown rhs recipe '" + r.id + "'");
    else {
      try {
        (void)make_rhs(r.id, r.params, build_unit_square_mesh(2));
      } catch (const std::exception& ex) {
        e.push_back(where + ": " + ex.what());
      }
    }
  };
  auto check_weight = [&](const NamedRecipe& r, const std::string& where) {
    if (std::find(w_ids.begin(), w_ids.end(), r.id) == w_ids.end())
      e.push_back(where + ": unknown weight recipe '" + r.id + "'");
  };
  check_rhs(c.rhs, "rhs");
  check_weight(c.weight, "weight");
  for (std::size_t i = 0; i < c.verify.f_family.size(); ++i)
    check_rhs(c.verify.f_family[i], "verify.f_family[" + std::to_string(i) + "]");
  for (std::size_t i = 0; i < c.verify.weight_family.size(); ++i)
    check_weight(c.verify.weight_family[i], "verify.weight_family[" + std::to_string(i) + "]");
  if (!(c.p >= 1.0)) e.push_back("exponents.p: must be >= 1");
  if (!(c.q > 1.0)) e.push_back("exponents.q: must be > 1");
  if (!(c.solver.tol > 0.0)) e.push_back("solver.tol: must be positive");
  if (!(c.solver.linear_tol > 0.0)) e.push_back("solver.linear_tol: must be positive");
  if (c.solver.max_iters < 1) e.push_back("solver.max_iters: must be >= 1");
  if (!(c.solver.theta > 0.0 && c.solver.theta <= 1.0)) e.push_back("solver.theta: must lie in (0, 1]");
  if (c.truncate.corpus < 1) e.push_back("truncate.corpus: must be >= 1");
  if (!(c.truncate.c0 > 0.0)) e.push_back("truncate.c0: must be positive");
  for (double q : c.truncate.lambda_quantiles)
    if (!(q >= 0.0 && q <= 1.0)) e.push_back("truncate.lambda_quantiles: values must lie in [0, 1]");
  static const std::vector<std::string> ineq{"keyest", "unlocal", "apriori", "apriori2", "apriori3", "itm_weight", "algebra"};
  if (std::find(ineq.begin(), ineq.end(), c.verify.inequality) == ineq.end())
    e.push_back("verify.inequality: '" + c.verify.inequality + "' is not one of " + join(ineq, ", "));
  if (c.command == "verify" && c.verify.inequality == "apriori2" && !(c.q > 1.0 && c.q <= 2.0))
    e.push_back("exponents.q: apriori2 needs q in (1, 2]");
  if (c.command == "verify" && c.verify.inequality == "unlocal" && c.verify.balls.empty())
    e.push_back("verify.balls: unlocal needs at least one ball");
  for (std::size_t i = 0; i < c.verify.balls.size(); ++i) {
    const auto& b = c.verify.balls[i];
    const bool ok = b.is_object() && b.contains("center") && b.contains("radius") && b.at("center").is_array() &&
                    b.at("center").size() == 2 && b.at("radius").is_number();
    if (!ok) e.push_back("verify.balls[" + std::to_string(i) + "]: expected {center: [x, y], radius}");
  }
  for (double d : c.verify.deltas)
    if (!(d > 0.0)) e.push_back("verify.deltas: values must be positive");
  const auto dc = divcurl_registry_ids();
  for (const auto& id : c.divcurl.recipes)
    if (std::find(dc.begin(), dc.end(), id) == dc.end()) e.push_back("divcurl.recipes: unknown recipe '" + id + "'");
  if (c.divcurl.ks.empty()) e.push_back("divcurl.ks: must not be empty");
  for (int k : c.divcurl.ks)
    if (k < 1) e.push_back("divcurl.ks: values must be positive");
  if (c.divcurl.j_max < 1) e.push_back("divcurl.j_max: must be >= 1");
  if (c.command == "report" && c.runs.empty()) e.push_back("runs: report needs at least one run directory");
  if (c.command == "dirac" && !(c.dirac.x >= 0.0 && c.dirac.x <= 1.0 && c.dirac.y >= 0.0 && c.dirac.y <= 1.0))
    e.push_back("dirac.point: must lie in the unit square");
  return e;
}

std::string sha256_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + path);
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 16];
  while (is.read(buf, sizeof buf) || is.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(is.gcount()));
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return os.str();
}

nlohmann::json verify_manifest(const std::string& run_dir) {
  const fs::path root(run_dir);
  std::ifstream is(root / "manifest.json");
  if (!is) throw ValidationError({"report: " + run_dir + " has no manifest.json"});
  nlohmann::json m;
  try {
    m = nlohmann::json::parse(is);
  } catch (const std::exception& ex) {
    throw ValidationError({"report: " + run_dir + "/manifest.json is not valid JSON"});
  }
  if (m.value("status", "") != "complete") throw ValidationError({"report: run " + run_dir + " is not complete"});
  for (const auto& f : m.at("files")) {
    const fs::path p = root / f.at("path").get<std::string>();
    if (!fs::exists(p)) throw ValidationError({"report: missing file " + p.string()});
    if (sha256_file(p.string()) != f.at("sha256").get<std::string>())
      throw ValidationError({"report: hash mismatch in " + p.string()});
  }
  return m;
}

RunManifest run(const ExperimentConfig& config, const std::string& out_dir) {
  if (auto problems = validate(config); !problems.empty()) throw ValidationError(problems);
  const fs::path out = fs::absolute(out_dir);
  if (fs::exists(out)) throw ValidationError({"output directory already exists: " + out.string()});
  fs::create_directories(out.parent_path());
  LockFile lock(out.string() + ".lock");
  const fs::path tmp = out.string() + ".tmp-" + std::to_string(::getpid());
  fs::remove_all(tmp);
  fs::create_directories(tmp);

  RunWriter writer(tmp);
  nlohmann::json manifest{{"config", serialize_config(config)},
                          {"artifact_version", kVersion},
                          {"seed", config.seed},
                          {"started", timestamp()}};
  nlohmann::json summary = nlohmann::json::object();
  std::exception_ptr failure;
  try {
    writer.json("config.json", serialize_config(config));
    const std::string& cmd = config.command;
    if (cmd == "solve") run_solve(config, writer, summary);
    else if (cmd == "truncate") run_truncate(config, writer, summary);
    else if (cmd == "weights-ap") run_weights_ap(config, writer, summary);
    else if (cmd == "verify") run_verify(config, writer, summary);
    else if (cmd == "divcurl") run_divcurl(config, writer, summary);
    else if (cmd == "dirac") run_dirac(config, writer, summary);
    else if (cmd == "report") run_report(config, writer, summary);
    manifest["status"] = "complete";
  } catch (const ValidationError&) {
    fs::remove_all(tmp);
    throw;
  } catch (const std::exception& ex) {
    manifest["status"] = "failed";
    manifest["error"] = ex.what();
    failure = std::current_exception();
  }
  manifest["summary"] = summary;
  manifest["finished"] = timestamp();
  nlohmann::json files = nlohmann::json::array();
  for (const auto& name : writer.files())
    files.push_back({{"path", name},
                     {"sha256", sha256_file((tmp / name).string())},
                     {"bytes", static_cast<std::uint64_t>(fs::file_size(tmp / name))}});
  manifest["files"] = files;
  {
    std::ofstream os(tmp / "manifest.json");
    os << manifest.dump(2) << '\n';
  }
  fs::rename(tmp, out);
  if (failure) std::rethrow_exception(failure);
  return RunManifest{manifest};
}

}  // namespace vws::cli
