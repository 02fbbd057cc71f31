#include "vws/operators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

namespace vws {

std::string to_string(OperatorSpec::Kind kind) {
  switch (kind) {
    case OperatorSpec::Kind::linear: return "linear";
    case OperatorSpec::Kind::prototype: return "prototype";
    case OperatorSpec::Kind::p_laplace_clamp: return "p_laplace_clamp";
    case OperatorSpec::Kind::custom: return "custom";
  }
  return "unknown";
}

std::vector<double> SamplerConfig::magnitude_ladder() const {
  if (!(magnitude_min > 0.0) || !(magnitude_max > magnitude_min) || magnitudes_per_decade < 1)
    throw std::invalid_argument("sampler: bad magnitude ladder");
  std::vector<double> out;
  const double lo = std::log10(magnitude_min), hi = std::log10(magnitude_max);
  const int steps = static_cast<int>(std::ceil((hi - lo) * magnitudes_per_decade - 1e-9));
  for (int k = 0; k <= steps; ++k) out.push_back(std::pow(10.0, lo + static_cast<double>(k) / magnitudes_per_decade));
  return out;
}

std::vector<Grad> SamplerConfig::direction_set(int N) const {
  std::vector<Grad> dirs;
  if (N == 1) {
    for (int k = 0; k < directions; ++k) {
      const double th = 2.0 * std::numbers::pi * k / directions;
      Grad g(2, 1);
      g << std::cos(th), std::sin(th);
      dirs.push_back(g);
    }
    return dirs;
  }
  std::mt19937_64 rng(seed ^ 0x5eedd1ecu);
  std::normal_distribution<double> gauss;
  for (int k = 0; k < directions * 2 * N; ++k) {
    Grad g(2, N);
    for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = gauss(rng);
    dirs.push_back(g / g.norm());
  }
  return dirs;
}

namespace {

std::vector<Point> probe_points(const SamplerConfig& sampler) {
  std::vector<Point> pts = sampler.points;
  for (int j = 0; j < 5; ++j)
    for (int i = 0; i < 5; ++i) pts.push_back({(i + 0.5) / 5.0, (j + 0.5) / 5.0});
  return pts;
}

OperatorSpec prototype_from(Profile a, std::function<double(Point)> a_tilde, int N) {
  OperatorSpec spec;
  spec.kind = OperatorSpec::Kind::prototype;
  spec.N = N;
  spec.evaluate = [a](Point x, const Grad& eta) -> Grad {
    const double n = eta.norm();
    if (n == 0.0) return Grad::Zero(2, eta.cols());
    return a(x, n) * eta;
  };
  spec.target = [a_tilde, N](Point x) { return identity_tensor(N, a_tilde(x)); };
  spec.strictly_monotone = true;
  return spec;
}

}  // namespace

OperatorSpec make_prototype(Profile a, std::function<double(Point)> a_tilde, int N, const SamplerConfig& sampler) {
  if (!a || !a_tilde) throw std::invalid_argument("make_prototype: profile and limit must be set");
  const auto ladder = sampler.magnitude_ladder();
  double c1 = std::numeric_limits<double>::infinity();
  double growth = 0.0;
  for (Point x : probe_points(sampler)) {
    double prev = 0.0;
    for (double lam : ladder) {
      const double v = a(x, lam);
      if (!(v > 0.0) || !std::isfinite(v)) {
        std::ostringstream msg;
        msg << "make_prototype: profile not positive at lambda = " << lam;
        throw std::invalid_argument(msg.str());
      }
      const double flux = v * lam;
      if (flux < prev * (1.0 - 1e-12)) {
        std::ostringstream msg;
        msg << "make_prototype: a(x, lambda) lambda decreases at lambda = " << lam << " (x = " << x.x << ", " << x.y
            << ")";
        throw std::invalid_argument(msg.str());
      }
      prev = flux;
      if (lam >= 1.0) c1 = std::min(c1, v);
      growth = std::max(growth, flux / (1.0 + lam));
    }
  }
  double offset = 0.0;
  double tmax = 0.0;
  for (Point x : probe_points(sampler)) {
    tmax = std::max(tmax, a_tilde(x));
    for (double lam : ladder) offset = std::max(offset, (c1 - a(x, lam)) * lam * lam);
  }
  OperatorSpec spec = prototype_from(std::move(a), std::move(a_tilde), N);
  spec.c1 = c1;
  spec.c2 = std::max({growth, offset, tmax});
  return spec;
}

OperatorSpec make_linear(std::function<Tensor(Point)> target, int N, bool symmetric) {
  OperatorSpec spec;
  spec.kind = OperatorSpec::Kind::linear;
  spec.N = N;
  spec.target = target;
  spec.evaluate = [target](Point x, const Grad& eta) { return apply(target(x), eta); };
  spec.target_symmetric = symmetric;
  double c1 = std::numeric_limits<double>::infinity(), c2 = 0.0;
  for (Point x : probe_points({})) {
    const Tensor T = target(x);
    const Tensor S = 0.5 * (T + T.transpose());
    Eigen::SelfAdjointEigenSolver<Tensor> eig(S);
    c1 = std::min(c1, eig.eigenvalues().minCoeff());
    Eigen::JacobiSVD<Tensor> svd(T);
    c2 = std::max(c2, svd.singularValues()(0));
  }
  spec.c1 = c1;
  spec.c2 = c2;
  spec.strictly_monotone = c1 > 0.0;
  return spec;
}

OperatorSpec make_p_laplace_clamp(double p, double mu, int N) {
  if (!(p > 1.0) || p == 2.0 || !(mu > 0.0)) throw std::invalid_argument("p-Laplace clamp: p in (1,2) u (2,inf), mu > 0");
  Profile a;
  double limit = 0.0;
  if (p < 2.0) {
    a = [p, mu](Point, double lam) { return std::max(mu, std::pow(lam, p - 2.0)); };
    limit = mu;
  } else {
    a = [p, mu](Point, double lam) { return std::min(1.0 / mu, std::pow(lam, p - 2.0)); };
    limit = 1.0 / mu;
  }
  OperatorSpec spec = make_prototype(a, [limit](Point) { return limit; }, N);
  spec.kind = OperatorSpec::Kind::p_laplace_clamp;
  spec.id = "p_laplace_clamp";
  spec.params = {{"p", p}, {"mu", mu}};
  spec.kinks = {std::pow(mu, (p < 2.0 ? 1.0 : -1.0) / (p - 2.0))};
  return spec;
}

namespace {

Tensor block_diag(const Eigen::Matrix2d& B, int N) {
  Tensor T = Tensor::Zero(2 * N, 2 * N);
  for (int a = 0; a < N; ++a) T.block(2 * a, 2 * a, 2, 2) = B;
  return T;
}

}  // namespace

std::vector<std::string> operator_registry_ids() {
  return {"linear_identity", "linear_diag",        "linear_smooth",  "linear_nonsymmetric", "prototype_rational",
          "prototype_smooth", "prototype_exp",     "p_laplace_clamp", "negation"};
}

bool operator_registered(const std::string& id) {
  const auto ids = operator_registry_ids();
  return std::find(ids.begin(), ids.end(), id) != ids.end();
}

OperatorSpec make_operator(const std::string& id, const nlohmann::json& params, int N) {
  OperatorSpec spec;
  if (id == "linear_identity") {
    spec = make_linear([N](Point) { return identity_tensor(N); }, N);
  } else if (id == "linear_diag") {
    const double d1 = params.value("d1", 1.0), d2 = params.value("d2", 2.0);
    Eigen::Matrix2d D;
    D << d1, 0.0, 0.0, d2;
    spec = make_linear([D, N](Point) { return block_diag(D, N); }, N);
  } else if (id == "linear_smooth") {
    spec = make_linear(
        [N](Point x) {
          using std::numbers::pi;
          Eigen::Matrix2d B;
          const double off = 0.3 * std::sin(pi * (x.x + x.y));
          B << 2.0 + 0.5 * std::sin(pi * x.x), off, off, 1.5 + 0.5 * std::cos(pi * x.y);
          return block_diag(B, N);
        },
        N);
  } else if (id == "linear_nonsymmetric") {
    Eigen::Matrix2d B;
    B << 2.0, 0.5, -0.5, 1.0;
    spec = make_linear([B, N](Point) { return block_diag(B, N); }, N, false);
  } else if (id == "prototype_rational") {
    spec = make_prototype([](Point, double l) { return 1.0 + 1.0 / (1.0 + l); }, [](Point) { return 1.0; }, N);
  } else if (id == "prototype_smooth") {
    spec = make_prototype([](Point, double l) { return 2.0 - 1.0 / (1.0 + l); }, [](Point) { return 2.0; }, N);
  } else if (id == "prototype_exp") {
    spec = make_prototype([](Point, double l) { return 1.0 + std::exp(-l); }, [](Point) { return 1.0; }, N);
  } else if (id == "p_laplace_clamp") {
    spec = make_p_laplace_clamp(params.value("p", 1.8), params.value("mu", 0.5), N);
  } else if (id == "negation") {
    spec.kind = OperatorSpec::Kind::custom;
    spec.N = N;
    spec.evaluate = [](Point, const Grad& eta) -> Grad { return -eta; };
    spec.target = [N](Point) { return identity_tensor(N, -1.0); };
    spec.c1 = 1.0;
    spec.c2 = 1.0;
  } else {
    throw std::invalid_argument("unknown operator id '" + id + "'");
  }
  spec.id = id;
  spec.params = params.is_null() ? nlohmann::json::object() : params;
  return spec;
}

void to_json(nlohmann::json& j, const AsymptoticCertificate& c) {
  j = nlohmann::json{{"epsilon", c.epsilon},
                     {"k", c.k},
                     {"mode", c.mode == AsymptoticCertificate::Mode::value ? "value" : "derivative"},
                     {"samples_checked", c.samples_checked},
                     {"samples_excluded", c.samples_excluded},
                     {"worst_violation", c.worst_violation},
                     {"passed", c.passed},
                     {"seed", c.seed}};
}

namespace {

Tensor numerical_jacobian(const OperatorSpec& spec, Point x, const Grad& eta, double step) {
  const int d = static_cast<int>(eta.size());
  Tensor D(d, d);
  for (int k = 0; k < d; ++k) {
    Grad plus = eta, minus = eta;
    plus.data()[k] += step;
    minus.data()[k] -= step;
    const Grad diff = (spec(x, plus) - spec(x, minus)) / (2.0 * step);
    for (int r = 0; r < d; ++r) D(r, k) = diff.data()[r];
  }
  return D;
}

}  // namespace

AsymptoticCertificate check_asymptotic(const OperatorSpec& spec, double epsilon, AsymptoticCertificate::Mode mode,
                                       const SamplerConfig& sampler) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("check_asymptotic: epsilon must be positive");
  AsymptoticCertificate cert;
  cert.epsilon = epsilon;
  cert.mode = mode;
  cert.seed = sampler.seed;
  cert.magnitudes = sampler.magnitude_ladder();
  cert.profile.assign(cert.magnitudes.size(), 0.0);
  const auto dirs = sampler.direction_set(spec.N);
  for (std::size_t m = 0; m < cert.magnitudes.size(); ++m) {
    const double mag = cert.magnitudes[m];
    for (Point x : sampler.points) {
      const Tensor T = spec.target(x);
      for (const Grad& dir : dirs) {
        const Grad eta = mag * dir;
        double violation = 0.0;
        if (mode == AsymptoticCertificate::Mode::value) {
          violation = (spec(x, eta) - apply(T, eta)).norm() / mag;
        } else {
          const double step = 1e-4 * mag + 1e-8;
          bool straddles = false;
          for (double r : spec.kinks) straddles = straddles || std::abs(mag - r) <= 1.01 * step;
          if (straddles) {
            ++cert.samples_excluded;
            continue;
          }
          violation = (numerical_jacobian(spec, x, eta, step) - T).norm();
        }
        ++cert.samples_checked;
        cert.profile[m] = std::max(cert.profile[m], violation);
      }
    }
  }
  const std::size_t n = cert.magnitudes.size();
  std::size_t first = n;
  for (std::size_t m = n; m-- > 0;) {
    if (cert.profile[m] > epsilon) break;
    first = m;
  }
  if (first == n) {
    cert.passed = false;
    cert.k = std::numeric_limits<double>::infinity();
    cert.worst_violation = *std::max_element(cert.profile.begin(), cert.profile.end());
    return cert;
  }
  cert.passed = true;
  cert.k = first == 0 ? 0.0 : cert.magnitudes[first];
  cert.worst_violation = *std::max_element(cert.profile.begin() + static_cast<std::ptrdiff_t>(first), cert.profile.end());
  return cert;
}

void to_json(nlohmann::json& j, const AlgebraCertificate& c) {
  j = nlohmann::json{{"delta", c.delta}, {"C", c.C},       {"pairs", c.pairs},
                     {"seed", c.seed},   {"cap", c.cap},   {"C_by_cap", c.C_by_cap}};
}

AlgebraCertificate check_algebra_bound(const OperatorSpec& spec, double delta, const SamplerConfig& sampler, double cap) {
  if (!(delta > 0.0)) throw std::invalid_argument("check_algebra_bound: delta must be positive");
  for (auto mode : {AsymptoticCertificate::Mode::value, AsymptoticCertificate::Mode::derivative}) {
    if (!check_asymptotic(spec, delta / 4.0, mode, sampler).passed)
      throw std::invalid_argument("check_algebra_bound: operator fails the asymptotic checks at eps = delta/4");
  }
  AlgebraCertificate cert;
  cert.delta = delta;
  cert.seed = sampler.seed;
  cert.cap = cap;
  const int N = spec.N;
  std::mt19937_64 rng(sampler.seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::normal_distribution<double> gauss;
  const double lo = std::log(sampler.magnitude_min), hi = std::log(cap);
  auto random_dir = [&] {
    Grad g(2, N);
    for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = gauss(rng);
    return Grad(g / g.norm());
  };
  auto log_uniform = [&](double a, double b) { return std::exp(a + (b - a) * uni(rng)); };

  const std::array<double, 4> caps{cap / 8.0, cap / 4.0, cap / 2.0, cap};
  cert.C_by_cap.assign(caps.size(), 0.0);
  double best = -1.0;
  for (int s = 0; s < sampler.pairs; ++s) {
    const Point x = sampler.points[static_cast<std::size_t>(s) % sampler.points.size()];
    const Grad e1 = log_uniform(lo, hi) * random_dir();
    Grad e2;
    switch (s % 3) {
      case 0: e2 = log_uniform(lo, hi) * random_dir(); break;
      case 1: e2 = (2.0 * uni(rng)) * e1; break;
      default: e2 = e1 + log_uniform(lo, std::log(std::max(e1.norm(), sampler.magnitude_min * 2))) * random_dir(); break;
    }
    if (e2.norm() > cap) e2 *= cap / e2.norm();
    const Grad diff = e1 - e2;
    const double lhs = (spec(x, e1) - spec(x, e2) - apply(spec.target(x), diff)).norm();
    const double excess = std::max(0.0, lhs - delta * diff.norm());
    const double reach = std::max(e1.norm(), e2.norm());
    for (std::size_t c = 0; c < caps.size(); ++c)
      if (reach <= caps[c]) cert.C_by_cap[c] = std::max(cert.C_by_cap[c], excess);
    if (excess > best) {
      best = excess;
      cert.worst_eta1 = e1;
      cert.worst_eta2 = e2;
    }
    ++cert.pairs;
  }
  cert.C = std::max(0.0, best);
  const double half = cert.C_by_cap[2], full = cert.C_by_cap[3];
  if (full > 1.5 * half + 1e-9) {
    std::ostringstream msg;
    msg << "check_algebra_bound: C grows with the sampler cap (" << half << " at cap/2, " << full << " at cap)";
    throw std::domain_error(msg.str());
  }
  return cert;
}

void to_json(nlohmann::json& j, const StructureReport& r) {
  j = nlohmann::json{{"coercivity", r.coercivity},
                     {"growth", r.growth},
                     {"monotone", r.monotone},
                     {"strictly_monotone", r.strictly_monotone},
                     {"witness", r.witness},
                     {"samples", r.samples}};
}

StructureReport check_monotonicity_coercivity(const OperatorSpec& spec, const SamplerConfig& sampler) {
  StructureReport rep;
  const auto ladder = sampler.magnitude_ladder();
  const auto dirs = sampler.direction_set(spec.N);
  auto note = [&](const std::string& what) {
    if (rep.witness.empty()) rep.witness = what;
  };
  for (Point x : sampler.points) {
    for (double mag : ladder) {
      for (const Grad& dir : dirs) {
        const Grad eta = mag * dir;
        const Grad A = spec(x, eta);
        const double dot = (A.array() * eta.array()).sum();
        ++rep.samples;
        if (dot < spec.c1 * mag * mag - spec.c2 - 1e-12 * mag * mag) {
          rep.coercivity = false;
          std::ostringstream os;
          os << "coercivity: |eta| = " << mag << ", A.eta = " << dot << " < c1|eta|^2 - c2 = "
             << spec.c1 * mag * mag - spec.c2;
          note(os.str());
        }
        if (A.norm() > spec.c2 * (1.0 + mag) * (1.0 + 1e-12)) {
          rep.growth = false;
          std::ostringstream os;
          os << "growth: |eta| = " << mag << ", |A| = " << A.norm() << " > c2(1+|eta|)";
          note(os.str());
        }
      }
    }
  }
  std::mt19937_64 rng(sampler.seed + 1);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::normal_distribution<double> gauss;
  const double lo = std::log(sampler.magnitude_min), hi = std::log(sampler.magnitude_max);
  for (int s = 0; s < sampler.pairs; ++s) {
    const Point x = sampler.points[static_cast<std::size_t>(s) % sampler.points.size()];
    Grad e1(2, spec.N), e2(2, spec.N);
    for (Eigen::Index i = 0; i < e1.size(); ++i) {
      e1.data()[i] = gauss(rng);
      e2.data()[i] = gauss(rng);
    }
    e1 *= std::exp(lo + (hi - lo) * uni(rng)) / e1.norm();
    e2 *= (s % 2 == 0 ? std::exp(lo + (hi - lo) * uni(rng)) : e1.norm() * (0.5 + uni(rng))) / e2.norm();
    const Grad dA = spec(x, e1) - spec(x, e2);
    const Grad de = e1 - e2;
    const double pair = (dA.array() * de.array()).sum();
    ++rep.samples;
    if (pair < -1e-12 * dA.norm() * de.norm()) {
      rep.monotone = false;
      rep.strictly_monotone = false;
      std::ostringstream os;
      os << "monotonicity: (A1 - A2).(e1 - e2) = " << pair << " at |e1| = " << e1.norm() << ", |e2| = " << e2.norm();
      note(os.str());
    } else if (!(pair > 1e-9 * de.squaredNorm() * std::min(1.0, spec.c1))) {
      rep.strictly_monotone = false;
    }
  }
  return rep;
}

}  // namespace vws
