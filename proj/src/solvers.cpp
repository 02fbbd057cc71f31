#include "vws/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <Eigen/IterativeLinearSolvers>

namespace vws {

void to_json(nlohmann::json& j, const SolveReport& r) {
  j = nlohmann::json{{"iterations", r.iterations},
                     {"relative_residual", r.relative_residual},
                     {"converged", r.converged},
                     {"fixed_point_history", r.fixed_point_history},
                     {"residual_history", r.residual_history},
                     {"theta", r.theta},
                     {"halvings", r.halvings},
                     {"solver", r.solver},
                     {"status", r.status}};
}

PiecewiseField sample_target(const OperatorSpec& spec, const MeshPtr& mesh) {
  PiecewiseField A(mesh, Layout::triangle_tensor, spec.N);
  for (std::size_t t = 0; t < mesh->num_triangles(); ++t) store(spec.target(mesh->centroid(static_cast<int>(t))), A.at(t));
  return A;
}

LinearSystem::LinearSystem(const PiecewiseField& A, LinearOptions options)
    : A_(A), options_(options), N_(A.components()) {
  A.require_layout(Layout::triangle_tensor, "LinearSystem");
  A.require_finite("LinearSystem");
  const TriMesh& mesh = A.mesh();
  vertex_dof_.assign(mesh.num_vertices(), -1);
  for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
    if (mesh.is_boundary(static_cast<int>(v))) continue;
    vertex_dof_[v] = static_cast<int>(dof_vertex_.size());
    dof_vertex_.push_back(static_cast<int>(v));
  }

  min_ellipticity_ = std::numeric_limits<double>::infinity();
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(mesh.num_triangles() * 9 * static_cast<std::size_t>(N_ * N_));
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const Tensor T = to_tensor(A.at(t), N_);
    if (!T.isApprox(T.transpose(), 1e-14)) symmetric_ = false;
    const Tensor S = 0.5 * (T + T.transpose());
    const double lmin = Eigen::SelfAdjointEigenSolver<Tensor>(S, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
    min_ellipticity_ = std::min(min_ellipticity_, lmin);
    if (!(lmin > 0.0)) {
      std::ostringstream msg;
      msg << "LinearSystem: tensor is not elliptic on triangle " << t << " (min eigenvalue " << lmin << ")";
      throw std::domain_error(msg.str());
    }
    const auto& tri = mesh.triangles()[t];
    const auto& gb = mesh.basis_gradients(static_cast<int>(t));
    const double area = mesh.area(static_cast<int>(t));
    for (int k = 0; k < 3; ++k) {
      const int dk = vertex_dof_[static_cast<std::size_t>(tri[k])];
      if (dk < 0) continue;
      for (int l = 0; l < 3; ++l) {
        const int dl = vertex_dof_[static_cast<std::size_t>(tri[l])];
        if (dl < 0) continue;
        const double gk[2] = {gb[k].x, gb[k].y}, gl[2] = {gb[l].x, gb[l].y};
        for (int a = 0; a < N_; ++a) {
          for (int b = 0; b < N_; ++b) {
            double v = 0.0;
            for (int i = 0; i < 2; ++i)
              for (int j = 0; j < 2; ++j) v += T(i + 2 * a, j + 2 * b) * gl[j] * gk[i];
            triplets.emplace_back(dk * N_ + a, dl * N_ + b, area * v);
          }
        }
      }
    }
  }
  const auto n = static_cast<Eigen::Index>(dofs());
  K_.resize(n, n);
  K_.setFromTriplets(triplets.begin(), triplets.end());
  K_.makeCompressed();
}

Eigen::VectorXd LinearSystem::field_load(const PiecewiseField& g) const {
  g.require_layout(Layout::triangle_vector, "load");
  if (g.components() != N_) throw std::invalid_argument("load: component count mismatch");
  const TriMesh& mesh = g.mesh();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dofs()));
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangles()[t];
    const auto& gb = mesh.basis_gradients(static_cast<int>(t));
    const double area = mesh.area(static_cast<int>(t));
    const auto val = g.at(t);
    for (int k = 0; k < 3; ++k) {
      const int dk = vertex_dof_[static_cast<std::size_t>(tri[k])];
      if (dk < 0) continue;
      for (int a = 0; a < N_; ++a)
        b[dk * N_ + a] += area * (val[static_cast<std::size_t>(2 * a)] * gb[k].x + val[static_cast<std::size_t>(2 * a + 1)] * gb[k].y);
    }
  }
  return b;
}

Eigen::VectorXd LinearSystem::load(const Rhs& rhs) const {
  Eigen::VectorXd b = rhs.f ? field_load(*rhs.f) : Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dofs()));
  if (!rhs.nodal.empty()) {
    if (rhs.nodal.size() != vertex_dof_.size() * static_cast<std::size_t>(N_))
      throw std::invalid_argument("load: nodal functional has the wrong size");
    for (std::size_t v = 0; v < vertex_dof_.size(); ++v) {
      const int d = vertex_dof_[v];
      if (d < 0) continue;
      for (int a = 0; a < N_; ++a) b[d * N_ + a] += rhs.nodal[v * static_cast<std::size_t>(N_) + static_cast<std::size_t>(a)];
    }
  }
  return b;
}

Eigen::VectorXd LinearSystem::restrict(const PiecewiseField& u) const {
  u.require_layout(Layout::vertex, "restrict");
  Eigen::VectorXd x(static_cast<Eigen::Index>(dofs()));
  for (std::size_t d = 0; d < dof_vertex_.size(); ++d)
    for (int a = 0; a < N_; ++a) x[static_cast<Eigen::Index>(d) * N_ + a] = u.at(static_cast<std::size_t>(dof_vertex_[d]))[a];
  return x;
}

PiecewiseField LinearSystem::prolong(const Eigen::VectorXd& x) const {
  PiecewiseField u(A_.mesh_ptr(), Layout::vertex, N_);
  for (std::size_t d = 0; d < dof_vertex_.size(); ++d)
    for (int a = 0; a < N_; ++a) u.at(static_cast<std::size_t>(dof_vertex_[d]))[a] = x[static_cast<Eigen::Index>(d) * N_ + a];
  return u;
}

PiecewiseField LinearSystem::solve(const Eigen::VectorXd& b, SolveReport& report,
                                   const PiecewiseField* initial_guess) const {
  const double bnorm = b.norm();
  Eigen::VectorXd x = initial_guess ? restrict(*initial_guess) : Eigen::VectorXd::Zero(b.size());
  report = SolveReport{};
  if (bnorm == 0.0) {
    x.setZero();
    report.converged = true;
    report.status = "converged";
    report.solver = symmetric_ ? "cg" : "bicgstab";
    return prolong(x);
  }
  auto run = [&](auto& solver) {
    solver.setTolerance(0.5 * options_.tol);
    solver.setMaxIterations(options_.max_iters);
    solver.compute(K_);
    for (int attempt = 0; attempt < 3; ++attempt) {
      x = solver.solveWithGuess(b, x);
      report.iterations += static_cast<int>(solver.iterations());
      report.relative_residual = (K_ * x - b).norm() / bnorm;
      if (report.relative_residual <= options_.tol) return;
      if (solver.info() == Eigen::NoConvergence) break;
    }
    std::ostringstream msg;
    msg << "linear solve stagnated: relative residual " << report.relative_residual << " after " << report.iterations
        << " iterations (tolerance " << options_.tol << ")";
    throw std::runtime_error(msg.str());
  };
  if (symmetric_) {
    report.solver = "cg";
    Eigen::ConjugateGradient<Eigen::SparseMatrix<double, Eigen::RowMajor>, Eigen::Lower | Eigen::Upper> cg;
    run(cg);
  } else {
    report.solver = "bicgstab";
    Eigen::BiCGSTAB<Eigen::SparseMatrix<double, Eigen::RowMajor>> bicg;
    run(bicg);
  }
  report.converged = true;
  report.status = "converged";
  return prolong(x);
}

PiecewiseField solve_linear(const PiecewiseField& A, const Rhs& rhs, SolveReport& report, const LinearOptions& options) {
  const LinearSystem sys(A, options);
  return sys.solve(sys.load(rhs), report);
}

namespace {

/// Per-triangle map eta -> A(x, eta) over grad u.
PiecewiseField flux(const OperatorSpec& spec, const PiecewiseField& grad_u) {
  PiecewiseField out(grad_u.mesh_ptr(), Layout::triangle_vector, spec.N);
  const TriMesh& mesh = grad_u.mesh();
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t)
    store(spec(mesh.centroid(static_cast<int>(t)), to_grad(grad_u.at(t), spec.N)), out.at(t));
  return out;
}

double l2_gradient_norm(const PiecewiseField& u) { return std::sqrt(power_integral(gradient(u), 2.0)); }

double gradient_cosine(const PiecewiseField& a, const PiecewiseField& b) {
  const TriMesh& mesh = a.mesh();
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    const double area = mesh.area(static_cast<int>(t));
    const auto x = a.at(t), y = b.at(t);
    for (std::size_t k = 0; k < x.size(); ++k) {
      ab += area * x[k] * y[k];
      aa += area * x[k] * x[k];
      bb += area * y[k] * y[k];
    }
  }
  return aa > 0.0 && bb > 0.0 ? ab / std::sqrt(aa * bb) : 0.0;
}

}  // namespace

Eigen::VectorXd nonlinear_residual(const OperatorSpec& spec, const LinearSystem& sys, const PiecewiseField& u,
                                   const Rhs& rhs) {
  return sys.field_load(flux(spec, gradient(u))) - sys.load(rhs);
}

PiecewiseField solve_nonlinear(const OperatorSpec& spec, const Rhs& rhs, const MeshPtr& mesh, SolveReport& report,
                               const NonlinearOptions& options) {
  if (!(options.theta > 0.0 && options.theta <= 1.0)) throw std::invalid_argument("solve_nonlinear: theta in (0, 1]");
  if (rhs.f && rhs.f->components() != spec.N) throw std::invalid_argument("solve_nonlinear: rhs component mismatch");
  const PiecewiseField At = sample_target(spec, mesh);
  const LinearSystem sys(At, LinearOptions{options.linear_tol, 20000});

  PiecewiseField u = options.initial_guess ? *options.initial_guess : PiecewiseField(mesh, Layout::vertex, spec.N);
  u.require_layout(Layout::vertex, "solve_nonlinear initial guess");
  zero_boundary(u);

  report = SolveReport{};
  report.solver = "comparison";
  report.theta = options.theta;
  const Eigen::VectorXd F = sys.load(rhs);
  const double scale = F.norm() > 0.0 ? F.norm() : 1.0;
  double rel = nonlinear_residual(spec, sys, u, rhs).norm() / scale;
  report.relative_residual = rel;
  if (rel <= options.tol) {
    report.converged = true;
    report.status = "converged";
    return u;
  }

  double theta = options.theta;
  double prev_increment = std::numeric_limits<double>::infinity();
  std::optional<PiecewiseField> prev_step;
  double best = rel;
  int since_best = 0;
  const int N = spec.N;
  for (int m = 1; m <= options.max_iters; ++m) {
    const PiecewiseField grad_u = gradient(u);
    const PiecewiseField A_u = flux(spec, grad_u);
    PiecewiseField g(mesh, Layout::triangle_vector, N);
    for (std::size_t t = 0; t < mesh->num_triangles(); ++t) {
      const Grad eta = to_grad(grad_u.at(t), N);
      const Grad lin = apply(to_tensor(At.at(t), N), eta);
      auto out = g.at(t);
      const auto a = A_u.at(t);
      for (int k = 0; k < 2 * N; ++k) {
        const double fk = rhs.f ? rhs.f->at(t)[static_cast<std::size_t>(k)] : 0.0;
        out[static_cast<std::size_t>(k)] = fk - a[static_cast<std::size_t>(k)] + lin.data()[k];
      }
    }
    Rhs step_rhs{std::move(g), rhs.nodal};
    SolveReport lin_report;
    const PiecewiseField w = sys.solve(sys.load(step_rhs), lin_report, &u);

    PiecewiseField d(w);
    for (std::size_t k = 0; k < d.values().size(); ++k) d[k] = w[k] - u[k];
    PiecewiseField grad_d = gradient(d);
    const double full = std::sqrt(power_integral(grad_d, 2.0));
    double increment = theta * full;
    // successive steps pointing against each other signal an overshoot
    // (iteration factor near -1) that never shows up as growth
    if (options.auto_damp && prev_step && report.halvings < options.max_halvings &&
        gradient_cosine(grad_d, *prev_step) < -0.5) {
      theta *= 0.5;
      ++report.halvings;
      increment = theta * full;
    }
    while (options.auto_damp && increment > prev_increment && report.halvings < options.max_halvings) {
      theta *= 0.5;
      ++report.halvings;
      increment = theta * full;
    }
    prev_step = std::move(grad_d);
    if (theta == 1.0) {
      u = w;
    } else {
      for (std::size_t k = 0; k < u.values().size(); ++k) u[k] += theta * d[k];
    }
    prev_increment = increment;
    report.iterations = m;
    report.fixed_point_history.push_back(increment);
    rel = nonlinear_residual(spec, sys, u, rhs).norm() / scale;
    report.residual_history.push_back(rel);
    report.relative_residual = rel;
    report.theta = theta;
    if (rel <= options.tol) {
      report.converged = true;
      report.status = "converged";
      return u;
    }
    if (rel < 0.99 * best) {
      best = rel;
      since_best = 0;
    } else if (++since_best >= options.stagnation_window) {
      report.status = "stagnation";
      return u;
    }
  }
  report.status = "max_iters";
  return u;
}

PiecewiseField truncate_rhs(const PiecewiseField& f, double k) {
  if (!(k > 0.0)) throw std::invalid_argument("truncate_rhs: level must be positive");
  if (f.layout() == Layout::vertex) throw std::invalid_argument("truncate_rhs: triangle layout expected");
  PiecewiseField out(f);
  for (std::size_t t = 0; t < out.entities(); ++t)
    if (!(f.norm_at(t) < k))
      for (double& v : out.at(t)) v = 0.0;
  return out;
}

RouteResult approximation_route(const OperatorSpec& spec, const PiecewiseField& f, const std::vector<double>& schedule,
                                const NonlinearOptions& options, double q0) {
  for (std::size_t i = 1; i < schedule.size(); ++i)
    if (!(schedule[i] > schedule[i - 1])) throw std::invalid_argument("approximation_route: schedule must increase");
  RouteResult route{PiecewiseField(f.mesh_ptr(), Layout::vertex, spec.N), {}, {}};
  NonlinearOptions opts = options;
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    RouteMember member{schedule[i], PiecewiseField(f.mesh_ptr(), Layout::vertex, spec.N), {}, 0.0};
    member.u = solve_nonlinear(spec, Rhs::field(truncate_rhs(f, schedule[i])), f.mesh_ptr(), member.report, opts);
    if (!member.report.converged) {
      std::ostringstream msg;
      msg << "approximation_route: member " << i << " (k = " << schedule[i] << ") failed: " << member.report.status;
      throw std::runtime_error(msg.str());
    }
    opts.initial_guess = member.u;
    route.members.push_back(std::move(member));
  }
  route.u_final = solve_nonlinear(spec, Rhs::field(f), f.mesh_ptr(), route.final_report, opts);
  if (!route.final_report.converged)
    throw std::runtime_error("approximation_route: final solve failed: " + route.final_report.status);
  for (auto& member : route.members) {
    PiecewiseField diff(member.u);
    for (std::size_t k = 0; k < diff.values().size(); ++k) diff[k] -= route.u_final[k];
    member.distance = lp_norm(gradient(diff), q0);
  }
  return route;
}

std::vector<double> dirac_load(Point x0, const TriMesh& mesh, std::vector<double> direction) {
  const int t = mesh.locate(x0);
  if (t < 0) {
    std::ostringstream msg;
    msg << "dirac_load: point (" << x0.x << ", " << x0.y << ") lies outside the domain";
    throw std::invalid_argument(msg.str());
  }
  const std::size_t N = direction.size();
  if (N == 0) throw std::invalid_argument("dirac_load: empty direction");
  std::vector<double> nodal(mesh.num_vertices() * N, 0.0);
  const auto lambda = mesh.barycentric(t, x0);
  const auto& tri = mesh.triangles()[static_cast<std::size_t>(t)];
  for (int k = 0; k < 3; ++k) {
    const double l = std::clamp(lambda[static_cast<std::size_t>(k)], 0.0, 1.0);
    for (std::size_t a = 0; a < N; ++a) nodal[static_cast<std::size_t>(tri[k]) * N + a] += l * direction[a];
  }
  return nodal;
}

double h1_seminorm_distance(const PiecewiseField& a, const PiecewiseField& b) {
  a.require_layout(Layout::vertex, "h1_seminorm_distance");
  PiecewiseField diff(a);
  for (std::size_t k = 0; k < diff.values().size(); ++k) diff[k] -= b[k];
  return l2_gradient_norm(diff);
}

}  // namespace vws
