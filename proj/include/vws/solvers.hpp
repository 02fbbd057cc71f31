#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Sparse>
#include <nlohmann/json.hpp>

#include "vws/field.hpp"
#include "vws/operators.hpp"

namespace vws {

/// Right-hand side of  int A(x, grad u) . grad phi = int f . grad phi + <load, phi>.
/// Either part may be absent.
struct Rhs {
  std::optional<PiecewiseField> f;  ///< triangle_vector
  std::vector<double> nodal;        ///< vertex-indexed functional, size nv*N (or empty)

  static Rhs field(PiecewiseField f) { return Rhs{std::move(f), {}}; }
  static Rhs functional(std::vector<double> nodal) { return Rhs{std::nullopt, std::move(nodal)}; }
};

struct SolveReport {
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
  std::vector<double> fixed_point_history;  ///< ||grad(u^{m+1} - u^m)||_{L^2}
  std::vector<double> residual_history;     ///< relative nonlinear residual after each step
  double theta = 1.0;                       ///< damping in use at exit
  int halvings = 0;
  std::string solver;                       ///< "cg", "bicgstab" or "comparison"
  std::string status;                       ///< "converged", "max_iters", "stagnation"
};

void to_json(nlohmann::json& j, const SolveReport& r);

struct LinearOptions {
  double tol = 1e-10;  ///< relative residual of the assembled system
  int max_iters = 20000;
};

/// Samples A~ at triangle centroids (triangle_tensor layout).
PiecewiseField sample_target(const OperatorSpec& spec, const MeshPtr& mesh);

/// Assembled Galerkin problem for int A~ grad v . grad phi over interior P1
/// basis functions, with homogeneous Dirichlet values eliminated.
class LinearSystem {
 public:
  LinearSystem(const PiecewiseField& A, LinearOptions options = {});

  const MeshPtr& mesh_ptr() const { return A_.mesh_ptr(); }
  int components() const { return N_; }
  const Eigen::SparseMatrix<double, Eigen::RowMajor>& stiffness() const { return K_; }
  bool symmetric() const { return symmetric_; }
  double min_ellipticity() const { return min_ellipticity_; }
  std::size_t dofs() const { return dof_vertex_.size() * static_cast<std::size_t>(N_); }

  /// Load vector over interior dofs for the given right-hand side.
  Eigen::VectorXd load(const Rhs& rhs) const;
  /// Load of a triangle_vector field g: int g . grad phi_i.
  Eigen::VectorXd field_load(const PiecewiseField& g) const;

  /// Solves K x = b; returns the vertex field (zero on the boundary).
  PiecewiseField solve(const Eigen::VectorXd& b, SolveReport& report,
                       const PiecewiseField* initial_guess = nullptr) const;

  Eigen::VectorXd restrict(const PiecewiseField& u) const;
  PiecewiseField prolong(const Eigen::VectorXd& x) const;

 private:
  PiecewiseField A_;
  LinearOptions options_;
  int N_;
  std::vector<int> vertex_dof_;  ///< -1 on boundary vertices
  std::vector<int> dof_vertex_;
  Eigen::SparseMatrix<double, Eigen::RowMajor> K_;
  bool symmetric_ = true;
  double min_ellipticity_ = 0.0;
};

/// Discrete weak solution of int A~ grad u . grad phi = rhs(phi). Throws
/// std::domain_error for non-elliptic A~ and std::runtime_error when the
/// Krylov method stagnates.
PiecewiseField solve_linear(const PiecewiseField& A, const Rhs& rhs, SolveReport& report,
                            const LinearOptions& options = {});

struct NonlinearOptions {
  double theta = 1.0;
  double tol = 1e-8;       ///< relative residual of the nonlinear system
  int max_iters = 200;
  bool auto_damp = true;
  int max_halvings = 6;
  int stagnation_window = 20;
  double linear_tol = 1e-12;
  std::optional<PiecewiseField> initial_guess;
};

/// Comparison fixed point: u^{m+1} = (1-theta) u^m + theta w, where w solves
/// the A~-linear problem with right side f - A(., grad u^m) + A~ grad u^m.
/// Convergence is declared on the nonlinear residual.
PiecewiseField solve_nonlinear(const OperatorSpec& spec, const Rhs& rhs, const MeshPtr& mesh, SolveReport& report,
                               const NonlinearOptions& options = {});

/// Nodal residual vector r_i = int A(., grad u) . grad phi_i - rhs(phi_i) over
/// interior dofs, and its Euclidean norm relative to the load.
Eigen::VectorXd nonlinear_residual(const OperatorSpec& spec, const LinearSystem& sys, const PiecewiseField& u,
                                   const Rhs& rhs);

/// f where |f| < k, zero elsewhere.
PiecewiseField truncate_rhs(const PiecewiseField& f, double k);

struct RouteMember {
  double k = 0.0;
  PiecewiseField u;
  SolveReport report;
  double distance = 0.0;  ///< ||grad(u^k - u_final)||_{L^{q0}}
};

struct RouteResult {
  PiecewiseField u_final;
  SolveReport final_report;
  std::vector<RouteMember> members;
};

/// Solves with f^k for each k of an increasing schedule, warm-starting each
/// solve from the previous one, then with the full f. Throws
/// std::runtime_error naming the failed member index.
RouteResult approximation_route(const OperatorSpec& spec, const PiecewiseField& f, const std::vector<double>& schedule,
                                const NonlinearOptions& options = {}, double q0 = 1.5);

/// Point evaluation phi(x0) over the P1 basis in the given component
/// direction (length N), as a vertex-indexed functional.
std::vector<double> dirac_load(Point x0, const TriMesh& mesh, std::vector<double> direction = {1.0});

/// H^1 seminorm distance between two vertex fields.
double h1_seminorm_distance(const PiecewiseField& a, const PiecewiseField& b);

}  // namespace vws
