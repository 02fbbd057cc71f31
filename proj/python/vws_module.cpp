#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "vws/cli.hpp"
#include "vws/lab.hpp"
#include "vws/truncation.hpp"
#include "vws/weights.hpp"

namespace py = pybind11;
using nlohmann::json;

namespace {

py::array_t<double> to_array(const std::vector<double>& v) {
  py::array_t<double> out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

json parse(const std::string& s) { return s.empty() ? json::object() : json::parse(s); }

py::dict mesh_arrays(int M) {
  const vws::MeshPtr mesh = vws::build_unit_square_mesh(M);
  py::array_t<double> xy({static_cast<py::ssize_t>(mesh->num_vertices()), py::ssize_t{2}});
  auto x = xy.mutable_unchecked<2>();
  for (std::size_t v = 0; v < mesh->num_vertices(); ++v) {
    x(static_cast<py::ssize_t>(v), 0) = mesh->vertices()[v].x;
    x(static_cast<py::ssize_t>(v), 1) = mesh->vertices()[v].y;
  }
  py::array_t<int> tri({static_cast<py::ssize_t>(mesh->num_triangles()), py::ssize_t{3}});
  auto t = tri.mutable_unchecked<2>();
  for (std::size_t k = 0; k < mesh->num_triangles(); ++k)
    for (int c = 0; c < 3; ++c) t(static_cast<py::ssize_t>(k), c) = mesh->triangles()[k][static_cast<std::size_t>(c)];
  py::dict d;
  d["vertices"] = xy;
  d["triangles"] = tri;
  return d;
}

py::tuple solve(const std::string& op, const std::string& op_params, const std::string& rhs,
                const std::string& rhs_params, int M, double tol) {
  const vws::MeshPtr mesh = vws::build_unit_square_mesh(M);
  const vws::OperatorSpec spec = vws::make_operator(op, parse(op_params));
  const vws::PiecewiseField f = vws::make_rhs(rhs, parse(rhs_params), mesh, spec.N);
  vws::SolveReport rep;
  vws::NonlinearOptions opt;
  opt.tol = tol;
  vws::PiecewiseField u(mesh, vws::Layout::vertex, spec.N);
  {
    py::gil_scoped_release release;
    u = vws::solve_nonlinear(spec, vws::Rhs::field(f), mesh, rep, opt);
  }
  return py::make_tuple(to_array(u.values()), json(rep).dump());
}

py::array_t<double> maximal(int M, const std::vector<double>& triangle_values) {
  const vws::MeshPtr mesh = vws::build_unit_square_mesh(M);
  return to_array(vws::maximal_function(vws::PiecewiseField(mesh, vws::Layout::triangle_scalar, 1, triangle_values)).values());
}

std::string ap(int M, const std::vector<double>& weight, double p) {
  const vws::MeshPtr mesh = vws::build_unit_square_mesh(M);
  return json(vws::ap_constant(vws::PiecewiseField(mesh, vws::Layout::triangle_scalar, 1, weight), p)).dump();
}

py::tuple truncate_field(int M, std::uint64_t seed, double lambda) {
  const vws::MeshPtr mesh = vws::build_unit_square_mesh(M);
  const vws::PiecewiseField g = vws::random_zero_boundary_field(mesh, seed);
  const vws::TruncationResult r = vws::lipschitz_truncate(g, lambda);
  return py::make_tuple(to_array(g.values()), to_array(r.g_lambda.values()), r.sidecar().dump());
}

std::vector<std::string> validate(const std::string& config) {
  try {
    (void)vws::cli::parse_config(json::parse(config));
    return {};
  } catch (const vws::cli::ValidationError& e) {
    return e.problems();
  }
}

std::string run(const std::string& config, const std::string& out) {
  const vws::cli::ExperimentConfig c = vws::cli::parse_config(json::parse(config));
  py::gil_scoped_release release;
  return vws::cli::run(c, out).json.dump();
}

}  // namespace

PYBIND11_MODULE(_vws, m) {
  m.doc() = "Weighted estimates lab bindings";
  py::register_exception<vws::cli::ValidationError>(m, "ValidationError", PyExc_ValueError);
  m.def("commands", &vws::cli::commands);
  m.def("operator_ids", &vws::operator_registry_ids);
  m.def("mesh", &mesh_arrays, py::arg("M"));
  m.def("solve", &solve, py::arg("operator"), py::arg("operator_params"), py::arg("rhs"), py::arg("rhs_params"),
        py::arg("M"), py::arg("tol"));
  m.def("maximal_function", &maximal, py::arg("M"), py::arg("triangle_values"));
  m.def("ap_constant", &ap, py::arg("M"), py::arg("weight"), py::arg("p"));
  m.def("truncate", &truncate_field, py::arg("M"), py::arg("seed"), py::arg("lam"));
  m.def("validate", &validate, py::arg("config"));
  m.def("run", &run, py::arg("config"), py::arg("out"));
}
