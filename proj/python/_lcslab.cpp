#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "lcslab/betti.hpp"
#include "lcslab/errors.hpp"
#include "lcslab/experiments.hpp"
#include "lcslab/lifts.hpp"
#include "lcslab/tamarkin.hpp"

namespace py = pybind11;
using nlohmann::json;

// Structured values cross the boundary as JSON text; the Python package decodes them.
namespace {

std::string run(const std::string& command, const std::string& config, const std::string& base_dir,
                std::optional<unsigned long long> seed) {
  auto c = lcs::ExperimentConfig::from_json(json::parse(config), base_dir);
  if (seed) c.set_seed(*seed);
  const auto r = lcs::run_command(command, c);
  json out = r.report;
  out["csv"] = r.csv;
  return out.dump();
}

std::string estimate(const std::string& model, int k_max, const std::string& field) {
  const auto m = lcs::equivariant_model_from_json(json::parse(model));
  return lcs::estimate_cj(m, k_max, lcs::field_from_string(field)).to_json().dump();
}

std::vector<long long> betti(const std::string& model, int k, const std::string& field) {
  const auto m = lcs::equivariant_model_from_json(json::parse(model));
  return lcs::window_betti(m, k, lcs::field_from_string(field)).b;
}

std::string identity(const std::string& name, const std::string& model, const std::string& hamiltonian,
                     const std::string& params, int samples, double t, int steps, unsigned long long seed) {
  const auto m = lcs::cover_model_from_json(json::parse(model));
  const auto h = lcs::builtin_hamiltonian(hamiltonian, m.base(), json::parse(params));
  const auto pts = lcs::random_homogeneous_points(m.dim(), samples, seed);
  lcs::IdentityOptions o;
  o.steps = steps;
  o.seed = seed;
  return lcs::to_json(lcs::verify_identity(name, m, h, pts, t, o)).dump();
}

std::string module_energy(const std::string& module) {
  return lcs::energy(lcs::tamarkin_module_from_json(json::parse(module))).to_json().dump();
}

std::string fibered_energy(const std::string& sheaf, int samples) {
  return lcs::energy_fibered(lcs::fibered_from_json(json::parse(sheaf)), samples).to_json().dump();
}

}  // namespace

PYBIND11_MODULE(_lcslab, m) {
  m.doc() = "Native core of lcslab";
  py::register_exception<lcs::Error>(m, "LcsError", PyExc_ValueError);

  m.def("command_names", &lcs::command_names);
  m.def("identity_names", &lcs::identity_names);
  m.def("hamiltonian_names", &lcs::builtin_hamiltonian_names);
  m.def("run", &run, py::arg("command"), py::arg("config"), py::arg("base_dir") = ".",
        py::arg("seed") = std::nullopt, py::call_guard<py::gil_scoped_release>());
  m.def("estimate_cj", &estimate, py::arg("model"), py::arg("k_max"), py::arg("field") = "F2",
        py::call_guard<py::gil_scoped_release>());
  m.def("window_betti", &betti, py::arg("model"), py::arg("k"), py::arg("field") = "F2",
        py::call_guard<py::gil_scoped_release>());
  m.def("verify_identity", &identity, py::arg("name"), py::arg("model"), py::arg("hamiltonian"),
        py::arg("params") = "{}", py::arg("samples") = 20, py::arg("t") = 1.0, py::arg("steps") = 1000,
        py::arg("seed") = 11, py::call_guard<py::gil_scoped_release>());
  m.def("module_energy", &module_energy, py::arg("module"));
  m.def("fibered_energy", &fibered_energy, py::arg("sheaf"), py::arg("samples") = 10000,
        py::call_guard<py::gil_scoped_release>());
}
