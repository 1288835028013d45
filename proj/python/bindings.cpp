#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "gft/cli.hpp"
#include "gft/cli_io.hpp"
#include "gft/error.hpp"
#include "gft/metrics_eval.hpp"
#include "gft/pde_kernel.hpp"
#include "gft/stencil_ops.hpp"

namespace py = pybind11;
using namespace gft;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Tensor to_tensor(const Array& a) {
  Shape shape(a.shape(), a.shape() + a.ndim());
  return Tensor(shape, std::vector<double>(a.data(), a.data() + a.size()));
}

Array to_array(const Tensor& t) {
  Array out(std::vector<py::ssize_t>(t.shape().begin(), t.shape().end()));
  std::copy(t.values().begin(), t.values().end(), out.mutable_data());
  return out;
}

GridGeometry geometry_for(const Array& field, const std::vector<double>& levels) {
  if (field.ndim() < 2) throw ValidationError("fields need at least rows and cols");
  return build_geometry(std::size_t(field.shape(field.ndim() - 2)), std::size_t(field.shape(field.ndim() - 1)), levels);
}

WeatherState to_state(const Array& values, const std::vector<double>& levels) {
  return WeatherState(VariableLayout::with_levels(levels), to_tensor(values));
}

}  // namespace

PYBIND11_MODULE(_gft, m) {
  m.doc() = "Bindings for the gft grid physics engine";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_IOError);
  py::register_exception<StabilityError>(m, "StabilityError", PyExc_ArithmeticError);

  m.attr("__version__") = kEngineVersion;

  m.def("diff_x", [](const Array& f, const std::vector<double>& levels) {
    return to_array(diff_x(to_tensor(f), geometry_for(f, levels)));
  }, py::arg("field"), py::arg("levels_hpa"));
  m.def("diff_y", [](const Array& f, const std::vector<double>& levels) {
    return to_array(diff_y(to_tensor(f), geometry_for(f, levels)));
  }, py::arg("field"), py::arg("levels_hpa"));
  m.def("diff_p", [](const Array& f, const std::vector<double>& levels) {
    return to_array(diff_p(to_tensor(f), geometry_for(f, levels)));
  }, py::arg("field"), py::arg("levels_hpa"));

  m.def("saturation", [](double t, double p) {
    const auto s = saturation_point(t, p);
    return py::dict(py::arg("e_s") = s.e_s, py::arg("q_s") = s.q_s, py::arg("f") = s.f);
  }, py::arg("t_kelvin"), py::arg("p_hpa"));

  m.def("evolve", [](const Array& values, const std::vector<double>& levels, std::size_t steps, double t_s) {
    const WeatherState s = to_state(values, levels);
    const PhysicsContext ctx(build_geometry(s.rows(), s.cols(), levels));
    return to_array(evolve(s, steps, ctx, t_s).state.values);
  }, py::arg("values"), py::arg("levels_hpa"), py::arg("steps"), py::arg("t_s") = 300.0);

  m.def("energy", [](const Array& values, const std::vector<double>& levels) {
    return energy(to_state(values, levels));
  }, py::arg("values"), py::arg("levels_hpa"));

  m.def("read_gft", [](const std::string& path) {
    const WeatherState s = read_gft(path);
    py::object lead = s.lead_seconds ? py::object(py::float_(*s.lead_seconds)) : py::object(py::none());
    return py::make_tuple(to_array(s.values), s.layout.pressure_levels(), lead);
  }, py::arg("path"));
  m.def("write_gft", [](const std::string& path, const Array& values, const std::vector<double>& levels,
                        std::optional<double> lead) {
    WeatherState s = to_state(values, levels);
    s.lead_seconds = lead;
    write_gft(s, path);
  }, py::arg("path"), py::arg("values"), py::arg("levels_hpa"), py::arg("lead_seconds") = py::none());

  m.def("cli", [](const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = cli_main(args, out, err);
    return py::make_tuple(code, out.str(), err.str());
  }, py::arg("args"), "Runs the command line in process; returns (exit code, stdout, stderr).");
}
