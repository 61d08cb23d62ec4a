#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "nlsrecon/carleman_picard.hpp"
#include "nlsrecon/config.hpp"
#include "nlsrecon/csv_io.hpp"
#include "nlsrecon/forward_sim.hpp"
#include "nlsrecon/pipeline.hpp"
#include "nlsrecon/reduction.hpp"
#include "nlsrecon/spatial_grid.hpp"
#include "nlsrecon/time_basis.hpp"

namespace py = pybind11;
using namespace nlsrecon;

PYBIND11_MODULE(_core, m) {
    m.doc() = "Carleman-weighted reconstruction of the initial state of a 2-D nonlinear Schrodinger equation";

    py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
    py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
    py::register_exception<SolverError>(m, "SolverError", PyExc_RuntimeError);

    py::class_<UniformTimeGrid>(m, "UniformTimeGrid")
        .def(py::init([](double dt, int n_steps) { return UniformTimeGrid{dt, n_steps}; }), py::arg("dt"),
             py::arg("n_steps"))
        .def_readonly("dt", &UniformTimeGrid::dt)
        .def_readonly("n_steps", &UniformTimeGrid::n_steps)
        .def_property_readonly("horizon", &UniformTimeGrid::horizon)
        .def_property_readonly("n_levels", &UniformTimeGrid::n_levels);
    m.def("make_time_grid", &make_time_grid, py::arg("horizon"), py::arg("dt"));

    py::class_<TimeBasis>(m, "TimeBasis")
        .def_property_readonly("horizon", &TimeBasis::horizon)
        .def_property_readonly("n_modes", &TimeBasis::n_modes)
        .def_property_readonly("n_quad", &TimeBasis::n_quad)
        .def_property_readonly("quad_nodes", &TimeBasis::quad_nodes)
        .def_property_readonly("quad_weights", &TimeBasis::quad_weights)
        .def_property_readonly("weighted_quad_weights", &TimeBasis::weighted_quad_weights)
        .def_property_readonly("psi_table", &TimeBasis::psi_table)
        .def_property_readonly("psi_prime_table", &TimeBasis::psi_prime_table)
        .def_property_readonly("psi_at_zero", &TimeBasis::psi_at_zero)
        .def_property_readonly("s_matrix", &TimeBasis::s_matrix)
        .def("evaluate", &TimeBasis::evaluate)
        .def("evaluate_derivative", &TimeBasis::evaluate_derivative);
    m.def(
        "build_basis",
        [](double T, int N, int n_quad) { return n_quad > 0 ? build_basis(T, N, n_quad) : build_basis(T, N); },
        py::arg("horizon"), py::arg("n_modes"), py::arg("n_quad") = 0);
    m.def("gram_deviation", &gram_deviation);
    m.def("s_identity_deviation", &s_identity_deviation);
    m.def(
        "project_signal",
        [](const TimeBasis& b, const Eigen::VectorXcd& s, const UniformTimeGrid& g) {
            return project_signal(b, std::span<const cplx>(s.data(), static_cast<std::size_t>(s.size())), g);
        },
        py::arg("basis"), py::arg("samples"), py::arg("grid"));

    py::class_<Point>(m, "Point")
        .def(py::init([](double x, double y) { return Point{x, y}; }))
        .def_readwrite("x", &Point::x)
        .def_readwrite("y", &Point::y)
        .def("__repr__", [](const Point& p) { return "Point(" + format_number(p.x) + ", " + format_number(p.y) + ")"; });

    py::class_<GridDescriptor>(m, "GridDescriptor")
        .def_readonly("half_width", &GridDescriptor::half_width)
        .def_readonly("n_per_side", &GridDescriptor::n_per_side);

    py::class_<SpatialGrid>(m, "SpatialGrid")
        .def(py::init<double, int>(), py::arg("half_width"), py::arg("n_per_side"))
        .def_property_readonly("spacing", &SpatialGrid::spacing)
        .def_property_readonly("n_per_side", &SpatialGrid::n_per_side)
        .def_property_readonly("n_interior", &SpatialGrid::n_interior)
        .def_property_readonly("n_boundary", &SpatialGrid::n_boundary)
        .def("interior_position", &SpatialGrid::interior_position)
        .def("boundary_position", &SpatialGrid::boundary_position)
        .def("to_full", &SpatialGrid::to_full)
        .def("from_full", &SpatialGrid::from_full);
    m.def("laplacian_apply", &laplacian_apply);
    m.def("neumann_trace", &neumann_trace);

    py::class_<CarlemanWeight>(m, "CarlemanWeight")
        .def_readonly("lambda_", &CarlemanWeight::lambda)
        .def_readonly("beta", &CarlemanWeight::beta)
        .def_readonly("interior_weight", &CarlemanWeight::interior_weight)
        .def_readonly("boundary_weight", &CarlemanWeight::boundary_weight)
        .def("at", &CarlemanWeight::at);
    m.def("build_weight", &build_weight, py::arg("grid"), py::arg("focus"), py::arg("lambda_"), py::arg("beta"));

    py::class_<Phantom>(m, "Phantom")
        .def_static("test1", &Phantom::test1)
        .def_static("test2", &Phantom::test2)
        .def_static("test3", &Phantom::test3)
        .def("value", &Phantom::value);
    m.def("rasterize_phantom", &rasterize_phantom);
    m.def("rasterize_phantom_full", &rasterize_phantom_full);

    py::class_<SpaceTimeTrace>(m, "SpaceTimeTrace")
        .def_readonly("grid", &SpaceTimeTrace::grid)
        .def_readonly("times", &SpaceTimeTrace::times)
        .def_readonly("values", &SpaceTimeTrace::values)
        .def_readonly("noise_level", &SpaceTimeTrace::noise_level);
    m.def(
        "run_forward",
        [](const SpatialGrid& g, const Phantom& ph, double T, double dt, double p, double q) {
            return run_forward(g, ph, T, dt, p, RealField::Constant(g.n_interior(), q));
        },
        py::arg("grid"), py::arg("phantom"), py::arg("horizon"), py::arg("dt"), py::arg("p"), py::arg("q") = 1.0);
    m.def("add_noise", &add_noise, py::arg("trace"), py::arg("delta"), py::arg("seed"));

    py::class_<ModalField>(m, "ModalField")
        .def(py::init<Eigen::MatrixXcd>())
        .def_readwrite("coeffs", &ModalField::coeffs);
    py::class_<ModalBoundaryData>(m, "ModalBoundaryData").def_readonly("coeffs", &ModalBoundaryData::coeffs);
    m.def("project_trace", &project_trace);
    m.def(
        "frozen_nonlinearity",
        [](const TimeBasis& b, const ModalField& phi, double q, double p) {
            return frozen_nonlinearity(b, phi, RealField::Constant(phi.n_nodes(), q), p);
        },
        py::arg("basis"), py::arg("phi"), py::arg("q"), py::arg("p"));
    m.def("residual_metric", &residual_metric);
    m.def("reconstruct_u0", &reconstruct_u0);
    m.def("rel_change", &rel_change);

    py::class_<IterationRecord>(m, "IterationRecord")
        .def_readonly("index", &IterationRecord::index)
        .def_readonly("rel_change", &IterationRecord::rel_change)
        .def_readonly("residual", &IterationRecord::residual)
        .def_readonly("ls_iterations", &IterationRecord::ls_iterations)
        .def_readonly("ls_residual", &IterationRecord::ls_residual);

    py::class_<InversionConfig>(m, "InversionConfig")
        .def_readwrite("lambda_", &InversionConfig::lambda)
        .def_readwrite("beta", &InversionConfig::beta)
        .def_readwrite("epsilon", &InversionConfig::epsilon)
        .def_readwrite("n_modes", &InversionConfig::n_modes)
        .def_readwrite("k_max", &InversionConfig::k_max);

    py::class_<PipelineConfig>(m, "PipelineConfig")
        .def_readwrite("name", &PipelineConfig::name)
        .def_readwrite("output_dir", &PipelineConfig::output_dir)
        .def_readonly("nx", &PipelineConfig::nx)
        .def_readonly("dt", &PipelineConfig::dt)
        .def_readonly("horizon", &PipelineConfig::horizon)
        .def_readonly("p", &PipelineConfig::p)
        .def_readonly("noise_delta", &PipelineConfig::noise_delta)
        .def_readonly("seed", &PipelineConfig::seed)
        .def_readwrite("inversion", &PipelineConfig::inversion);
    m.def("parse_config", &parse_pipeline_config, py::arg("text"), py::arg("source_name") = "<string>",
          py::arg("overrides") = std::vector<std::string>{});
    m.def("load_config", &load_pipeline_config, py::arg("path"), py::arg("overrides") = std::vector<std::string>{});

    m.def(
        "cmd_forward",
        [](const PipelineConfig& c) {
            const auto out = cmd_forward(c);
            py::dict d;
            d["clean"] = out.clean_path;
            d["noisy"] = out.noisy_path;
            return d;
        },
        py::arg("config"));
    m.def(
        "cmd_invert",
        [](const PipelineConfig& c, const std::filesystem::path& trace) {
            const auto out = cmd_invert(c, trace);
            py::dict d;
            d["history"] = out.report.history;
            d["summary"] = out.summary;
            d["max_abs_re"] = out.report.amplitude.max_abs_re;
            d["max_abs_im"] = out.report.amplitude.max_abs_im;
            d["rel_error_re"] = out.report.amplitude.rel_error_re;
            d["rel_error_im"] = out.report.amplitude.rel_error_im;
            d["u0"] = out.report.u0_field;
            d["metrics_path"] = out.metrics_path;
            d["u0_path"] = out.u0_path;
            return d;
        },
        py::arg("config"), py::arg("trace_path"));
    m.def(
        "cmd_diagnose",
        [](const PipelineConfig& c) {
            const auto out = cmd_diagnose(c);
            py::dict d;
            d["gram_deviation"] = out.gram_deviation;
            d["s_identity_deviation"] = out.s_identity_deviation;
            std::vector<double> ratios, tails;
            for (const auto& r : out.carleman) ratios.push_back(r.ratio);
            for (const auto& t : out.truncation) tails.push_back(t.tail_norm);
            d["carleman_ratios"] = ratios;
            d["truncation_tails"] = tails;
            return d;
        },
        py::arg("config"));
    m.def("cmd_phantom", &cmd_phantom, py::arg("config"));

    m.def("read_trace_csv", &read_trace_csv);
    m.def("write_trace_csv", &write_trace_csv);
    m.def(
        "read_grid_csv",
        [](const std::filesystem::path& p) {
            const auto g = read_grid_csv(p);
            return py::make_tuple(g.grid.half_width, g.grid.n_per_side, g.values);
        },
        py::arg("path"));
    m.def("write_grid_csv", &write_grid_csv);
    m.def("read_metrics_csv", &read_metrics_csv);
}
