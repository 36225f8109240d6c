// Python bindings for the main operations: mesh/geometry, operator
// assembly, lifting, sampling, the full-order solve, POD/DEIM and the
// end-to-end pipeline.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>

#include "romfv/deim.hpp"
#include "romfv/fom.hpp"
#include "romfv/fvm.hpp"
#include "romfv/interp.hpp"
#include "romfv/mesh.hpp"
#include "romfv/pipeline.hpp"
#include "romfv/pod.hpp"
#include "romfv/rom.hpp"

namespace py = pybind11;
using namespace romfv;

namespace {

Mat centroid_matrix(const MeshGeometry& g) {
    Mat out(g.n_cells(), 2);
    for (int c = 0; c < g.n_cells(); ++c) out.row(c) = g.cell_centroids[c].transpose();
    return out;
}

Vec area_vector(const MeshGeometry& g) {
    Vec out(g.n_cells());
    for (int c = 0; c < g.n_cells(); ++c) out[c] = g.cell_areas[c];
    return out;
}

py::dict report_to_dict(const ValidationReport& report) {
    py::dict out;
    py::list points;
    for (const auto& p : report.points) {
        py::dict d;
        d["theta"] = p.theta;
        d["rel_err_pct"] = p.rel_err_pct;
        d["sqp_iterations"] = p.sqp_iterations;
        d["converged"] = p.converged;
        points.append(d);
    }
    out["points"] = points;
    out["max_rel_err_pct"] = report.max_pct;
    out["median_rel_err_pct"] = report.median_pct;
    out["speedup"] = report.speedup;
    out["thresholds_met"] = report.thresholds_met;
    return out;
}

}  // namespace

PYBIND11_MODULE(romfv, m) {
    m.doc() = "Non-intrusive projection-based model reduction on finite-volume meshes";

    py::register_exception<Error>(m, "RomfvError");

    py::class_<MeshGeometry, std::shared_ptr<MeshGeometry>>(m, "Geometry")
        .def_property_readonly("n_cells", [](const MeshGeometry& g) { return g.n_cells(); })
        .def_property_readonly("n_nodes", [](const MeshGeometry& g) { return g.mesh.n_nodes(); })
        .def_property_readonly("n_faces", [](const MeshGeometry& g) { return g.n_faces(); })
        .def_property_readonly("n_interior_faces",
                               [](const MeshGeometry& g) { return g.mesh.n_interior_faces(); })
        .def_property_readonly("cell_centroids", &centroid_matrix)
        .def_property_readonly("cell_areas", &area_vector)
        .def("info", &mesh_info);

    m.def("load_geometry",
          [](const std::string& path) { return std::make_shared<MeshGeometry>(load_geometry(path)); },
          py::arg("path"));
    m.def("crosshatch_geometry",
          [](int n) {
              return std::make_shared<MeshGeometry>(compute_geometry(build_connectivity(make_crosshatch_mesh(n))));
          },
          py::arg("n"));
    m.def("diagonal_geometry",
          [](int nx, int ny) {
              return std::make_shared<MeshGeometry>(
                  compute_geometry(build_connectivity(make_diagonal_mesh(nx, ny))));
          },
          py::arg("nx"), py::arg("ny"));
    m.def("save_crosshatch_mesh",
          [](int n, const std::string& path) { save_mesh(make_crosshatch_mesh(n), path); }, py::arg("n"),
          py::arg("path"));

    py::class_<SparseOperator>(m, "SparseOperator")
        .def_property_readonly("n_rows", &SparseOperator::n_rows)
        .def_property_readonly("n_cols", &SparseOperator::n_cols)
        .def_property_readonly("n_nonzeros", &SparseOperator::n_nonzeros)
        .def("apply", &SparseOperator::apply, py::arg("x"))
        .def("to_dense", &SparseOperator::to_dense)
        .def("triplets", [](const SparseOperator& op) {
            std::vector<int> rows, cols;
            std::vector<double> values;
            for (const auto& t : op.entries()) {
                rows.push_back(t.row());
                cols.push_back(t.col());
                values.push_back(t.value());
            }
            return py::make_tuple(rows, cols, values);
        })
        .def("save", &SparseOperator::save, py::arg("path"));

    m.def("assemble_diffusion",
          [](const MeshGeometry& g, const Vec& gamma) { return assemble_diffusion(g, gamma); },
          py::arg("geometry"), py::arg("gamma"));
    m.def("assemble_gradient",
          [](const MeshGeometry& g, const std::string& axis) {
              if (axis != "x" && axis != "y") fail("axis must be 'x' or 'y'");
              return assemble_gradient(g, axis == "x" ? Axis::x : Axis::y);
          },
          py::arg("geometry"), py::arg("axis"));

    py::class_<ObservableSystem, std::shared_ptr<ObservableSystem>>(m, "ObservableSystem")
        .def_property_readonly("name", &ObservableSystem::name)
        .def_property_readonly("n_blocks", &ObservableSystem::n_blocks)
        .def_property_readonly("n_state_fields", &ObservableSystem::n_state_fields)
        .def("lift", &ObservableSystem::lift, py::arg("state"), py::arg("theta"))
        .def("restrict", &ObservableSystem::restrict_state, py::arg("y"))
        .def("constraint_residual", &ObservableSystem::constraint_residual, py::arg("y"), py::arg("theta"));

    m.def("make_system",
          [](const std::string& name, double gamma) {
              return std::const_pointer_cast<ObservableSystem>(make_system(name, gamma));
          },
          py::arg("name"), py::arg("gamma") = 1.4);

    m.def("lhs_sample",
          [](const Mat& ranges, int count, std::uint64_t seed) { return lhs_sample(ranges, count, seed).points; },
          py::arg("ranges"), py::arg("count"), py::arg("seed"));

    m.def("solve_canonical",
          [](const MeshGeometry& g, double mu1, double mu2, double tol, int max_iter) {
              NewtonOptions options;
              options.tol = tol;
              options.max_iter = max_iter;
              return CanonicalFom(g).solve(Vec2(mu1, mu2), options, nullptr);
          },
          py::arg("geometry"), py::arg("mu1"), py::arg("mu2"), py::arg("tol") = 1e-10,
          py::arg("max_iter") = 50);

    m.def("compute_pod",
          [](const Mat& snapshots, int k, double energy) {
              const Truncation trunc = k >= 0 ? Truncation::fixed_k(k)
                                              : (energy > 0 ? Truncation::energy(energy) : Truncation::all());
              const PodBasis basis = compute_pod(snapshots, trunc);
              return py::make_tuple(basis.phi, basis.sigma, basis.k);
          },
          py::arg("snapshots"), py::arg("k") = -1, py::arg("energy") = -1.0);

    m.def("deim_select_points", &deim_select_points, py::arg("basis"));
    m.def("relative_error_pct", &relative_error_pct, py::arg("reference"), py::arg("prediction"));

    m.def("run_pipeline",
          [](const std::string& config_path, const std::string& out_dir) {
              PipelineConfig config = PipelineConfig::from_json_file(config_path);
              if (!out_dir.empty()) config.out_dir = out_dir;
              return report_to_dict(run_pipeline(config));
          },
          py::arg("config_path"), py::arg("out_dir") = "");

    m.def("predict",
          [](const std::string& db_dir, const Vec& theta) {
              const RomDatabase db = RomDatabase::load(db_dir);
              const PredictResult result = rom_predict(db, theta, SqpOptions{});
              py::dict out;
              out["state"] = result.state;
              out["observables"] = result.y;
              out["reduced"] = result.ytil;
              out["iterations"] = result.sqp.iterations;
              out["converged"] = result.sqp.converged;
              out["objective"] = result.sqp.objective;
              out["seconds"] = result.seconds;
              return out;
          },
          py::arg("db_dir"), py::arg("theta"));
}
