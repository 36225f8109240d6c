#include "romfv/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "nlohmann/json.hpp"

namespace romfv {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

double now_seconds() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

Truncation truncation_from_json(const json& j) {
    const std::string rule = j.value("rule", "all");
    if (rule == "all") return Truncation::all();
    if (rule == "fixed") return Truncation::fixed_k(j.at("k").get<int>());
    if (rule == "energy") return Truncation::energy(j.at("fraction").get<double>());
    fail("config: unknown truncation rule '" + rule + "'");
}

ordered_json truncation_to_json(const Truncation& t) {
    ordered_json j;
    if (t.rule == Truncation::Rule::energy) {
        j["rule"] = "energy";
        j["fraction"] = t.fraction;
    } else if (t.k < 0) {
        j["rule"] = "all";
    } else {
        j["rule"] = "fixed";
        j["k"] = t.k;
    }
    return j;
}

Mat mat_from_json_rows(const json& rows) {
    Mat m(rows.size(), rows.empty() ? 0 : rows[0].size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j].get<double>();
    return m;
}

ordered_json mat_to_json_rows(const Mat& m) {
    auto rows = ordered_json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        auto row = ordered_json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

}  // namespace

PipelineConfig::PipelineConfig() {
    ranges.resize(2, 2);
    ranges << 0.01, 2.0, 0.01, 2.0;
    validation_points = default_validation_points();
}

Mat default_validation_points() {
    Mat v(12, 2);
    v << 0.94, 1.90, 0.45, 0.54, 0.70, 0.86, 1.61, 1.40, 1.53, 0.69, 1.69, 0.86,
         1.65, 1.26, 0.30, 0.17, 0.91, 0.91, 0.96, 0.95, 1.61, 0.81, 1.81, 0.08;
    return v;
}

PipelineConfig PipelineConfig::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("config: cannot open '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        fail("config: parse error in '" + path + "': " + e.what());
    }

    PipelineConfig c;
    c.mesh_path = j.value("mesh", c.mesh_path);
    c.system = j.value("system", c.system);
    c.gamma = j.value("gamma", c.gamma);
    if (j.contains("ranges")) c.ranges = mat_from_json_rows(j["ranges"]);
    c.train_count = j.value("train_count", c.train_count);
    c.seed = j.value("seed", c.seed);
    if (j.contains("validation")) {
        const auto& v = j["validation"];
        if (v.contains("points")) {
            c.validation_points = mat_from_json_rows(v["points"]);
            c.validation_count = 0;
        } else {
            c.validation_points.resize(0, 0);
            c.validation_count = v.value("count", 0);
            c.validation_seed = v.value("seed", c.validation_seed);
        }
    }
    if (j.contains("pod")) {
        c.pod.mode = j["pod"].value("mode", c.pod.mode);
        if (j["pod"].contains("truncation")) c.pod.truncation = truncation_from_json(j["pod"]["truncation"]);
    }
    if (j.contains("deim") && j["deim"].contains("truncation"))
        c.deim_truncation = truncation_from_json(j["deim"]["truncation"]);
    c.interpolation_degree = j.value("interpolation_degree", c.interpolation_degree);
    if (j.contains("solver")) {
        const auto& s = j["solver"];
        c.solver.tol_kkt = s.value("tol_kkt", c.solver.tol_kkt);
        c.solver.tol_feas = s.value("tol_feas", c.solver.tol_feas);
        c.solver.max_iter = s.value("max_iter", c.solver.max_iter);
        c.solver.levenberg = s.value("levenberg", c.solver.levenberg);
    }
    if (j.contains("fom")) {
        c.fom_tol = j["fom"].value("tol", c.fom_tol);
        c.fom_max_iter = j["fom"].value("max_iter", c.fom_max_iter);
    }
    if (j.contains("thresholds")) {
        c.thresholds.max_rel_err_pct = j["thresholds"].value("max_rel_err_pct", c.thresholds.max_rel_err_pct);
        c.thresholds.median_rel_err_pct =
            j["thresholds"].value("median_rel_err_pct", c.thresholds.median_rel_err_pct);
    }
    c.out_dir = j.value("out", c.out_dir);

    // Relative mesh paths resolve against the config file's directory.
    namespace fs = std::filesystem;
    if (!c.mesh_path.empty() && fs::path(c.mesh_path).is_relative()) {
        const fs::path base = fs::path(path).parent_path();
        if (!base.empty()) c.mesh_path = (base / c.mesh_path).lexically_normal().string();
    }

    if (c.pod.mode != "per_block" && c.pod.mode != "joint")
        fail("config: pod.mode must be 'per_block' or 'joint'");
    if (c.interpolation_degree != 1 && c.interpolation_degree != 2)
        fail("config: interpolation_degree must be 1 or 2");
    if (c.train_count < 1) fail("config: train_count must be >= 1");
    return c;
}

std::string PipelineConfig::to_json_string() const {
    ordered_json j;
    j["mesh"] = mesh_path;
    j["system"] = system;
    j["gamma"] = gamma;
    j["ranges"] = mat_to_json_rows(ranges);
    j["train_count"] = train_count;
    j["seed"] = seed;
    if (validation_points.rows() > 0) {
        j["validation"]["points"] = mat_to_json_rows(validation_points);
    } else {
        j["validation"]["count"] = validation_count;
        j["validation"]["seed"] = validation_seed;
    }
    j["pod"]["mode"] = pod.mode;
    j["pod"]["truncation"] = truncation_to_json(pod.truncation);
    j["deim"]["truncation"] = truncation_to_json(deim_truncation);
    j["interpolation_degree"] = interpolation_degree;
    j["solver"] = {{"tol_kkt", solver.tol_kkt},
                   {"tol_feas", solver.tol_feas},
                   {"max_iter", solver.max_iter},
                   {"levenberg", solver.levenberg}};
    j["fom"] = {{"tol", fom_tol}, {"max_iter", fom_max_iter}};
    j["thresholds"] = {{"max_rel_err_pct", thresholds.max_rel_err_pct},
                       {"median_rel_err_pct", thresholds.median_rel_err_pct}};
    j["out"] = out_dir;
    return j.dump(2) + "\n";
}

void PipelineConfig::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) fail("config: cannot write '" + path + "'");
    out << to_json_string();
}

double relative_error_pct(const Vec& fom, const Vec& rom) {
    if (fom.size() != rom.size()) fail("relative_error: length mismatch");
    const double ref = fom.norm();
    if (!(ref > 0.0)) fail("relative_error: reference vector has zero norm");
    return 100.0 * (fom - rom).norm() / ref;
}

ParameterDesign stage_sample(const PipelineConfig& config) {
    ParameterDesign design = lhs_sample(config.ranges, config.train_count, config.seed);
    Mat validation = config.validation_points;
    if (validation.rows() == 0 && config.validation_count > 0)
        validation = lhs_sample(config.ranges, config.validation_count, config.validation_seed).points;

    const int m_train = design.count();
    const int m_total = m_train + static_cast<int>(validation.rows());
    Mat points(m_total, design.points.cols());
    points.topRows(m_train) = design.points;
    if (validation.rows() > 0) points.bottomRows(validation.rows()) = validation;
    design.points = points;
    design.roles.resize(m_total, "validate");
    return design;
}

SnapshotSet stage_snapshots(const PipelineConfig& config, const MeshGeometry& geom,
                            const ParameterDesign& design) {
    NewtonOptions options;
    options.tol = config.fom_tol;
    options.max_iter = config.fom_max_iter;
    const auto system = make_system(config.system, config.gamma);
    SnapshotSet snapshots = generate_snapshots(geom, *system, design, options);
    snapshots.mesh_path = config.mesh_path;
    return snapshots;
}

BlockBasis stage_pod(const PipelineConfig& config, const SnapshotSet& snapshots, std::ostream* log) {
    if (!snapshots.system.empty() && snapshots.system != config.system)
        fail("pod stage: snapshots were generated for system '" + snapshots.system +
             "' but the config selects '" + config.system + "'");
    const auto system = make_system(config.system, config.gamma);
    const int n_blocks = system->n_blocks();
    const int n = snapshots.n_cells;
    if (snapshots.u.rows() != static_cast<Eigen::Index>(n_blocks) * n)
        fail("pod stage: snapshot rows do not match the system's block count");

    BlockBasis basis;
    if (config.pod.mode == "joint") {
        PodBasis joint = compute_pod(snapshots.u, config.pod.truncation, "joint");
        if (log && joint.clamped)
            *log << "pod: joint basis clamped to numerical rank " << joint.k << "\n";
        basis = BlockBasis::joint(std::move(joint), n_blocks);
    } else {
        std::vector<PodBasis> blocks;
        blocks.reserve(n_blocks);
        for (int b = 0; b < n_blocks; ++b) {
            PodBasis pb = compute_pod(snapshots.u.middleRows(static_cast<Eigen::Index>(b) * n, n),
                                      config.pod.truncation, "block" + std::to_string(b));
            if (log && pb.clamped)
                *log << "pod: block " << b << " clamped to numerical rank " << pb.k << "\n";
            blocks.push_back(std::move(pb));
        }
        basis = assemble_block_basis(std::move(blocks));
    }
    if (log) *log << "pod: assembled trial basis with k = " << basis.k() << "\n";
    return basis;
}

RomDatabase stage_build(const PipelineConfig& config, const MeshGeometry& geom, const SnapshotSet& snapshots,
                        std::ostream* log) {
    if (snapshots.n_cells != geom.n_cells())
        fail("build stage: snapshots hold " + std::to_string(snapshots.n_cells) + " cells, mesh has " +
             std::to_string(geom.n_cells()));
    const auto system = make_system(config.system, config.gamma);
    BlockBasis basis = stage_pod(config, snapshots, log);

    BlockOperator a = (config.system == "canonical") ? make_canonical_operator(geom)
                                                     : make_euler_operator(geom);
    const Mat a_phi = projected_operator(a, basis);

    RomDatabase db;
    db.system_name = config.system;
    db.gamma = config.gamma;
    db.ranges = config.ranges;
    db.seed = config.seed;
    db.pod_mode = config.pod.mode;
    db.pod_truncation = truncation_to_json(config.pod.truncation).dump();
    db.mesh_path = config.mesh_path;
    db.n_cells = geom.n_cells();
    db.interpolation_degree = config.interpolation_degree;
    db.thetas = snapshots.thetas;

    const int m = snapshots.count();
    db.instances.reserve(m);
    db.train_coords.resize(basis.k(), m);
    for (int j = 0; j < m; ++j) {
        const Vec y = snapshots.u.col(j);
        const Vec f = recover_rhs(a, y);
        db.instances.push_back(project_with(a_phi, f, snapshots.thetas.row(j).transpose()));
        db.train_coords.col(j) = basis.project(y);
    }

    DeimOptions deim_options;
    deim_options.truncation = config.deim_truncation;
    db.constraints = build_reduced_constraints(system, basis, snapshots.u, snapshots.thetas, deim_options);
    db.basis = std::move(basis);
    if (log) *log << "build: " << m << " reduced systems of size " << db.k() << "\n";
    return db;
}

PredictResult rom_predict(const RomDatabase& db, const Vec& theta, const SqpOptions& solver) {
    PredictResult result;
    const double t0 = now_seconds();
    const RomInstance instance = interpolate_rom(db, theta, &result.interp);

    // Warm start: projected coordinates of the nearest training snapshot.
    const std::vector<int> nearest = nearest_neighbors(db.thetas, theta, 1, db.ranges);
    const Vec ytil0 = db.train_coords.col(nearest[0]);

    const ReducedConstraints* constraints = db.constraints.empty() ? nullptr : &db.constraints;
    result.sqp = solve_rom(instance, constraints, theta, ytil0, solver);
    result.ytil = result.sqp.ytil;
    result.y = reconstruct(db.basis, result.ytil);
    result.seconds = now_seconds() - t0;

    result.state = db.constraints.system ? db.constraints.system->restrict_state(result.y)
                                         : make_system(db.system_name, db.gamma)->restrict_state(result.y);
    return result;
}

ValidationReport stage_validate(const PipelineConfig& config, const MeshGeometry& geom, const RomDatabase& db,
                                const ParameterDesign& design) {
    const auto system = make_system(config.system, config.gamma);
    const auto validate_ids = design.indices_with_role("validate");
    if (validate_ids.empty()) fail("validate: design has no validation points");

    NewtonOptions fom_options;
    fom_options.tol = config.fom_tol;
    fom_options.max_iter = config.fom_max_iter;

    ValidationReport report;
    std::vector<double> errors;
    for (int idx : validate_ids) {
        const Vec theta = design.points.row(idx).transpose();

        const double f0 = now_seconds();
        CanonicalFom fom(geom);  // a fresh solve, assembly included
        const Vec u_fom = fom.solve(Vec2(theta[0], theta[1]), fom_options);
        const double fom_seconds = now_seconds() - f0;
        const Vec y_fom = system->lift(u_fom, theta);

        const PredictResult pred = rom_predict(db, theta, config.solver);

        ValidationPointReport point;
        point.theta = theta;
        point.rel_err_pct = relative_error_pct(y_fom, pred.y);
        point.sqp_iterations = pred.sqp.iterations;
        point.converged = pred.sqp.converged;
        point.fom_seconds = fom_seconds;
        point.rom_seconds = pred.seconds;
        report.fom_seconds += fom_seconds;
        report.rom_seconds += pred.seconds;
        errors.push_back(point.rel_err_pct);
        report.points.push_back(std::move(point));
    }

    report.max_pct = *std::max_element(errors.begin(), errors.end());
    std::vector<double> sorted = errors;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t h = sorted.size() / 2;
    report.median_pct = (sorted.size() % 2 == 1) ? sorted[h] : 0.5 * (sorted[h - 1] + sorted[h]);
    report.speedup = report.rom_seconds > 0.0 ? report.fom_seconds / report.rom_seconds : 0.0;
    report.thresholds_met = report.max_pct < config.thresholds.max_rel_err_pct &&
                            report.median_pct < config.thresholds.median_rel_err_pct;
    return report;
}

ValidationReport run_pipeline(const PipelineConfig& config, std::ostream* log) {
    namespace fs = std::filesystem;
    fs::create_directories(config.out_dir);
    fs::remove(config.out_dir + "/INVALID");

    const char* stage = "mesh";
    try {
        const MeshGeometry geom = load_geometry(config.mesh_path);
        if (log) *log << "mesh: " << geom.n_cells() << " cells, " << geom.mesh.n_nodes() << " nodes, "
                      << geom.n_faces() << " faces\n";

        stage = "sample";
        const ParameterDesign design = stage_sample(config);
        save_design(design, config.out_dir + "/design.json");

        stage = "snapshots";
        const SnapshotSet snapshots = stage_snapshots(config, geom, design);
        snapshots.save(config.out_dir + "/snapshots");
        if (log) *log << "snapshots: " << snapshots.count() << " columns of " << snapshots.u.rows() << "\n";

        stage = "build";
        RomDatabase db = stage_build(config, geom, snapshots, log);
        db.save(config.out_dir + "/db");

        stage = "validate";
        const ValidationReport report = stage_validate(config, geom, db, design);
        write_validation_report(report, config.out_dir);
        if (log) {
            *log << "validate: max " << report.max_pct << "%, median " << report.median_pct
                 << "%, speedup x" << report.speedup << "\n";
        }
        return report;
    } catch (const std::exception& e) {
        // Mark the partially written output tree invalid before rethrowing.
        std::ofstream marker(config.out_dir + "/INVALID");
        marker << "stage " << stage << ": " << e.what() << "\n";
        fail(std::string("pipeline stage '") + stage + "' failed: " + e.what());
    }
}

void save_design(const ParameterDesign& design, const std::string& path) {
    ordered_json j;
    j["format"] = "romfv-design-1";
    j["seed"] = design.seed;
    j["ranges"] = mat_to_json_rows(design.ranges);
    auto points = ordered_json::array();
    for (int i = 0; i < design.count(); ++i) {
        auto theta = ordered_json::array();
        for (Eigen::Index c = 0; c < design.points.cols(); ++c) theta.push_back(design.points(i, c));
        points.push_back({{"theta", theta}, {"role", design.roles[i]}});
    }
    j["points"] = points;
    std::ofstream out(path);
    if (!out) fail("design: cannot write '" + path + "'");
    out << j.dump(2) << "\n";
}

ParameterDesign load_design(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("design: cannot open '" + path + "'");
    json j = json::parse(in);
    if (j.at("format").get<std::string>() != "romfv-design-1") fail("design: unknown format");
    ParameterDesign design;
    design.seed = j.at("seed").get<std::uint64_t>();
    design.ranges = mat_from_json_rows(j.at("ranges"));
    const auto& points = j.at("points");
    design.points.resize(points.size(), design.ranges.rows());
    design.roles.resize(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto& theta = points[i].at("theta");
        for (std::size_t c = 0; c < theta.size(); ++c) design.points(i, c) = theta[c].get<double>();
        design.roles[i] = points[i].at("role").get<std::string>();
    }
    return design;
}

void write_validation_report(const ValidationReport& report, const std::string& dir) {
    std::filesystem::create_directories(dir);

    ordered_json j;
    auto points = ordered_json::array();
    for (const auto& p : report.points) {
        auto theta = ordered_json::array();
        for (Eigen::Index c = 0; c < p.theta.size(); ++c) theta.push_back(p.theta[c]);
        points.push_back({{"theta", theta},
                          {"rel_err_pct", p.rel_err_pct},
                          {"sqp_iterations", p.sqp_iterations},
                          {"converged", p.converged},
                          {"fom_seconds", p.fom_seconds},
                          {"rom_seconds", p.rom_seconds}});
    }
    j["points"] = points;
    j["summary"] = {{"max_rel_err_pct", report.max_pct},
                    {"median_rel_err_pct", report.median_pct},
                    {"fom_seconds", report.fom_seconds},
                    {"rom_seconds", report.rom_seconds},
                    {"speedup", report.speedup},
                    {"thresholds_met", report.thresholds_met}};
    std::ofstream out(dir + "/report.json");
    if (!out) fail("report: cannot write '" + dir + "/report.json'");
    out << j.dump(2) << "\n";

    std::ofstream csv(dir + "/report.csv");
    if (!csv) fail("report: cannot write '" + dir + "/report.csv'");
    csv << "case";
    for (Eigen::Index c = 0; c < (report.points.empty() ? 0 : report.points.front().theta.size()); ++c)
        csv << ",theta" << c + 1;
    csv << ",rel_err_pct,sqp_iterations,converged,fom_seconds,rom_seconds\n";
    for (std::size_t i = 0; i < report.points.size(); ++i) {
        const auto& p = report.points[i];
        csv << i + 1;
        for (Eigen::Index c = 0; c < p.theta.size(); ++c) csv << "," << fmt_double(p.theta[c]);
        csv << "," << fmt_double(p.rel_err_pct) << "," << p.sqp_iterations << "," << (p.converged ? 1 : 0)
            << "," << fmt_double(p.fom_seconds) << "," << fmt_double(p.rom_seconds) << "\n";
    }
}

void export_field_csv(const Vec& values, const MeshGeometry& geom, const std::string& path) {
    if (values.size() != geom.n_cells()) fail("export: field length does not match the mesh");
    std::ofstream out(path);
    if (!out) fail("export: cannot write '" + path + "'");
    out << "cell_id,cx,cy,value\n";
    for (int c = 0; c < geom.n_cells(); ++c) {
        out << c << "," << fmt_double(geom.cell_centroids[c].x()) << ","
            << fmt_double(geom.cell_centroids[c].y()) << "," << fmt_double(values[c]) << "\n";
    }
    if (!out) fail("export: write failed for '" + path + "'");
}

void export_field_vtk(const Vec& values, const MeshGeometry& geom, const std::string& path,
                      const std::string& field_name) {
    if (values.size() != geom.n_cells()) fail("export: field length does not match the mesh");
    const Mesh& m = geom.mesh;
    std::ofstream out(path);
    if (!out) fail("export: cannot write '" + path + "'");
    out << "# vtk DataFile Version 2.0\n";
    out << "romfv field export\n";
    out << "ASCII\n";
    out << "DATASET UNSTRUCTURED_GRID\n";
    out << "POINTS " << m.n_nodes() << " double\n";
    for (const auto& p : m.raw.nodes) out << fmt_double(p.x()) << " " << fmt_double(p.y()) << " 0\n";
    out << "CELLS " << m.n_cells() << " " << 4 * m.n_cells() << "\n";
    for (const auto& cell : m.raw.cells) out << "3 " << cell[0] << " " << cell[1] << " " << cell[2] << "\n";
    out << "CELL_TYPES " << m.n_cells() << "\n";
    for (int c = 0; c < m.n_cells(); ++c) out << "5\n";  // VTK_TRIANGLE
    out << "CELL_DATA " << m.n_cells() << "\n";
    out << "SCALARS " << field_name << " double 1\n";
    out << "LOOKUP_TABLE default\n";
    for (int c = 0; c < m.n_cells(); ++c) out << fmt_double(values[c]) << "\n";
    if (!out) fail("export: write failed for '" + path + "'");
}

std::string mesh_info(const MeshGeometry& geom) {
    const Mesh& m = geom.mesh;
    double min_area = std::numeric_limits<double>::infinity(), max_area = 0.0;
    for (double a : geom.cell_areas) {
        min_area = std::min(min_area, a);
        max_area = std::max(max_area, a);
    }
    double worst_closure = 0.0;
    for (int c = 0; c < m.n_cells(); ++c) {
        Vec2 closure = Vec2::Zero();
        double perimeter = 0.0;
        for (int f : m.cell_faces[c]) {
            const double sign = (m.face_cells[f][0] == c) ? 1.0 : -1.0;
            closure += sign * geom.face_areas[f] * geom.face_normals[f];
            perimeter += geom.face_areas[f];
        }
        worst_closure = std::max(worst_closure, closure.norm() / perimeter);
    }
    double worst_weight = 0.0;
    for (const auto& w : geom.node_weights) {
        double sum = 0.0;
        for (double wi : w) sum += wi;
        worst_weight = std::max(worst_weight, std::abs(sum - 1.0));
    }

    std::ostringstream out;
    out << "cells:           " << m.n_cells() << "\n";
    out << "nodes:           " << m.n_nodes() << "\n";
    out << "faces:           " << m.n_faces() << " (" << m.n_interior_faces() << " interior, "
        << m.n_boundary_faces() << " boundary)\n";
    out << "cell area:       [" << min_area << ", " << max_area << "]\n";
    out << "surface closure: " << worst_closure << " (max over cells, relative to perimeter)\n";
    out << "node weights:    " << worst_weight << " (max |sum - 1| over vertices)\n";
    const int euler = m.n_nodes() - m.n_faces() + m.n_cells() + 1;  // + outer face
    out << "euler relation:  V - E + F = " << euler << (euler == 2 ? " (ok)" : " (violated)") << "\n";
    return out.str();
}

}  // namespace romfv
