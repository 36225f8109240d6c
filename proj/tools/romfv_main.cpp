// Command-line front end: pipeline stages, prediction, validation and
// field/operator export. Exit codes: 0 success, 1 validation thresholds
// not met, 2 any error.

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "romfv/fvm.hpp"
#include "romfv/pipeline.hpp"
#include "romfv/romb_io.hpp"

namespace {

struct GlobalArgs {
    std::string config;
    std::string mesh;
    std::string out;
    std::uint64_t seed = 0;
    bool seed_set = false;
};

romfv::PipelineConfig load_config(const GlobalArgs& args) {
    if (args.config.empty()) romfv::fail("missing --config");
    romfv::PipelineConfig config = romfv::PipelineConfig::from_json_file(args.config);
    if (!args.mesh.empty()) config.mesh_path = args.mesh;
    if (!args.out.empty()) config.out_dir = args.out;
    if (args.seed_set) config.seed = args.seed;
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Non-intrusive projection-based model reduction for steady parametric PDEs"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalArgs args;
    app.add_option("--config", args.config, "Pipeline config (JSON)");
    app.add_option("--mesh", args.mesh, "Mesh file override");
    app.add_option("--out", args.out, "Output directory override");
    auto* seed_opt = app.add_option("--seed", args.seed, "Seed override");

    auto* cmd_mesh_info = app.add_subcommand("mesh-info", "Load a mesh and print connectivity/geometry facts");
    auto* cmd_sample = app.add_subcommand("sample", "Draw the training design (LHS) and validation points");
    auto* cmd_snapshots = app.add_subcommand("snapshots", "Solve the full-order model at the training points");
    auto* cmd_pod = app.add_subcommand("pod", "Extract the trial basis from persisted snapshots");
    auto* cmd_build = app.add_subcommand("build", "Build and persist the reduced-model database");
    auto* cmd_predict = app.add_subcommand("predict", "Interpolate, solve and reconstruct at a parameter point");
    auto* cmd_validate = app.add_subcommand("validate", "Compare predictions against fresh full-order solves");
    auto* cmd_export = app.add_subcommand("export", "Export a cell field (csv/vtk) or an assembled operator");
    auto* cmd_run = app.add_subcommand("run", "Run the whole pipeline end to end");

    std::vector<double> predict_theta;
    cmd_predict->add_option("theta", predict_theta, "Parameter values")->expected(2);
    std::string predict_db, predict_export;
    cmd_predict->add_option("--db", predict_db, "Database directory (default <out>/db)");
    cmd_predict->add_option("--export-state", predict_export, "Write the predicted state field as CSV");

    std::string export_field_path, export_format = "csv", export_out, export_operator;
    cmd_export->add_option("--field", export_field_path, "Cell field to export (single-column ROMB file)");
    cmd_export->add_option("--format", export_format, "csv | vtk")->check(CLI::IsMember({"csv", "vtk"}));
    cmd_export->add_option("--operator", export_operator, "Assemble and export an operator: diffusion | grad_x | grad_y");
    cmd_export->add_option("--output", export_out, "Output file")->required();

    CLI11_PARSE(app, argc, argv);
    args.seed_set = seed_opt->count() > 0;

    try {
        if (cmd_mesh_info->parsed()) {
            std::string mesh_path = args.mesh;
            if (mesh_path.empty() && !args.config.empty()) mesh_path = load_config(args).mesh_path;
            if (mesh_path.empty()) romfv::fail("mesh-info: pass --mesh or --config");
            std::cout << romfv::mesh_info(romfv::load_geometry(mesh_path));
            return 0;
        }

        if (cmd_sample->parsed()) {
            const auto config = load_config(args);
            std::filesystem::create_directories(config.out_dir);
            const auto design = romfv::stage_sample(config);
            romfv::save_design(design, config.out_dir + "/design.json");
            std::cout << "wrote " << config.out_dir << "/design.json (" << design.count() << " points)\n";
            return 0;
        }

        if (cmd_snapshots->parsed()) {
            const auto config = load_config(args);
            const auto geom = romfv::load_geometry(config.mesh_path);
            const auto design = romfv::load_design(config.out_dir + "/design.json");
            const auto snapshots = romfv::stage_snapshots(config, geom, design);
            snapshots.save(config.out_dir + "/snapshots");
            std::cout << "wrote " << config.out_dir << "/snapshots.romb (" << snapshots.count() << " columns)\n";
            return 0;
        }

        if (cmd_pod->parsed()) {
            const auto config = load_config(args);
            const auto snapshots = romfv::SnapshotSet::load(config.out_dir + "/snapshots");
            const auto basis = romfv::stage_pod(config, snapshots, &std::cout);
            std::filesystem::create_directories(config.out_dir + "/pod");
            romfv::save_matrix(config.out_dir + "/pod/basis.romb", basis.full());
            std::cout << "wrote " << config.out_dir << "/pod/basis.romb (k = " << basis.k() << ")\n";
            return 0;
        }

        if (cmd_build->parsed()) {
            const auto config = load_config(args);
            const auto geom = romfv::load_geometry(config.mesh_path);
            const auto snapshots = romfv::SnapshotSet::load(config.out_dir + "/snapshots");
            const auto db = romfv::stage_build(config, geom, snapshots, &std::cout);
            db.save(config.out_dir + "/db");
            std::cout << "wrote " << config.out_dir << "/db\n";
            return 0;
        }

        if (cmd_predict->parsed()) {
            const auto config = load_config(args);
            const std::string db_dir = predict_db.empty() ? config.out_dir + "/db" : predict_db;
            const auto db = romfv::RomDatabase::load(db_dir);
            romfv::Vec theta(2);
            theta << predict_theta[0], predict_theta[1];
            const auto result = romfv::rom_predict(db, theta, config.solver);
            std::cout << "theta: (" << theta[0] << ", " << theta[1] << ")\n"
                      << "sqp:   " << result.sqp.iterations << " iterations, objective "
                      << result.sqp.objective << ", feasibility " << result.sqp.feas_inf
                      << (result.sqp.converged ? "" : " (NOT converged)") << "\n"
                      << "time:  " << result.seconds << " s (interpolate + solve + reconstruct)\n";
            if (result.interp.extrapolated)
                std::cerr << "warning: theta lies outside the training box (extrapolation)\n";
            if (!predict_export.empty()) {
                const auto geom = romfv::load_geometry(config.mesh_path);
                romfv::export_field_csv(result.state.head(geom.n_cells()), geom, predict_export);
                std::cout << "wrote " << predict_export << "\n";
            }
            return 0;
        }

        if (cmd_validate->parsed()) {
            const auto config = load_config(args);
            const auto geom = romfv::load_geometry(config.mesh_path);
            const auto design = romfv::load_design(config.out_dir + "/design.json");
            const auto db = romfv::RomDatabase::load(config.out_dir + "/db");
            const auto report = romfv::stage_validate(config, geom, db, design);
            romfv::write_validation_report(report, config.out_dir);
            std::cout << "max " << report.max_pct << "%, median " << report.median_pct << "%, speedup x"
                      << report.speedup << "\n";
            return report.thresholds_met ? 0 : 1;
        }

        if (cmd_export->parsed()) {
            if (!export_operator.empty()) {
                std::string mesh_path = args.mesh;
                if (mesh_path.empty() && !args.config.empty()) mesh_path = load_config(args).mesh_path;
                if (mesh_path.empty()) romfv::fail("export: pass --mesh or --config for operator assembly");
                const auto geom = romfv::load_geometry(mesh_path);
                romfv::SparseOperator op;
                if (export_operator == "diffusion")
                    op = romfv::assemble_diffusion(geom, romfv::Vec::Ones(geom.n_cells()));
                else if (export_operator == "grad_x")
                    op = romfv::assemble_gradient(geom, romfv::Axis::x);
                else if (export_operator == "grad_y")
                    op = romfv::assemble_gradient(geom, romfv::Axis::y);
                else
                    romfv::fail("export: unknown operator '" + export_operator + "'");
                op.save(export_out);
                std::cout << "wrote " << export_out << " (" << op.n_nonzeros() << " entries)\n";
                return 0;
            }
            if (export_field_path.empty()) romfv::fail("export: pass --field or --operator");
            std::string mesh_path = args.mesh;
            if (mesh_path.empty() && !args.config.empty()) mesh_path = load_config(args).mesh_path;
            if (mesh_path.empty()) romfv::fail("export: pass --mesh or --config");
            const auto geom = romfv::load_geometry(mesh_path);
            const romfv::Vec field = romfv::load_vector(export_field_path);
            if (export_format == "csv")
                romfv::export_field_csv(field, geom, export_out);
            else
                romfv::export_field_vtk(field, geom, export_out);
            std::cout << "wrote " << export_out << "\n";
            return 0;
        }

        if (cmd_run->parsed()) {
            const auto config = load_config(args);
            const auto report = romfv::run_pipeline(config, &std::cout);
            return report.thresholds_met ? 0 : 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
