#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "romfv/fom.hpp"
#include "romfv/interp.hpp"
#include "romfv/mesh.hpp"
#include "romfv/rom.hpp"
#include "romfv/types.hpp"

namespace romfv {

struct PodConfig {
    std::string mode = "per_block";  // "per_block" | "joint"
    Truncation truncation = Truncation::all();
};

struct Thresholds {
    double max_rel_err_pct = 5.0;
    double median_rel_err_pct = 1.5;
};

/// Everything the end-to-end run needs; loadable from JSON (all keys
/// optional, missing ones take these defaults).
struct PipelineConfig {
    std::string mesh_path = "data/unit_square_1024.mesh";
    std::string system = "canonical";
    double gamma = 1.4;
    Mat ranges;  // p x 2; default [0.01, 2]^2
    int train_count = 20;
    std::uint64_t seed = 2024;

    /// Explicit validation points; when empty, validation_count points
    /// are drawn by LHS with validation_seed.
    Mat validation_points;
    int validation_count = 0;
    std::uint64_t validation_seed = 1;

    PodConfig pod;
    Truncation deim_truncation = Truncation::all();
    int interpolation_degree = 2;
    SqpOptions solver;
    double fom_tol = 1e-10;
    int fom_max_iter = 50;
    Thresholds thresholds;
    std::string out_dir = "out";

    PipelineConfig();

    static PipelineConfig from_json_file(const std::string& path);
    void save(const std::string& path) const;
    std::string to_json_string() const;
};

/// The default validation set for the scalar benchmark (12 points).
Mat default_validation_points();

/// 100 * ||fom - rom||_2 / ||fom||_2 over concatenated observables.
double relative_error_pct(const Vec& fom, const Vec& rom);

// -- stages ---------------------------------------------------------------

/// LHS training points plus validation points (tagged roles).
ParameterDesign stage_sample(const PipelineConfig& config);

SnapshotSet stage_snapshots(const PipelineConfig& config, const MeshGeometry& geom,
                            const ParameterDesign& design);

BlockBasis stage_pod(const PipelineConfig& config, const SnapshotSet& snapshots, std::ostream* log = nullptr);

RomDatabase stage_build(const PipelineConfig& config, const MeshGeometry& geom, const SnapshotSet& snapshots,
                        std::ostream* log = nullptr);

struct PredictResult {
    Vec ytil;
    Vec y;      // reconstructed observables
    Vec state;  // restricted state fields
    SqpResult sqp;
    InterpDiagnostics interp;
    double seconds = 0.0;  // interpolate + solve + reconstruct
};

PredictResult rom_predict(const RomDatabase& db, const Vec& theta, const SqpOptions& solver);

struct ValidationPointReport {
    Vec theta;
    double rel_err_pct = 0.0;
    int sqp_iterations = 0;
    bool converged = false;
    double fom_seconds = 0.0;
    double rom_seconds = 0.0;
};

struct ValidationReport {
    std::vector<ValidationPointReport> points;
    double max_pct = 0.0;
    double median_pct = 0.0;
    double fom_seconds = 0.0;
    double rom_seconds = 0.0;
    double speedup = 0.0;
    bool thresholds_met = false;
};

/// Fresh FOM solve and ROM prediction at every validation point of the
/// design; errors over concatenated observables.
ValidationReport stage_validate(const PipelineConfig& config, const MeshGeometry& geom, const RomDatabase& db,
                                const ParameterDesign& design);

/// All stages in order, artifacts persisted under config.out_dir:
/// design.json, snapshots.{romb,manifest.json}, db/, report.{json,csv}.
ValidationReport run_pipeline(const PipelineConfig& config, std::ostream* log = nullptr);

// -- persistence ----------------------------------------------------------

void save_design(const ParameterDesign& design, const std::string& path);
ParameterDesign load_design(const std::string& path);

void write_validation_report(const ValidationReport& report, const std::string& dir);

// -- exports and inspection -----------------------------------------------

/// `cell_id,cx,cy,value` rows, full round-trip precision.
void export_field_csv(const Vec& values, const MeshGeometry& geom, const std::string& path);

/// Legacy VTK 2.0 ASCII unstructured grid with one CELL_DATA scalar.
void export_field_vtk(const Vec& values, const MeshGeometry& geom, const std::string& path,
                      const std::string& field_name = "field");

std::string mesh_info(const MeshGeometry& geom);

}  // namespace romfv
