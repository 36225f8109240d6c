// Acceptance suite: one pass/fail line per criterion, nonzero exit when
// any criterion fails. Each criterion states its measured numbers so a
// failure is diagnosable from the log alone.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "romfv/deim.hpp"
#include "romfv/fom.hpp"
#include "romfv/fvm.hpp"
#include "romfv/interp.hpp"
#include "romfv/pipeline.hpp"
#include "romfv/pod.hpp"
#include "romfv/rng.hpp"
#include "romfv/rom.hpp"

using namespace romfv;
using namespace romfv::test;

namespace {

int failures = 0;

void report(int number, const std::string& name, bool pass, const std::string& detail) {
    std::printf("[%s] criterion %d: %s — %s\n", pass ? "PASS" : "FAIL", number, name.c_str(),
                detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t h = v.size() / 2;
    return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

double now_s() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

PipelineConfig canonical_config(const std::string& mode) {
    PipelineConfig config;  // defaults: M = 20, seed 2024, 12 validation points
    config.pod.mode = mode;
    if (mode == "joint") config.deim_truncation = Truncation::energy(0.9999);
    return config;
}

struct CanonicalRun {
    MeshGeometry geom;
    RomDatabase db;
    ValidationReport report;
};

CanonicalRun run_canonical(const PipelineConfig& config) {
    CanonicalRun run{compute_geometry(build_connectivity(make_crosshatch_mesh(16))), {}, {}};
    const ParameterDesign design = stage_sample(config);
    const SnapshotSet snapshots = stage_snapshots(config, run.geom, design);
    run.db = stage_build(config, run.geom, snapshots);
    run.report = stage_validate(config, run.geom, run.db, design);
    return run;
}

std::string errors_line(const ValidationReport& r) {
    char buf[64];
    std::string out;
    for (const auto& p : r.points) {
        std::snprintf(buf, sizeof(buf), "%.3g%% ", p.rel_err_pct);
        out += buf;
    }
    return out;
}

// ---------------------------------------------------------------------------

CanonicalRun criterion_1() {
    const CanonicalRun per_block = run_canonical(canonical_config("per_block"));
    const CanonicalRun joint = run_canonical(canonical_config("joint"));

    const bool pb_ok = per_block.report.max_pct < 5.0 && per_block.report.median_pct < 1.5;
    const bool joint_ok = joint.report.max_pct < 5.0 && joint.report.median_pct < 1.5;

    char buf[512];
    std::snprintf(buf, sizeof(buf),
                  "per-block: max %.4g%%, median %.4g%% (%s); joint: max %.4g%%, median %.4g%% (%s); "
                  "per-block errors: %s",
                  per_block.report.max_pct, per_block.report.median_pct, pb_ok ? "meets" : "misses",
                  joint.report.max_pct, joint.report.median_pct, joint_ok ? "meets" : "misses",
                  errors_line(per_block.report).c_str());
    report(1, "canonical end-to-end accuracy (M=20, untruncated, 12 validation points)",
           pb_ok || joint_ok, buf);
    return per_block;
}

void criterion_2() {
    Rng rng(1002);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const int rows = 5 + static_cast<int>(rng.below(496));
        const int cols = 2 + static_cast<int>(rng.below(29));
        const Mat u = random_matrix(rng, rows, cols);
        const PodBasis full = compute_pod(u, Truncation::all());
        const int k = static_cast<int>(rng.below(full.numerical_rank)) ;
        const PodBasis basis = compute_pod(u, Truncation::fixed_k(k));
        const double direct = projection_error(u, basis.phi);
        const double tail = basis.tail_energy(basis.k);
        worst = std::max(worst, std::abs(direct - tail) / u.squaredNorm());
    }
    char buf[128];
    std::snprintf(buf, sizeof(buf), "max |direct - sigma tail| / ||U||_F^2 = %.3g (limit 1e-8)", worst);
    report(2, "projection-error identity on 20 random matrices up to 500x30", worst <= 1e-8, buf);
}

void criterion_3() {
    Rng rng(1003);
    double worst_span = 0.0;
    const Mat x = random_orthonormal(rng, 40, 6);
    const auto points = deim_select_points(x);
    for (int trial = 0; trial < 10; ++trial) {
        const Vec v = x * random_vector(rng, 6);
        worst_span = std::max(worst_span, (deim_reconstruct(x, points, v) - v).norm() / v.norm());
    }

    // Reduced vs full-space constraint evaluation on the scalar system
    // with the untruncated nonlinear basis.
    const MeshGeometry geom = compute_geometry(build_connectivity(make_crosshatch_mesh(8)));
    const auto system = make_system("canonical");
    Mat ranges(2, 2);
    ranges << 0.01, 2.0, 0.01, 2.0;
    const SnapshotSet snaps = generate_snapshots(geom, *system, lhs_sample(ranges, 10, 1414));
    const int n = geom.n_cells();
    std::vector<PodBasis> blocks;
    blocks.push_back(compute_pod(snaps.u.topRows(n), Truncation::all(), "b0"));
    blocks.push_back(compute_pod(snaps.u.bottomRows(n), Truncation::all(), "b1"));
    const BlockBasis basis = assemble_block_basis(std::move(blocks));
    const ReducedConstraints constraints =
        build_reduced_constraints(system, basis, snaps.u, snaps.thetas);
    const Mat w = basis.full().block(n, basis.block_offset(1), n, basis.block_k(1));

    double worst_eval = 0.0;
    for (int j = 0; j < snaps.count(); ++j) {
        const Vec theta = snaps.thetas.row(j).transpose();
        const Vec ytil = basis.project(snaps.u.col(j));
        Vec h_reduced;
        constraints.eval(ytil, theta, h_reduced, nullptr);
        const Vec h_full = w.transpose() * system->constraint_residual(basis.reconstruct(ytil), theta);
        const double scale = std::max(1.0, ytil.cwiseAbs().maxCoeff());
        worst_eval = std::max(worst_eval, (h_reduced - h_full).cwiseAbs().maxCoeff() / scale);
    }

    char buf[196];
    std::snprintf(buf, sizeof(buf), "span reconstruction %.3g (limit 1e-12); reduced vs full %.3g (limit 1e-8)",
                  worst_span, worst_eval);
    report(3, "interpolatory exactness at q = rank", worst_span <= 1e-12 && worst_eval <= 1e-8, buf);
}

void criterion_4() {
    // (a) constant annihilation, exact.
    double annihilation = 0.0;
    for (const RawMesh& raw : {make_crosshatch_mesh(16), make_diagonal_mesh(12, 9)}) {
        const MeshGeometry g = compute_geometry(build_connectivity(raw));
        const Vec c = Vec::Constant(g.n_cells(), -2.75);
        annihilation = std::max(
            annihilation, assemble_diffusion(g, Vec::Ones(g.n_cells())).apply(c).cwiseAbs().maxCoeff());
    }

    // (b) sheared 2-cell hand oracle (first-principles expansion).
    RawMesh sheared;
    sheared.nodes = {Vec2(0, 0), Vec2(2, 0), Vec2(2, 1), Vec2(0, 1)};
    sheared.cells = {{0, 1, 2}, {0, 2, 3}};
    const MeshGeometry g2 = compute_geometry(build_connectivity(sheared));
    const Vec2 c0(4.0 / 3.0, 1.0 / 3.0), c1(2.0 / 3.0, 2.0 / 3.0);
    const double alpha = 3.75, tc = -0.75;
    auto weights = [&](const Vec2& v) {
        const double w0 = 1.0 / (c0 - v).norm(), w1 = 1.0 / (c1 - v).norm();
        return std::pair<double, double>{w0 / (w0 + w1), w1 / (w0 + w1)};
    };
    const auto [w_lo0, w_lo1] = weights(Vec2(0, 0));
    const auto [w_hi0, w_hi1] = weights(Vec2(2, 1));
    Mat expected(2, 2);
    expected(0, 0) = -alpha - tc * (w_hi0 - w_lo0);
    expected(0, 1) = alpha - tc * (w_hi1 - w_lo1);
    expected.row(1) = -expected.row(0);
    const double oracle_gap =
        (assemble_diffusion(g2, Vec::Ones(2)).to_dense() - expected).cwiseAbs().maxCoeff();

    // (c) truncation convergence on the skewed family, away from the
    // lumped boundary (the operator carries no boundary closure).
    std::vector<double> errs;
    for (int n : {8, 16, 32, 64}) {
        const MeshGeometry g = compute_geometry(build_connectivity(make_diagonal_mesh(n, n)));
        const int nc = g.n_cells();
        Vec u(nc), lap(nc);
        for (int c = 0; c < nc; ++c) {
            const double x = g.cell_centroids[c].x(), y = g.cell_centroids[c].y();
            u[c] = std::sin(2 * kPi * x) * std::sin(2 * kPi * y);
            lap[c] = -8.0 * kPi * kPi * u[c];
        }
        const Vec lu = assemble_diffusion(g, Vec::Ones(nc)).apply(u);
        const auto depth = cell_depths(g.mesh);
        double num = 0.0, den = 0.0;
        for (int c = 0; c < nc; ++c) {
            if (depth[c] < 3) continue;
            const double e = lu[c] / g.cell_areas[c] - lap[c];
            num += g.cell_areas[c] * e * e;
            den += g.cell_areas[c];
        }
        errs.push_back(std::sqrt(num / den));
    }
    double order_sum = 0.0;
    for (int i = 1; i < 4; ++i) order_sum += std::log2(errs[i - 1] / errs[i]);
    const double observed_order = order_sum / 3.0;

    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "annihilation %.3g (exact); 2-cell oracle gap %.3g (limit 1e-13); observed order %.3f "
                  "(errors %.3g %.3g %.3g %.3g)",
                  annihilation, oracle_gap, observed_order, errs[0], errs[1], errs[2], errs[3]);
    report(4, "finite-volume operator correctness",
           annihilation <= 1e-12 && oracle_gap <= 1e-13 && observed_order >= 1.0, buf);
}

void criterion_5() {
    // Total-degree-2 exactness at off-node points.
    Rng rng(1005);
    Mat pts(6, 2);
    for (int i = 0; i < 6; ++i) pts.row(i) << rng.uniform01(), rng.uniform01();
    const LagrangeStencil stencil(pts, 2);
    auto poly = [](const Vec& x) { return 3.0 * x[0] * x[0] - x[0] * x[1] + 2.0 - 1.3 * x[1] * x[1] + 0.2 * x[1]; };
    Vec values(6);
    for (int i = 0; i < 6; ++i) values[i] = poly(pts.row(i).transpose());
    double worst_poly = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
        Vec q(2);
        q << rng.uniform01(), rng.uniform01();
        worst_poly = std::max(worst_poly,
                              std::abs(stencil.eval(values, q) - poly(q)) / std::max(1.0, std::abs(poly(q))));
    }

    // Node reproduction on a synthetic database.
    Mat thetas(10, 2);
    for (int i = 0; i < 10; ++i) thetas.row(i) << rng.uniform01(), rng.uniform01();
    RomDatabase db;
    db.system_name = "canonical";
    db.ranges.resize(2, 2);
    db.ranges << 0.0, 1.0, 0.0, 1.0;
    db.pod_mode = "per_block";
    db.interpolation_degree = 2;
    db.thetas = thetas;
    for (int j = 0; j < 10; ++j) {
        RomInstance inst;
        inst.k = 3;
        inst.theta = thetas.row(j).transpose();
        const Mat r = random_matrix(rng, 3, 3);
        inst.btilde = 0.5 * (r + r.transpose());
        inst.ftilde = random_vector(rng, 3);
        db.instances.push_back(std::move(inst));
    }
    db.train_coords = Mat::Zero(3, 10);
    double worst_node = 0.0;
    for (int j = 0; j < 10; ++j) {
        const RomInstance inst = interpolate_rom(db, thetas.row(j).transpose(), nullptr);
        worst_node = std::max(worst_node,
                              (inst.btilde - db.instances[j].btilde).cwiseAbs().maxCoeff());
        worst_node = std::max(worst_node,
                              (inst.ftilde - db.instances[j].ftilde).cwiseAbs().maxCoeff());
    }

    char buf[160];
    std::snprintf(buf, sizeof(buf), "degree-2 exactness %.3g (limit 1e-10); node reproduction %.3g (limit 1e-12)",
                  worst_poly, worst_node);
    report(5, "parameter-space interpolation exactness", worst_poly <= 1e-10 && worst_node <= 1e-12, buf);
}

void criterion_6() {
    auto assembly_seconds = [](int n) {
        const MeshGeometry g = compute_geometry(build_connectivity(make_diagonal_mesh(n, n)));
        const Vec gamma = Vec::Ones(g.n_cells());
        assemble_diffusion(g, gamma);  // warm up
        std::vector<double> times;
        for (int rep = 0; rep < 7; ++rep) {
            const double t0 = now_s();
            const SparseOperator op = assemble_diffusion(g, gamma);
            times.push_back(now_s() - t0);
            if (op.n_rows() == 0) std::abort();
        }
        return median(times);
    };
    const double t4k = assembly_seconds(45);   // 4050 cells
    const double t8k = assembly_seconds(64);   // 8192 cells
    const double t16k = assembly_seconds(91);  // 16562 cells
    const double r1 = t8k / t4k, r2 = t16k / t8k;
    char buf[196];
    std::snprintf(buf, sizeof(buf),
                  "times %.3g s (N=4050), %.3g s (N=8192), %.3g s (N=16562); ratios %.2f, %.2f (band [1.5, 3])",
                  t4k, t8k, t16k, r1, r2);
    report(6, "assembly wall time scales linearly in N", r1 >= 1.5 && r1 <= 3.0 && r2 >= 1.5 && r2 <= 3.0,
           buf);
}

void criterion_7(const CanonicalRun& run) {
    const PipelineConfig config = canonical_config("per_block");
    std::vector<double> rom_times;
    for (const auto& p : run.report.points) {
        const PredictResult pred = rom_predict(run.db, p.theta, config.solver);
        rom_times.push_back(pred.seconds);
    }
    std::vector<double> fom_times;
    for (int i = 0; i < 3; ++i) {
        const Vec theta = run.report.points[i].theta;
        const double t0 = now_s();
        CanonicalFom fom(run.geom);
        fom.solve(Vec2(theta[0], theta[1]), {}, nullptr);
        fom_times.push_back(now_s() - t0);
    }
    const double ratio = median(fom_times) / median(rom_times);
    char buf[160];
    std::snprintf(buf, sizeof(buf), "median FOM %.4g s, median ROM predict %.4g s, speedup x%.1f (limit 10)",
                  median(fom_times), median(rom_times), ratio);
    report(7, "online prediction at N=1024 is at least 10x faster than the FOM", ratio >= 10.0, buf);
}

void criterion_8() {
    // Gradient operators: constant annihilation and the divergence
    // oracle on interior cells of both families.
    double worst_const = 0.0, worst_div = 0.0;
    for (const RawMesh& raw : {make_crosshatch_mesh(8), make_diagonal_mesh(9, 7)}) {
        const MeshGeometry g = compute_geometry(build_connectivity(raw));
        const int nc = g.n_cells();
        const SparseOperator gx = assemble_gradient(g, Axis::x);
        const SparseOperator gy = assemble_gradient(g, Axis::y);
        Vec ones = Vec::Constant(nc, 1.5), fx(nc), fy(nc);
        for (int c = 0; c < nc; ++c) {
            fx[c] = g.cell_centroids[c].x();
            fy[c] = g.cell_centroids[c].y();
        }
        const Vec gc = gx.apply(ones), gyc = gy.apply(ones);
        const Vec gxx = gx.apply(fx), gxy = gx.apply(fy), gyy = gy.apply(fy);
        const auto depth = cell_depths(g.mesh);
        for (int c = 0; c < nc; ++c) {
            if (depth[c] == 0) continue;
            double bound = 1e-12;
            for (int f : g.mesh.cell_faces[c]) {
                const Vec2 p = g.face_weights[f] * g.cell_centroids[g.mesh.face_cells[f][0]] +
                               (1.0 - g.face_weights[f]) * g.cell_centroids[g.mesh.face_cells[f][1]];
                bound += (p - g.face_midpoints[f]).norm() * g.face_areas[f];
            }
            worst_const = std::max({worst_const, std::abs(gc[c]), std::abs(gyc[c])});
            worst_div = std::max({worst_div, std::abs(gxx[c] - g.cell_areas[c]) - bound,
                                  std::abs(gxy[c]) - bound, std::abs(gyy[c] - g.cell_areas[c]) - bound});
        }
    }

    // Closure relations on lifted manufactured states plus their
    // finite-difference Jacobian check.
    const MeshGeometry g = compute_geometry(build_connectivity(make_crosshatch_mesh(4)));
    const auto system = make_system("euler");
    Vec theta(2);
    theta << 0.4, 1.0;
    const Vec y = system->lift(manufactured_euler_state(g), theta);
    const double h_inf = system->constraint_residual(y, theta).cwiseAbs().maxCoeff();
    const double y_scale = y.cwiseAbs().maxCoeff();

    const Mat analytic = Mat(system->constraint_jacobian(y, theta));
    const Mat fd = fd_jacobian([&](const Vec& p) { return system->constraint_residual(p, theta); }, y);
    const double jac_gap = (analytic - fd).cwiseAbs().maxCoeff() / analytic.cwiseAbs().maxCoeff();

    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "gradient constants %.3g (exact); divergence-oracle slack %.3g (within bound); "
                  "constraints on lifted states %.3g (limit 1e-12 rel); jacobian vs FD %.3g (limit 1e-6)",
                  worst_const, worst_div, h_inf / y_scale, jac_gap);
    report(8, "compressible-flow machinery at desk scale",
           worst_const <= 1e-12 && worst_div <= 0.0 && h_inf <= 1e-12 * y_scale && jac_gap <= 1e-6, buf);
}

}  // namespace

int main() {
    std::printf("acceptance suite (8 criteria)\n");
    const double t0 = now_s();
    const CanonicalRun run = criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7(run);
    criterion_8();
    std::printf("%d/8 criteria passed in %.1f s\n", 8 - failures, now_s() - t0);
    return failures == 0 ? 0 : 1;
}
