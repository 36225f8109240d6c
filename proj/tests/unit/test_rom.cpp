#include <Eigen/Eigenvalues>
#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "romfv/pipeline.hpp"
#include "romfv/rom.hpp"
#include "romfv/rng.hpp"

using namespace romfv;
using namespace romfv::test;

namespace {

PipelineConfig small_config(const std::string& out_dir) {
    PipelineConfig config;
    config.train_count = 10;
    config.seed = 512;
    config.out_dir = out_dir;
    return config;
}

}  // namespace

TEST_CASE("projection with the identity basis reproduces the normal equations") {
    const MeshGeometry g = compute_geometry(build_connectivity(make_crosshatch_mesh(2)));
    const int n = g.n_cells();
    Rng rng(61);

    const BlockOperator a = make_canonical_operator(g);
    // Identity trial basis: one orthonormal block per observable.
    std::vector<PodBasis> blocks;
    for (int b = 0; b < 2; ++b) {
        PodBasis pb;
        pb.phi = Mat::Identity(n, n);
        pb.sigma = Vec::Ones(n);
        pb.k = n;
        pb.numerical_rank = n;
        blocks.push_back(pb);
    }
    const BlockBasis identity = assemble_block_basis(std::move(blocks));
    const Vec f = random_vector(rng, n);
    const RomInstance inst = project(a, f, identity, Vec::Zero(2));

    Mat a_dense(n, 2 * n);
    a_dense.leftCols(n) = a.block_op(0, 0).to_dense();
    a_dense.rightCols(n) = Mat::Identity(n, n);
    CHECK((inst.btilde - a_dense.transpose() * a_dense).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((inst.ftilde - a_dense.transpose() * f).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("projected instances are symmetric positive semidefinite") {
    const MeshGeometry g = compute_geometry(build_connectivity(make_diagonal_mesh(3, 3)));
    Rng rng(62);
    const BlockOperator a = make_canonical_operator(g);
    std::vector<PodBasis> blocks;
    for (int b = 0; b < 2; ++b) {
        PodBasis pb;
        pb.phi = random_orthonormal(rng, g.n_cells(), 4);
        pb.sigma = Vec::Ones(4);
        pb.k = 4;
        blocks.push_back(pb);
    }
    const BlockBasis basis = assemble_block_basis(std::move(blocks));
    const RomInstance inst = project(a, random_vector(rng, g.n_cells()), basis, Vec::Zero(2));

    CHECK((inst.btilde - inst.btilde.transpose()).cwiseAbs().maxCoeff() <=
          1e-12 * inst.btilde.cwiseAbs().maxCoeff());
    Eigen::SelfAdjointEigenSolver<Mat> eig(inst.btilde);
    CHECK(eig.eigenvalues().minCoeff() >= -1e-10 * eig.eigenvalues().maxCoeff());
}

TEST_CASE("2-cell projection against a dense oracle") {
    RawMesh raw;
    raw.nodes = {Vec2(0, 0), Vec2(1, 0), Vec2(1, 1), Vec2(0, 1)};
    raw.cells = {{0, 1, 2}, {0, 2, 3}};
    const MeshGeometry g = compute_geometry(build_connectivity(raw));
    Rng rng(63);

    const BlockOperator a = make_canonical_operator(g);
    std::vector<PodBasis> blocks;
    for (int b = 0; b < 2; ++b) {
        PodBasis pb;
        pb.phi = random_orthonormal(rng, 2, 2);
        pb.sigma = Vec::Ones(2);
        pb.k = 2;
        blocks.push_back(pb);
    }
    const BlockBasis basis = assemble_block_basis(std::move(blocks));
    const Vec y = random_vector(rng, 4);
    const Vec f = recover_rhs(a, y);
    const RomInstance inst = project(a, f, basis, Vec::Zero(2));

    Mat a_dense(2, 4);
    a_dense.leftCols(2) = a.block_op(0, 0).to_dense();
    a_dense.rightCols(2) = Mat::Identity(2, 2);
    const Mat a_phi = a_dense * basis.full();
    CHECK((inst.btilde - a_phi.transpose() * a_phi).cwiseAbs().maxCoeff() <= 1e-13);
    CHECK((inst.ftilde - a_phi.transpose() * f).cwiseAbs().maxCoeff() <= 1e-13);

    // Least-squares consistency: f recovered from y in span(Phi) leaves
    // zero reduced residual at the projected coordinates.
    const Vec y_in_span = basis.full() * random_vector(rng, 4);
    const RomInstance cons = project(a, recover_rhs(a, y_in_span), basis, Vec::Zero(2));
    const Vec ytil = basis.project(y_in_span);
    CHECK((cons.btilde * ytil - cons.ftilde).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("reconstruct maps reduced coordinates back exactly") {
    Rng rng(64);
    std::vector<PodBasis> blocks;
    PodBasis pb;
    pb.phi = random_orthonormal(rng, 10, 3);
    pb.sigma = Vec::Ones(3);
    pb.k = 3;
    blocks.push_back(pb);
    const BlockBasis basis = assemble_block_basis(std::move(blocks));

    CHECK(reconstruct(basis, Vec::Zero(3)).norm() == 0.0);
    const Vec y = basis.full() * random_vector(rng, 3);
    CHECK((reconstruct(basis, basis.project(y)) - y).cwiseAbs().maxCoeff() <= 1e-13);
    const Vec ytil = random_vector(rng, 3);
    CHECK((reconstruct(basis, ytil) - basis.full() * ytil).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("unconstrained solve recovers the least-squares solution") {
    Rng rng(65);
    const int k = 6;
    const Mat m = random_matrix(rng, k, k) + 5.0 * Mat::Identity(k, k);
    RomInstance inst;
    inst.btilde = m.transpose() * m;  // SPD, well-conditioned
    inst.k = k;
    const Vec y_star = random_vector(rng, k);
    inst.ftilde = inst.btilde * y_star;  // consistent rhs
    inst.theta = Vec::Zero(2);

    const SqpResult res = solve_rom(inst, nullptr, inst.theta, Vec::Zero(k));
    CHECK(res.converged);
    CHECK((res.ytil - y_star).cwiseAbs().maxCoeff() <= 1e-6 * y_star.cwiseAbs().maxCoeff());
    CHECK(res.objective <= 1e-12);
}

TEST_CASE("solver returns the best iterate flagged non-converged on a tiny budget") {
    Rng rng(66);
    const int k = 5;
    const Mat m = random_matrix(rng, k, k) + 4.0 * Mat::Identity(k, k);
    RomInstance inst;
    inst.btilde = m.transpose() * m;
    inst.k = k;
    inst.ftilde = random_vector(rng, k);
    inst.theta = Vec::Zero(2);
    SqpOptions options;
    options.max_iter = 1;
    const SqpResult res = solve_rom(inst, nullptr, inst.theta, 100.0 * Vec::Ones(k), options);
    CHECK_FALSE(res.converged);
    CHECK(res.iterations == 1);
    CHECK(res.ytil.allFinite());
}

TEST_CASE("constrained canonical solve: training-point self test") {
    TempDir tmp("rom_self");
    const PipelineConfig config = small_config(tmp.file("out"));
    const MeshGeometry geom = compute_geometry(build_connectivity(make_crosshatch_mesh(4)));
    const ParameterDesign design = stage_sample(config);
    const SnapshotSet snapshots = stage_snapshots(config, geom, design);
    const RomDatabase db = stage_build(config, geom, snapshots);

    for (int j = 0; j < db.count(); ++j) {
        const Vec theta = db.thetas.row(j).transpose();
        const Vec ytil0 = db.train_coords.col(j);
        const RomInstance& inst = db.instances[j];

        const double obj0 = 0.5 * (inst.btilde * ytil0 - inst.ftilde).squaredNorm();
        const SqpResult res = solve_rom(inst, &db.constraints, theta, ytil0, config.solver);
        CHECK(res.converged);
        CHECK(res.objective <= obj0 + 1e-12);

        // Merit monotonicity on accepted steps.
        for (const auto& [before, after] : res.merit_steps) CHECK(after <= before + 1e-12);

        // Reconstruction error bounded by the snapshot projection error.
        const Vec y_true = snapshots.u.col(j);
        const Vec y_rom = reconstruct(db.basis, res.ytil);
        const double projection = (y_true - db.basis.full() * (db.basis.project(y_true))).norm();
        CHECK((y_rom - y_true).norm() <= projection + 1e-6 * y_true.norm());
    }
}

TEST_CASE("reduced residual of the projected truth vanishes for full-rank snapshots") {
    // Synthetic snapshots with no rank decay keep the basis untruncated,
    // making the projected snapshot an exact least-squares solution.
    const MeshGeometry g = compute_geometry(build_connectivity(make_crosshatch_mesh(3)));
    const int n = g.n_cells();
    Rng rng(67);
    const BlockOperator a = make_canonical_operator(g);
    Mat snapshots(2 * n, 6);
    for (int j = 0; j < 6; ++j) snapshots.col(j) = random_vector(rng, 2 * n);

    std::vector<PodBasis> blocks;
    blocks.push_back(compute_pod(snapshots.topRows(n), Truncation::all(), "b0"));
    blocks.push_back(compute_pod(snapshots.bottomRows(n), Truncation::all(), "b1"));
    const BlockBasis basis = assemble_block_basis(std::move(blocks));

    for (int j = 0; j < 6; ++j) {
        const Vec f = recover_rhs(a, snapshots.col(j));
        const RomInstance inst = project(a, f, basis, Vec::Zero(2));
        const Vec ytil = basis.project(snapshots.col(j));
        CHECK((inst.btilde * ytil - inst.ftilde).norm() <= 1e-10 * inst.ftilde.norm());
    }
}

TEST_CASE("database save/load round-trips bit-for-bit") {
    TempDir tmp("rom_db");
    const PipelineConfig config = small_config(tmp.file("out"));
    const MeshGeometry geom = compute_geometry(build_connectivity(make_crosshatch_mesh(3)));
    const SnapshotSet snapshots = stage_snapshots(config, geom, stage_sample(config));
    const RomDatabase db = stage_build(config, geom, snapshots);
    db.save(tmp.file("db"));
    const RomDatabase back = RomDatabase::load(tmp.file("db"));

    CHECK(back.system_name == db.system_name);
    CHECK(back.pod_mode == db.pod_mode);
    CHECK(back.k() == db.k());
    CHECK((back.thetas - db.thetas).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.basis.full() - db.basis.full()).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.train_coords - db.train_coords).cwiseAbs().maxCoeff() == 0.0);
    REQUIRE(back.count() == db.count());
    for (int j = 0; j < db.count(); ++j) {
        CHECK((back.instances[j].btilde - db.instances[j].btilde).cwiseAbs().maxCoeff() == 0.0);
        CHECK((back.instances[j].ftilde - db.instances[j].ftilde).cwiseAbs().maxCoeff() == 0.0);
    }
    REQUIRE(back.constraints.families.size() == db.constraints.families.size());
    for (std::size_t f = 0; f < db.constraints.families.size(); ++f) {
        const auto &bf = back.constraints.families[f], &df = db.constraints.families[f];
        CHECK(bf.points == df.points);
        CHECK((bf.left - df.left).cwiseAbs().maxCoeff() == 0.0);
        CHECK((bf.t_lin - df.t_lin).cwiseAbs().maxCoeff() == 0.0);
    }

    // A loaded database evaluates constraints identically.
    Vec theta = db.thetas.row(0).transpose();
    const Vec ytil = db.train_coords.col(0);
    Vec h_a, h_b;
    db.constraints.eval(ytil, theta, h_a, nullptr);
    back.constraints.eval(ytil, theta, h_b, nullptr);
    CHECK((h_a - h_b).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("projection consistency ties the basis to the snapshot energy") {
    const MeshGeometry g = compute_geometry(build_connectivity(make_crosshatch_mesh(3)));
    const auto system = make_system("canonical");
    Mat ranges(2, 2);
    ranges << 0.01, 2.0, 0.01, 2.0;
    const SnapshotSet snaps = generate_snapshots(g, *system, lhs_sample(ranges, 8, 2024));
    const int n = g.n_cells();
    const PodBasis block0 = compute_pod(snaps.u.topRows(n), Truncation::fixed_k(3), "b0");

    const double direct = projection_error(snaps.u.topRows(n), block0.phi);
    CHECK(direct == doctest::Approx(block0.tail_energy(3)).epsilon(1e-8));
}
