#include "romfv/fom.hpp"

#include <cmath>
#include <fstream>
#include <iostream>

#include <Eigen/SparseLU>

#include "nlohmann/json.hpp"
#include "romfv/fvm.hpp"
#include "romfv/rng.hpp"
#include "romfv/romb_io.hpp"

namespace romfv {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

std::vector<int> ParameterDesign::indices_with_role(const std::string& role) const {
    std::vector<int> out;
    for (std::size_t i = 0; i < roles.size(); ++i)
        if (roles[i] == role) out.push_back(static_cast<int>(i));
    return out;
}

ParameterDesign lhs_sample(const Mat& ranges, int count, std::uint64_t seed, int candidates) {
    const int p = static_cast<int>(ranges.rows());
    if (p < 1) fail("lhs_sample: empty ranges");
    if (count < 1) fail("lhs_sample: count must be >= 1");
    if (candidates < 1) fail("lhs_sample: candidate count must be >= 1");
    for (int j = 0; j < p; ++j)
        if (!(ranges(j, 0) < ranges(j, 1))) fail("lhs_sample: inverted range for coordinate " + std::to_string(j));

    Rng rng(seed);
    auto draw = [&]() {
        Mat points(count, p);
        for (int j = 0; j < p; ++j) {
            std::vector<int> strata(count);
            for (int i = 0; i < count; ++i) strata[i] = i;
            rng.shuffle(strata);
            const double lo = ranges(j, 0), width = (ranges(j, 1) - ranges(j, 0)) / count;
            for (int i = 0; i < count; ++i) points(i, j) = lo + (strata[i] + rng.uniform01()) * width;
        }
        return points;
    };
    auto min_pairwise = [&](const Mat& points) {
        double best = std::numeric_limits<double>::infinity();
        for (int a = 0; a < count; ++a) {
            for (int b = a + 1; b < count; ++b) {
                double d2 = 0.0;
                for (int j = 0; j < p; ++j) {
                    const double d = (points(a, j) - points(b, j)) / (ranges(j, 1) - ranges(j, 0));
                    d2 += d * d;
                }
                best = std::min(best, d2);
            }
        }
        return best;
    };

    ParameterDesign design;
    design.ranges = ranges;
    design.seed = seed;
    design.roles.assign(count, "train");
    design.points = draw();
    double best = (count > 1) ? min_pairwise(design.points) : 0.0;
    for (int c = 1; c < candidates && count > 1; ++c) {
        const Mat candidate = draw();
        const double score = min_pairwise(candidate);
        if (score > best) {
            best = score;
            design.points = candidate;
        }
    }
    return design;
}

void SnapshotSet::save(const std::string& prefix) const {
    save_matrix(prefix + ".romb", u);
    nlohmann::ordered_json manifest;
    manifest["format"] = "romfv-snapshots-1";
    manifest["system"] = system;
    manifest["mesh"] = mesh_path;
    manifest["n_cells"] = n_cells;
    manifest["seed"] = seed;
    manifest["fom_tol"] = fom_tol;
    manifest["fom_max_iter"] = fom_max_iter;
    auto thetas_json = nlohmann::ordered_json::array();
    for (Eigen::Index i = 0; i < thetas.rows(); ++i) {
        auto row = nlohmann::ordered_json::array();
        for (Eigen::Index j = 0; j < thetas.cols(); ++j) row.push_back(thetas(i, j));
        thetas_json.push_back(row);
    }
    manifest["thetas"] = thetas_json;
    std::ofstream out(prefix + ".manifest.json");
    if (!out) fail("snapshots: cannot write '" + prefix + ".manifest.json'");
    out << manifest.dump(2) << "\n";
}

SnapshotSet SnapshotSet::load(const std::string& prefix) {
    SnapshotSet s;
    s.u = load_matrix(prefix + ".romb");
    std::ifstream in(prefix + ".manifest.json");
    if (!in) fail("snapshots: cannot open '" + prefix + ".manifest.json'");
    nlohmann::json manifest = nlohmann::json::parse(in);
    s.system = manifest.at("system").get<std::string>();
    s.mesh_path = manifest.at("mesh").get<std::string>();
    s.n_cells = manifest.at("n_cells").get<int>();
    s.seed = manifest.at("seed").get<std::uint64_t>();
    s.fom_tol = manifest.at("fom_tol").get<double>();
    s.fom_max_iter = manifest.at("fom_max_iter").get<int>();
    const auto& tj = manifest.at("thetas");
    s.thetas.resize(tj.size(), tj.empty() ? 0 : tj[0].size());
    for (std::size_t i = 0; i < tj.size(); ++i)
        for (std::size_t j = 0; j < tj[i].size(); ++j) s.thetas(i, j) = tj[i][j].get<double>();
    return s;
}

CanonicalFom::CanonicalFom(const MeshGeometry& geom) : geom_(geom) {
    const int n = geom.n_cells();
    const SparseOperator lap = assemble_diffusion(geom, Vec::Ones(n));

    // base = -L + diag(boundary flux coefficients); the Dirichlet wall
    // value enters the residual only through u = 0, so it contributes a
    // diagonal term A_f / d(centroid, face midpoint) per boundary face.
    Vec boundary_diag = Vec::Zero(n);
    const Mesh& m = geom.mesh;
    for (int f = 0; f < m.n_faces(); ++f) {
        if (!m.is_boundary_face(f)) continue;
        const int c = m.face_cells[f][0];
        const double d = (geom.face_midpoints[f] - geom.cell_centroids[c]).norm();
        boundary_diag[c] += geom.face_areas[f] / d;
    }

    std::vector<Eigen::Triplet<double>> trip;
    const auto& lmat = lap.matrix();
    trip.reserve(lmat.nonZeros() + n);
    for (int k = 0; k < lmat.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(lmat, k); it; ++it)
            trip.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), -it.value());
    for (int i = 0; i < n; ++i) trip.emplace_back(i, i, boundary_diag[i]);
    base_.resize(n, n);
    base_.setFromTriplets(trip.begin(), trip.end());
    base_.makeCompressed();

    diag_pos_.assign(n, -1);
    const auto* outer = base_.outerIndexPtr();
    const auto* inner = base_.innerIndexPtr();
    for (int k = 0; k < n; ++k) {
        for (auto idx = outer[k]; idx < outer[k + 1]; ++idx) {
            if (inner[idx] == k) {
                diag_pos_[k] = idx;
                break;
            }
        }
        if (diag_pos_[k] < 0) fail("fom: matrix pattern is missing a diagonal entry");
    }

    area_.resize(n);
    forcing_.resize(n);
    for (int c = 0; c < n; ++c) {
        area_[c] = geom.cell_areas[c];
        const Vec2& x = geom.cell_centroids[c];
        forcing_[c] = 100.0 * std::sin(2.0 * kPi * x.x()) * std::sin(2.0 * kPi * x.y());
    }
}

Vec CanonicalFom::solve(const Vec2& mu, const NewtonOptions& options, NewtonReport* report) const {
    const int n = static_cast<int>(area_.size());
    const double mu1 = mu.x(), mu2 = mu.y();
    if (!(mu1 > 0.0) || !(mu2 > 0.0)) fail("fom: parameters must be positive");

    NewtonReport local;
    NewtonReport& rep = report ? *report : local;
    rep = NewtonReport{};
    if (mu1 < 0.01 || mu1 > 2.0 || mu2 < 0.01 || mu2 > 2.0) {
        rep.mu_out_of_range = true;
        std::cerr << "fom: warning: mu = (" << mu1 << ", " << mu2 << ") is outside the design box [0.01, 2]^2\n";
    }

    Vec g = forcing_;
    if (options.forcing) {
        for (int c = 0; c < n; ++c) {
            const Vec2& x = geom_.cell_centroids[c];
            g[c] = options.forcing(x.x(), x.y());
        }
    }

    auto residual = [&](const Vec& u, Vec& f_out) {
        f_out = base_ * u;
        for (int c = 0; c < n; ++c)
            f_out[c] += area_[c] * (CanonicalSystem::source(u[c], mu1, mu2) - g[c]);
    };

    Vec u = Vec::Zero(n);
    Vec f(n), f_trial(n);
    residual(u, f);
    double fnorm = f.norm();
    rep.residual_norms.push_back(fnorm);

    Eigen::SparseMatrix<double> jac = base_;
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.analyzePattern(jac);

    for (int iter = 0; iter < options.max_iter; ++iter) {
        if (fnorm <= options.tol) {
            rep.converged = true;
            rep.iterations = iter;
            return u;
        }
        // Refresh the diagonal with the source linearization.
        double* vals = jac.valuePtr();
        const double* base_vals = base_.valuePtr();
        for (Eigen::Index k = 0; k < jac.nonZeros(); ++k) vals[k] = base_vals[k];
        for (int c = 0; c < n; ++c)
            vals[diag_pos_[c]] += area_[c] * CanonicalSystem::source_derivative(u[c], mu1, mu2);

        lu.factorize(jac);
        if (lu.info() != Eigen::Success)
            fail("fom: singular Newton system at iteration " + std::to_string(iter));
        const Vec step = lu.solve(-f);

        double t = 1.0;
        bool accepted = false;
        for (int h = 0; h <= options.max_halvings; ++h) {
            residual(u + t * step, f_trial);
            if (f_trial.norm() < fnorm) {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted)
            fail("fom: line search failed at iteration " + std::to_string(iter) + " (residual " +
                 std::to_string(fnorm) + ")");
        u += t * step;
        f = f_trial;
        fnorm = f.norm();
        rep.residual_norms.push_back(fnorm);
    }
    if (fnorm <= options.tol) {
        rep.converged = true;
        rep.iterations = options.max_iter;
        return u;
    }
    fail("fom: Newton did not converge in " + std::to_string(options.max_iter) +
         " iterations (last residual " + std::to_string(fnorm) + ")");
}

SnapshotSet generate_snapshots(const MeshGeometry& geom, const ObservableSystem& system,
                               const ParameterDesign& design, const NewtonOptions& options) {
    if (system.name() != "canonical")
        fail("generate_snapshots: no full-order solver is available for system '" + system.name() + "'");
    const auto train = design.indices_with_role("train");
    if (train.empty()) fail("generate_snapshots: design has no training points");

    CanonicalFom fom(geom);
    SnapshotSet set;
    set.system = system.name();
    set.n_cells = geom.n_cells();
    set.seed = design.seed;
    set.fom_tol = options.tol;
    set.fom_max_iter = options.max_iter;
    set.thetas.resize(static_cast<Eigen::Index>(train.size()), design.points.cols());
    set.u.resize(static_cast<Eigen::Index>(system.n_blocks()) * geom.n_cells(),
                 static_cast<Eigen::Index>(train.size()));

    for (std::size_t j = 0; j < train.size(); ++j) {
        const Vec theta = design.points.row(train[j]).transpose();
        try {
            const Vec u = fom.solve(Vec2(theta[0], theta[1]), options);
            set.u.col(static_cast<Eigen::Index>(j)) = system.lift(u, theta);
        } catch (const Error& e) {
            fail("generate_snapshots: solve failed at theta = (" + std::to_string(theta[0]) + ", " +
                 std::to_string(theta[1]) + "): " + e.what());
        }
        set.thetas.row(static_cast<Eigen::Index>(j)) = theta.transpose();
    }
    if (!set.u.allFinite()) fail("generate_snapshots: non-finite snapshot entries");
    return set;
}

}  // namespace romfv
