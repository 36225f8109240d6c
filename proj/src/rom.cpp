#include "romfv/rom.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "nlohmann/json.hpp"
#include "romfv/romb_io.hpp"

namespace romfv {

Mat projected_operator(const BlockOperator& a, const BlockBasis& basis) {
    if (a.cols() != basis.full().rows()) fail("project: operator and basis dimensions do not conform");
    return a.apply_matrix(basis.full());
}

RomInstance project_with(const Mat& a_phi, const Vec& f, const Vec& theta) {
    if (f.size() != a_phi.rows()) fail("project: rhs dimension mismatch");
    RomInstance inst;
    inst.btilde.noalias() = a_phi.transpose() * a_phi;
    inst.ftilde.noalias() = a_phi.transpose() * f;
    inst.theta = theta;
    inst.k = static_cast<int>(a_phi.cols());
    return inst;
}

RomInstance project(const BlockOperator& a, const Vec& f, const BlockBasis& basis, const Vec& theta) {
    return project_with(projected_operator(a, basis), f, theta);
}

Vec reconstruct(const BlockBasis& basis, const Vec& ytil) { return basis.reconstruct(ytil); }

SqpResult solve_rom(const RomInstance& instance, const ReducedConstraints* constraints, const Vec& theta,
                    const Vec& ytil0, const SqpOptions& options) {
    const int k = instance.k;
    if (ytil0.size() != k) fail("solve_rom: initial guess dimension mismatch");
    if (!ytil0.allFinite()) fail("solve_rom: non-finite initial guess");
    const int m = (constraints && !constraints->empty()) ? constraints->m_total() : 0;

    const Mat& b = instance.btilde;
    const Vec& f = instance.ftilde;
    const Mat hess = b.transpose() * b;  // Gauss-Newton Hessian of the residual
    const Vec btf = b.transpose() * f;
    const double kkt_scale = std::max(1.0, btf.cwiseAbs().maxCoeff());

    SqpResult result;
    result.ytil = ytil0;
    result.levenberg = options.levenberg;

    Vec x = ytil0;
    Vec h(m);
    Mat jac(m, k);
    double merit_penalty = 1.0;

    auto objective = [&](const Vec& y) { return 0.5 * (b * y - f).squaredNorm(); };
    auto constraint_l1 = [&](const Vec& y, double* scale_out) {
        if (m == 0) {
            if (scale_out) *scale_out = 1.0;
            return 0.0;
        }
        Vec hv;
        const double s = constraints->eval(y, theta, hv, nullptr);
        if (scale_out) *scale_out = s;
        return hv.lpNorm<1>();
    };

    double levenberg = options.levenberg;
    int iter = 0;
    for (; iter < options.max_iter; ++iter) {
        const Vec grad = hess * x - btf;
        double feas_scale = 1.0;
        if (m > 0) feas_scale = constraints->eval(x, theta, h, &jac);

        // KKT system for the step and fresh multipliers:
        //   [H + lev I  J^T] [p     ]   [-grad]
        //   [J          0  ] [lambda] = [-h   ]
        Vec p(k), lambda(m);
        bool solved = false;
        for (int escalation = 0; escalation < 14 && !solved; ++escalation) {
            Mat kkt = Mat::Zero(k + m, k + m);
            kkt.topLeftCorner(k, k) = hess + levenberg * Mat::Identity(k, k);
            if (m > 0) {
                kkt.topRightCorner(k, m) = jac.transpose();
                kkt.bottomLeftCorner(m, k) = jac;
            }
            Vec rhs(k + m);
            rhs.head(k) = -grad;
            if (m > 0) rhs.tail(m) = -h;
            Eigen::PartialPivLU<Mat> lu(kkt);
            const Vec z = lu.solve(rhs);
            if (z.allFinite() && (kkt * z - rhs).norm() <= 1e-8 * (rhs.norm() + 1.0)) {
                p = z.head(k);
                if (m > 0) lambda = z.tail(m);
                solved = true;
            } else {
                levenberg *= 10.0;
            }
        }
        if (!solved) fail("solve_rom: KKT system remained singular after regularized retries");

        result.kkt_inf = (m > 0) ? (grad + jac.transpose() * lambda).cwiseAbs().maxCoeff()
                                 : grad.cwiseAbs().maxCoeff();
        result.feas_inf = (m > 0) ? h.cwiseAbs().maxCoeff() : 0.0;
        if (result.kkt_inf <= options.tol_kkt * kkt_scale && result.feas_inf <= options.tol_feas * feas_scale) {
            result.converged = true;
            break;
        }

        if (m > 0) merit_penalty = std::max(merit_penalty, 2.0 * lambda.cwiseAbs().maxCoeff() + 1e-8);
        const double merit0 = objective(x) + merit_penalty * constraint_l1(x, nullptr);
        const double directional = grad.dot(p) - merit_penalty * ((m > 0) ? h.lpNorm<1>() : 0.0);

        double t = 1.0;
        bool accepted = false;
        for (int halving = 0; halving <= options.max_halvings; ++halving) {
            const Vec trial = x + t * p;
            const double merit_trial = objective(trial) + merit_penalty * constraint_l1(trial, nullptr);
            if (merit_trial <= merit0 + 1e-4 * t * std::min(directional, 0.0)) {
                x = trial;
                result.merit_steps.emplace_back(merit0, merit_trial);
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) {
            levenberg *= 10.0;
            if (levenberg > 1e12) fail("solve_rom: line search failed with saturated regularization");
        }
    }

    result.iterations = iter;
    result.ytil = x;
    result.objective = objective(x);
    result.levenberg = levenberg;
    if (!result.converged) {
        // Report the final stationarity numbers for the best iterate.
        const Vec grad = hess * x - btf;
        if (m > 0) {
            constraints->eval(x, theta, h, nullptr);
            result.feas_inf = h.cwiseAbs().maxCoeff();
        }
        result.kkt_inf = grad.cwiseAbs().maxCoeff();
    }
    return result;
}

void RomDatabase::save(const std::string& dir) const {
    namespace fs = std::filesystem;
    fs::create_directories(dir);

    nlohmann::ordered_json manifest;
    manifest["format"] = "romfv-db-1";
    manifest["system"] = system_name;
    manifest["gamma"] = gamma;
    manifest["seed"] = seed;
    manifest["pod_mode"] = pod_mode;
    manifest["pod_truncation"] = pod_truncation;
    manifest["mesh"] = mesh_path;
    manifest["n_cells"] = n_cells;
    manifest["interpolation_degree"] = interpolation_degree;
    manifest["k"] = basis.k();
    manifest["n_blocks"] = basis.n_blocks();
    manifest["block_ks"] = basis.block_ks();

    auto ranges_json = nlohmann::ordered_json::array();
    for (Eigen::Index i = 0; i < ranges.rows(); ++i)
        ranges_json.push_back({ranges(i, 0), ranges(i, 1)});
    manifest["ranges"] = ranges_json;

    auto thetas_json = nlohmann::ordered_json::array();
    for (Eigen::Index i = 0; i < thetas.rows(); ++i) {
        auto row = nlohmann::ordered_json::array();
        for (Eigen::Index j = 0; j < thetas.cols(); ++j) row.push_back(thetas(i, j));
        thetas_json.push_back(row);
    }
    manifest["thetas"] = thetas_json;

    auto sigma_json = nlohmann::ordered_json::array();
    for (const auto& pb : basis.pod_blocks()) {
        auto s = nlohmann::ordered_json::array();
        for (Eigen::Index i = 0; i < pb.sigma.size(); ++i) s.push_back(pb.sigma[i]);
        sigma_json.push_back({{"source", pb.source}, {"k", pb.k}, {"rank", pb.numerical_rank},
                              {"clamped", pb.clamped}, {"sigma", s}});
    }
    manifest["pod_blocks"] = sigma_json;

    auto deim_json = nlohmann::ordered_json::array();
    for (std::size_t fi = 0; fi < constraints.families.size(); ++fi) {
        const auto& fam = constraints.families[fi];
        deim_json.push_back({{"name", fam.name},
                             {"family_index", fam.family_index},
                             {"target_block", fam.target_block},
                             {"input_blocks", fam.input_blocks},
                             {"points", fam.points},
                             {"cond", fam.cond}});
        const std::string prefix = dir + "/deim_" + std::to_string(fi);
        save_matrix(prefix + "_left.romb", fam.left);
        save_matrix(prefix + "_tlin.romb", fam.t_lin);
        for (std::size_t i = 0; i < fam.sampled.size(); ++i)
            save_matrix(prefix + "_rows_" + std::to_string(i) + ".romb", fam.sampled[i]);
    }
    manifest["deim"] = deim_json;

    std::ofstream out(dir + "/manifest.json");
    if (!out) fail("rom db: cannot write manifest in '" + dir + "'");
    out << manifest.dump(2) << "\n";

    save_matrix(dir + "/basis.romb", basis.full());
    save_matrix(dir + "/train_coords.romb", train_coords);
    for (int i = 0; i < count(); ++i) {
        save_matrix(dir + "/Btilde_" + std::to_string(i) + ".romb", instances[i].btilde);
        save_matrix(dir + "/ftilde_" + std::to_string(i) + ".romb", instances[i].ftilde);
    }
}

RomDatabase RomDatabase::load(const std::string& dir) {
    std::ifstream in(dir + "/manifest.json");
    if (!in) fail("rom db: cannot open '" + dir + "/manifest.json'");
    nlohmann::json manifest = nlohmann::json::parse(in);
    if (manifest.at("format").get<std::string>() != "romfv-db-1") fail("rom db: unknown format");

    RomDatabase db;
    db.system_name = manifest.at("system").get<std::string>();
    db.gamma = manifest.at("gamma").get<double>();
    db.seed = manifest.at("seed").get<std::uint64_t>();
    db.pod_mode = manifest.at("pod_mode").get<std::string>();
    db.pod_truncation = manifest.value("pod_truncation", "");
    db.mesh_path = manifest.at("mesh").get<std::string>();
    db.n_cells = manifest.at("n_cells").get<int>();
    db.interpolation_degree = manifest.at("interpolation_degree").get<int>();

    const auto& rj = manifest.at("ranges");
    db.ranges.resize(rj.size(), 2);
    for (std::size_t i = 0; i < rj.size(); ++i) {
        db.ranges(i, 0) = rj[i][0].get<double>();
        db.ranges(i, 1) = rj[i][1].get<double>();
    }
    const auto& tj = manifest.at("thetas");
    db.thetas.resize(tj.size(), tj.empty() ? 0 : tj[0].size());
    for (std::size_t i = 0; i < tj.size(); ++i)
        for (std::size_t j = 0; j < tj[i].size(); ++j) db.thetas(i, j) = tj[i][j].get<double>();

    db.basis = BlockBasis::from_parts(load_matrix(dir + "/basis.romb"),
                                      manifest.at("block_ks").get<std::vector<int>>(),
                                      db.pod_mode == "joint", manifest.at("n_blocks").get<int>());
    db.train_coords = load_matrix(dir + "/train_coords.romb");

    const int m = static_cast<int>(tj.size());
    db.instances.reserve(m);
    for (int i = 0; i < m; ++i) {
        RomInstance inst;
        inst.btilde = load_matrix(dir + "/Btilde_" + std::to_string(i) + ".romb");
        inst.ftilde = load_vector(dir + "/ftilde_" + std::to_string(i) + ".romb");
        inst.theta = db.thetas.row(i).transpose();
        inst.k = static_cast<int>(inst.btilde.rows());
        db.instances.push_back(std::move(inst));
    }

    db.constraints.system = make_system(db.system_name, db.gamma);
    db.constraints.k = db.basis.k();
    const auto& dj = manifest.at("deim");
    for (std::size_t fi = 0; fi < dj.size(); ++fi) {
        ReducedConstraintFamily fam;
        fam.name = dj[fi].at("name").get<std::string>();
        fam.family_index = dj[fi].at("family_index").get<int>();
        fam.target_block = dj[fi].at("target_block").get<int>();
        fam.input_blocks = dj[fi].at("input_blocks").get<std::vector<int>>();
        fam.points = dj[fi].at("points").get<std::vector<int>>();
        fam.cond = dj[fi].at("cond").get<double>();
        const std::string prefix = dir + "/deim_" + std::to_string(fi);
        fam.left = load_matrix(prefix + "_left.romb");
        fam.t_lin = load_matrix(prefix + "_tlin.romb");
        for (std::size_t i = 0; i < fam.input_blocks.size(); ++i)
            fam.sampled.push_back(load_matrix(prefix + "_rows_" + std::to_string(i) + ".romb"));
        db.constraints.families.push_back(std::move(fam));
    }
    return db;
}

}  // namespace romfv
