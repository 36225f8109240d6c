#pragma once

#include <Eigen/SparseCore>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "romfv/types.hpp"

namespace romfv {

/// One algebraic closure relation of the lifted system,
///   h(y) = y_target - n(y_inputs; theta) = 0   (one equation per cell).
///
/// `nonlinear` evaluates n and, when `partials` is non-null, the partial
/// derivative of n with respect to each input block, vectorized over a
/// batch of points.
struct ConstraintFamily {
    std::string name;
    int target_block = 0;
    std::vector<int> input_blocks;
    std::function<void(const std::vector<Eigen::ArrayXd>& inputs, const Vec& theta,
                       Eigen::ArrayXd& value, std::vector<Eigen::ArrayXd>* partials)>
        nonlinear;
};

/// Lifting between state variables and the observable vector the linear
/// operator acts on. Observables are stacked block-by-block: block b of
/// a field with N cells occupies entries [b*N, (b+1)*N).
class ObservableSystem {
public:
    virtual ~ObservableSystem() = default;

    virtual std::string name() const = 0;
    virtual int n_state_fields() const = 0;
    virtual int n_blocks() const = 0;
    virtual int n_params() const = 0;

    /// Throws when theta is outside the admissible range.
    virtual void check_params(const Vec& theta) const = 0;

    virtual const std::vector<ConstraintFamily>& families() const = 0;

    /// state has n_state_fields * N entries, result n_blocks * N.
    virtual Vec lift(const Vec& state, const Vec& theta) const = 0;

    /// Exact inverse of lift on admissible observable vectors.
    virtual Vec restrict_state(const Vec& y) const = 0;

    /// Residuals of all constraint families, stacked family-major:
    /// entries [f*N, (f+1)*N) hold family f at every cell.
    Vec constraint_residual(const Vec& y, const Vec& theta) const;

    /// Analytic Jacobian of constraint_residual with respect to y.
    Eigen::SparseMatrix<double> constraint_jacobian(const Vec& y, const Vec& theta) const;

    int n_constraint_families() const { return static_cast<int>(families().size()); }
    int cells_of(const Vec& y) const;
};

/// Scalar diffusion-reaction system: state u, observables
/// [u, s(u)] with s(u) = (mu1/mu2) (exp(mu2 u) - 1). The second
/// observable is evaluated through expm1 so that s -> mu1 u smoothly as
/// mu2 -> 0.
class CanonicalSystem final : public ObservableSystem {
public:
    CanonicalSystem();
    std::string name() const override { return "canonical"; }
    int n_state_fields() const override { return 1; }
    int n_blocks() const override { return 2; }
    int n_params() const override { return 2; }
    void check_params(const Vec& theta) const override;
    const std::vector<ConstraintFamily>& families() const override { return families_; }
    Vec lift(const Vec& state, const Vec& theta) const override;
    Vec restrict_state(const Vec& y) const override;

    /// s(u; mu) and its derivative mu1 exp(mu2 u).
    static double source(double u, double mu1, double mu2);
    static double source_derivative(double u, double mu1, double mu2);

private:
    std::vector<ConstraintFamily> families_;
};

/// Compressible-flow system: state [rho, u, v, p], observables
/// [rho u, rho v, rho u v, p, rho u^2, rho v^2, rho u H, rho v H] with
/// the specific-heat ratio gamma carried as a scalar side channel (it is
/// spatially constant). The four closure relations tie the quadratic
/// observables back to the convective ones and degenerate where a
/// velocity component vanishes; those points are reported as errors
/// rather than regularized.
class EulerSystem final : public ObservableSystem {
public:
    explicit EulerSystem(double gamma = 1.4);
    std::string name() const override { return "euler"; }
    int n_state_fields() const override { return 4; }
    int n_blocks() const override { return 8; }
    int n_params() const override { return 2; }  // (Mach, alpha): metadata only
    void check_params(const Vec& theta) const override;
    const std::vector<ConstraintFamily>& families() const override { return families_; }
    Vec lift(const Vec& state, const Vec& theta) const override;
    Vec restrict_state(const Vec& y) const override;

    double gamma() const { return gamma_; }

private:
    double gamma_;
    std::vector<ConstraintFamily> families_;
};

/// Factory keyed by the config-level system name ("canonical" | "euler").
std::shared_ptr<const ObservableSystem> make_system(const std::string& name, double gamma = 1.4);

}  // namespace romfv
