/// @file solver.hpp
/// @brief Picard iteration inside a lambda continuation for the truncated-domain problem.
///
/// Unknowns are the perturbations V = U - U0 (MAC faces, zero on the walls),
/// Psi = Theta - Theta0 (cells, Dirichlet ghosts) and the pressure P. At a
/// fixed lambda in [0, 1] they solve
///
///   A V + grad P = lambda ( -(W.grad)(U0 + V) + (Psi + Theta0) rho_k grad(1/|x|) + F ),
///   div V = 0,
///   A Psi        = -lambda div((Psi + Theta0) W),
///
/// with A = -laplacian - lambda (1 + x.grad) and the transport velocity
/// W = U0s + V. U0s is U0 made discretely solenoidal (wall flux balanced, then
/// projected with its wall values kept), so the discrete transport is skew
/// and the energy identities close.
#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "obbq/errors.hpp"
#include "obbq/grid.hpp"
#include "obbq/heat_profiles.hpp"
#include "obbq/linalg.hpp"
#include "obbq/operators.hpp"

namespace obbq {

struct SolverConfig {
    double initial_step = 0.25;
    double min_step = 1.0 / 1024.0;
    double bisection_factor = 0.5;
    double tolerance = 1e-8;  ///< relative residual of the full system
    int max_iterations = 200;
    double relaxation = 0.7;
    double inner_tolerance = 1e-10;
    bool upwind = false;
    /// Abort when ||V||_H1^2 + ||Psi||_H1^2 exceeds this along the path.
    double apriori_ceiling = 1e8;

    /// Throws ConfigError when an invariant is violated.
    void validate() const;
    DriftScheme scheme() const { return upwind ? DriftScheme::Upwind : DriftScheme::Centered; }
};

struct IterationRecord {
    double lambda = 0.0;
    int iteration = 0;
    double residual = 0.0;
    double velocity_h1 = 0.0;
    double temperature_h1 = 0.0;
};

struct ContinuationState {
    double lambda = 0.0;
    VectorField velocity;     ///< V
    ScalarField temperature;  ///< Psi
    ScalarField pressure;     ///< P
    std::vector<IterationRecord> history;
    int cutoff_index = 1;
    VectorField forcing;      ///< F
    int total_iterations = 0;
};

ContinuationState zero_state(const Grid& g, int cutoff_index, const VectorField& forcing);

/// Data-dependent operators and cached per-lambda factorizations.
class OperatorSet {
public:
    OperatorSet(const HeatProfiles& profiles, int cutoff_index, const VectorField& forcing,
                DriftScheme scheme = DriftScheme::Centered);

    const Grid& grid() const { return profiles_->grid; }
    const HeatProfiles& profiles() const { return *profiles_; }
    const VectorField& transport() const { return transport_; }
    const VectorField& forcing() const { return forcing_; }
    const CutoffFamily& cutoff() const { return cutoff_; }
    DriftScheme scheme() const { return scheme_; }

    /// W = U0s + V.
    VectorField transport_velocity(const VectorField& v) const;
    /// (W.grad)(U0 + V).
    VectorField convection(const VectorField& w, const VectorField& v) const;
    /// div((Psi + Theta0) W).
    ScalarField heat_flux_divergence(const VectorField& w, const ScalarField& psi) const;

    /// A^{-1} b for the scalar principal operator.
    ScalarField solve_scalar(const ScalarField& b, double lambda) const;
    /// Componentwise A^{-1} on interior faces; wall faces of the result are 0.
    VectorField solve_vector(const VectorField& b, double lambda) const;

    /// Norm of the right-hand sides at V = 0, Psi = 0 (0 for zero data).
    double data_scale(double lambda) const;

private:
    struct Factors;
    const Factors& factors(double lambda) const;
    double compute_unit_scale() const;

    std::shared_ptr<const HeatProfiles> profiles_;
    VectorField transport_;
    VectorField forcing_;
    CutoffFamily cutoff_;
    DriftScheme scheme_;
    double unit_scale_ = 0.0;
    mutable std::mutex mutex_;
    mutable std::shared_ptr<const Factors> cached_;
};

struct SystemResidual {
    double momentum = 0.0;
    double divergence = 0.0;
    double temperature = 0.0;
    double scale = 0.0;     ///< data_scale, or 0 when the data vanish
    double relative = 0.0;  ///< combined norm / scale (absolute when scale is 0)
};

/// Discrete L2 residual of the full system at state.lambda, wall rows included.
SystemResidual system_residual(const ContinuationState& s, const OperatorSet& ops);
double residual_ssr(const ContinuationState& s, const OperatorSet& ops);

/// One Gauss-Seidel sweep (temperature, then velocity) with under-relaxation.
/// Returns the relative residual at the new iterate.
double picard_step(ContinuationState& s, const OperatorSet& ops, const SolverConfig& cfg);

/// Picard iterations at lambda_target until the residual meets the tolerance.
/// Returns the iteration count. Throws PicardDiverged, NonFiniteIterate,
/// InnerSolveFailure or AprioriBoundExceeded.
int solve_at_lambda(ContinuationState& s, double lambda_target, const OperatorSet& ops, const SolverConfig& cfg);

/// Carries the failed path so callers can report it.
class ContinuationError : public Error {
public:
    ContinuationError(ErrorCode code, const std::string& message, ContinuationState state)
        : Error(code, message), state_(std::move(state)) {}
    const ContinuationState& state() const { return state_; }

private:
    ContinuationState state_;
};

using ProgressFn = std::function<void(const IterationRecord&)>;

/// From the zero solution at lambda = 0 to lambda = 1. Bisects the step on
/// Picard failure; throws ContinuationError(ContinuationStalled) once the
/// step would drop below cfg.min_step.
ContinuationState continue_to_one(const OperatorSet& ops, const SolverConfig& cfg, const ProgressFn& progress = {});
ContinuationState continue_to_one(const HeatProfiles& profiles, int cutoff_index, const VectorField& forcing,
                                  const SolverConfig& cfg, const ProgressFn& progress = {});

/// Named terms of an energy identity. They sum to zero at an exact solution.
struct EnergyTerm {
    std::string name;
    double value = 0.0;
};

struct EnergyIdentity {
    std::vector<EnergyTerm> terms;
    double sum = 0.0;
    double magnitude = 0.0;        ///< sum of |terms|
    double relative_defect = 0.0;  ///< |sum| / magnitude (0 when everything vanishes)
};

struct EnergyReport {
    EnergyIdentity temperature;
    EnergyIdentity velocity;
    /// |grad Psi|^2/2 + lambda/2 |Psi|^2 and lambda (|Theta0|_inf^2 |V|^2 + |Theta0 U0|^2).
    double estimate_lhs = 0.0;
    double estimate_rhs = 0.0;
};

/// Tests the state against V and Psi. Wall contributions of the drift and
/// the transport are kept as separate terms.
EnergyReport energy_identities(const ContinuationState& s, const OperatorSet& ops);

/// ||f||_2^2 + ||grad f||_2^2 with Dirichlet wall differences, square-rooted.
double h1_norm(const ScalarField& f);
double h1_norm(const VectorField& f);

/// CSV with columns lambda,iteration,residual,velocity_h1,temperature_h1.
void write_convergence_csv(const std::filesystem::path& path, const std::vector<IterationRecord>& history);

}  // namespace obbq
