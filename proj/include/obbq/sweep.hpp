/// @file sweep.hpp
/// @brief Invading-domain sweep: solves on growing cubes with cutoffs rho_k and
/// compares successive solutions on a fixed inner cube.
#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "obbq/heat_profiles.hpp"
#include "obbq/solver.hpp"

namespace obbq {

enum class CellPolicy { FixedSpacing, FixedCells };

struct SweepConfig {
    std::vector<double> radii{4.0, 8.0, 16.0};
    /// Empty means k = round(R) for every radius.
    std::vector<int> cutoff_indices;
    /// 0 means radii[0] / 2.
    double comparison_half_width = 0.0;
    double tolerance = 1e-6;  ///< early stop when delta_k <= tolerance
    CellPolicy policy = CellPolicy::FixedSpacing;
    double spacing = 0.5;  ///< FixedSpacing
    int cells = 32;        ///< FixedCells
    double growth_factor = 1.5;
    double ceiling = 1e8;  ///< bound on J_k^2 + L_k^2
    QuadratureConfig quadrature;
    std::filesystem::path cache_dir;     ///< heat-profile cache, empty disables
    std::filesystem::path snapshot_dir;  ///< per-radius fields, empty disables

    /// Throws ConfigError.
    void validate() const;
    int cutoff_for(std::size_t i) const;
    Grid grid_for(std::size_t i) const;
    double inner_half_width() const { return comparison_half_width > 0.0 ? comparison_half_width : radii[0] / 2.0; }
};

struct RadiusDiagnostics {
    double radius = 0.0;
    int cutoff_index = 0;
    int cells = 0;
    double j = 0.0;  ///< (int |V|^2/2 + |grad V|^2)^{1/2}
    double l = 0.0;  ///< same for Psi
    std::optional<double> delta;  ///< L2 difference to the previous radius on the inner cube
    double residual = 0.0;
    int iterations = 0;
    double wall_seconds = 0.0;
    double estimate_lhs = 0.0;  ///< int |grad Psi|^2 + int Psi^2
    double estimate_rhs = 0.0;  ///< 2 (|Theta0|_inf^2 int |V|^2 + int |Theta0 U0|^2)
};

enum class SweepStatus { Converged, Decreasing, Inconclusive };
std::string status_name(SweepStatus s);

struct AssembledProfiles {
    VectorField velocity;     ///< U = U0 + V
    ScalarField temperature;  ///< Theta = Theta0 + Psi
    ScalarField pressure;
};

struct SweepResult {
    std::vector<RadiusDiagnostics> diagnostics;
    SweepStatus status = SweepStatus::Inconclusive;
    AssembledProfiles profiles;   ///< on the largest solved grid
    ContinuationState state;      ///< final V, Psi, P
    HeatProfiles heat;            ///< heat profiles of the final grid
};

/// U0 + V, Theta0 + Psi, P. Throws GridMismatch.
AssembledProfiles assemble_profiles(const ContinuationState& s, const HeatProfiles& p);

/// J_k and L_k.
double sweep_norm(const VectorField& v);
double sweep_norm(const ScalarField& psi);

using RadiusFn = std::function<void(const RadiusDiagnostics&)>;
/// Forcing component a at x; sampled on every grid of the sweep. Empty means F = 0.
using ForcingFn = std::function<double(int a, const std::array<double, 3>& x)>;

/// Throws ContinuationError (radius in the message) or SweepDiverged.
SweepResult run_sweep(const HomogeneousData& data, const ForcingFn& forcing, const SweepConfig& cfg,
                      const SolverConfig& scfg, const RadiusFn& on_radius = {});

/// CSV with columns R,k,n,J,L,delta,residual,iterations,wall_seconds.
void write_sweep_csv(const std::filesystem::path& path, const std::vector<RadiusDiagnostics>& d);

}  // namespace obbq
