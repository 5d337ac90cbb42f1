/// @file heat_profiles.hpp
/// @brief Heat-flow profiles U0 = G_{1/2} * u0 and Theta0 = G_{1/2} * theta0 by quadrature.
///
/// At every grid point the convolution with the Gaussian kernel
/// G(z) = (2 pi)^{-3/2} exp(-|z|^2/2) is evaluated in spherical coordinates
/// centred on the data singularity y = 0, with the polar axis along x. The
/// 1/|y| factor of the data cancels against the r^2 Jacobian, leaving the
/// smooth radial weight r G. Polar angle and radius use Gauss-Legendre nodes
/// inside the ball |x - y| <= T, azimuth the periodic trapezoid rule.
///
/// Gradients use the exact kernel derivative:
///   d_j U0_i(x) = int y_j G(x-y) u0_i(y) dy - x_j U0_i(x).
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "obbq/grid.hpp"
#include "obbq/initial_data.hpp"

namespace obbq {

struct QuadratureConfig {
    int radial_nodes = 32;
    int angular_nodes = 64;
    /// Truncation radius of the kernel, in kernel standard deviations (sigma = 1).
    double truncation_radius = 6.0 * std::sqrt(2.0);
};

struct PointProfile {
    Vec3 velocity{};
    double temperature = 0.0;
    std::array<Vec3, 3> velocity_gradient{};  ///< [i][j] = d_j U0_i
    Vec3 temperature_gradient{};
};

/// Validates the configuration. Throws QuadratureUnderflow when the
/// truncation radius is below 6 and InvalidArgument for too few nodes.
void validate(const QuadratureConfig& q);

/// Quadrature at a single point.
PointProfile evaluate_profile(const HomogeneousData& d, const Vec3& x, const QuadratureConfig& q = {});

struct HeatProfiles {
    Grid grid;
    VectorField velocity;           ///< U0 on MAC faces
    ScalarField temperature;        ///< Theta0 at cell centers
    VectorField temperature_faces;  ///< component a: Theta0 on the faces normal to a
    /// [i][j]: d_j U0_i on the faces normal to i.
    std::array<std::array<std::vector<double>, 3>, 3> velocity_gradient;
    std::array<ScalarField, 3> temperature_gradient;
    QuadratureConfig quadrature;
    std::uint64_t data_hash = 0;
};

HeatProfiles zero_profiles(const Grid& g);

/// Which parts to fill; skipped parts stay zero. Gradients roughly double the cost.
struct ProfileParts {
    bool cells = true;      ///< Theta0 and its gradient at cell centers
    bool gradients = true;  ///< velocity and temperature gradients
};

HeatProfiles compute_profiles(const HomogeneousData& d, const Grid& g, const QuadratureConfig& q = {},
                              const ProfileParts& parts = {});

/// compute_profiles with an on-disk cache keyed by (data hash, grid, quadrature).
HeatProfiles cached_profiles(const HomogeneousData& d, const Grid& g, const QuadratureConfig& q,
                             const std::filesystem::path& cache_dir);

/// f + x.grad f + laplacian f with extrapolated ghosts; only meaningful away
/// from the walls.
ScalarField self_similar_operator(const ScalarField& f);
VectorField self_similar_operator(const VectorField& f);

struct ProfileResidual {
    double velocity = 0.0;
    double temperature = 0.0;
};

/// Interior (margin 2 cells) L2 norms of U0 + x.grad U0 + lap U0 and the same for Theta0.
ProfileResidual residual_profile_pde(const HeatProfiles& p);

struct DecayConstants {
    double value = 0.0;     ///< max (1+|x|) (|U0| + |Theta0|)
    double gradient = 0.0;  ///< max (1+|x|) (|grad U0| + |grad Theta0|)
};

/// Evaluated at cell centers; face data are averaged to the cell.
DecayConstants decay_constants(const HeatProfiles& p);

/// max |div U0| over cells.
double velocity_divergence_max(const HeatProfiles& p);

/// Discrete L4 norms of grad U0 and grad Theta0 at cell centers.
std::array<double, 2> gradient_l4_norms(const HeatProfiles& p);

}  // namespace obbq
