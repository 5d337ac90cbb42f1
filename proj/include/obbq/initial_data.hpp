/// @file initial_data.hpp
/// @brief Degree -1 homogeneous initial data described by its values on the unit sphere.
///
/// u0(x) = amplitude * sigma_u(x/|x|) / |x|,  theta0(x) = amplitude * sigma_theta(x/|x|) / |x|.
/// Homogeneity is built into the evaluation rule, so only the sphere maps vary
/// between families.
#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "obbq/grid.hpp"

namespace obbq {

using Vec3 = std::array<double, 3>;

/// Values of (sigma_u, sigma_theta) at one unit direction.
struct SphereValue {
    Vec3 velocity{};
    double temperature = 0.0;
};

using SphereMap = std::function<SphereValue(const Vec3& direction)>;

class HomogeneousData {
public:
    HomogeneousData();
    HomogeneousData(std::string family, SphereMap map, double amplitude = 1.0);

    /// a (e x x) / |x|^2, with e a unit axis (default e3).
    static HomogeneousData swirl(double a, Vec3 axis = {0.0, 0.0, 1.0});
    /// Temperature b / |x|, no velocity.
    static HomogeneousData radial_temperature(double b);
    /// Temperature c Y_lm(x/|x|) / |x| with the real orthonormal harmonic Y_lm.
    static HomogeneousData spherical_harmonic(int l, int m, double c);
    /// Lat-long table with columns (polar_angle, azimuth, su1, su2, su3, stheta).
    static HomogeneousData tabulated(const std::string& csv_path);

    const std::string& family() const { return family_; }
    double amplitude() const { return amplitude_; }

    /// amplitude * (sigma_u, sigma_theta) at a unit direction.
    SphereValue on_sphere(const Vec3& direction) const;

    /// (u0(x), theta0(x)). Throws OriginEvaluation at x = 0.
    std::pair<Vec3, double> evaluate(const Vec3& x) const;

    /// Stable fingerprint of the sphere maps (sampled at fixed directions).
    std::uint64_t hash() const;

    HomogeneousData scaled(double factor) const;
    friend HomogeneousData operator+(const HomogeneousData& a, const HomogeneousData& b);

private:
    std::string family_;
    SphereMap map_;
    double amplitude_ = 1.0;
};

/// Maximum relative defect of lambda*f(lambda x) = f(x) over random points and
/// lambda in {2, 1/2}. Fixed seed, so the result is reproducible.
double check_homogeneity(const HomogeneousData& d, int sample_count);

struct DivergenceReport {
    double residual = 0.0;
    double tolerance = 0.0;
    bool passed = true;
};

/// Weak divergence of u0 against smooth compactly supported bumps:
/// max |h^3 sum u0 . grad(phi)| / ||phi||_H1, cells with |x| < h skipped.
/// Tolerance is 10 h^2.
DivergenceReport divergence_residual(const HomogeneousData& d, const Grid& g);

/// As divergence_residual but throws NotDivergenceFree on failure.
double check_divergence(const HomogeneousData& d, const Grid& g);

}  // namespace obbq
