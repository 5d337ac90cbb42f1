#include <doctest.h>

#include <cmath>
#include <numbers>

#include "obbq/errors.hpp"
#include "obbq/heat_profiles.hpp"
#include "obbq/initial_data.hpp"
#include "obbq/verify.hpp"

using namespace obbq;

namespace {

double gaussian(const std::array<double, 3>& x) { return std::exp(-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2])); }

}  // namespace

TEST_CASE("profile system residual vanishes on zero fields") {
    const Grid g = make_grid(3.0, 8);
    const auto r = residual_bss(VectorField(g), ScalarField(g), ScalarField(g));
    CHECK(r.momentum == 0.0);
    CHECK(r.divergence == 0.0);
    CHECK(r.temperature == 0.0);
}

TEST_CASE("linear part of the profile system matches the heat-profile residual bitwise") {
    const Grid g = make_grid(4.0, 8);
    const HeatProfiles p = compute_profiles(HomogeneousData::radial_temperature(1.0), g);
    ProfileSystemOptions opt;
    opt.nonlinear = false;
    opt.coupling = false;
    const auto r = residual_bss(p.velocity, p.temperature, ScalarField(g), opt);
    const auto q = residual_profile_pde(p);
    CHECK(r.momentum == q.velocity);
    CHECK(r.temperature == q.temperature);
}

TEST_CASE("reconstruction at t = 1/2 is the identity and rescales otherwise") {
    const Grid g = make_grid(4.0, 32);
    const ScalarField th = make_scalar(g, gaussian);
    const VectorField u = make_vector(g, [](int a, const auto& x) { return (a + 1) * gaussian(x); });
    const Reconstruction half = reconstruct(u, th, 0.5);
    CHECK(half.temperature.values == th.values);
    CHECK(half.velocity.grid == g);

    // ||u(., t)||^2 = (2t)^{1/2} ||U||^2; closed form of the Gaussian integral.
    const double t = 2.0;
    const Reconstruction r = reconstruct(u, th, t);
    CHECK(r.temperature.grid.half_width == doctest::Approx(8.0));
    const double exact = std::pow(std::numbers::pi / 2.0, 0.75) * std::pow(2.0 * t, 0.25);
    CHECK(l2_norm(r.temperature) == doctest::Approx(exact).epsilon(1e-3));
    for (double bad : {0.0, -1.0}) {
        try {
            reconstruct(u, th, bad);
            FAIL("accepted a nonpositive time");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::TimeNonpositive);
        }
    }
}

TEST_CASE("scaling check") {
    const Grid g = make_grid(4.0, 16);
    const ScalarField th = make_scalar(g, gaussian);
    const VectorField u = make_vector(g, [](int a, const auto& x) { return x[a] * gaussian(x); });
    CHECK(check_scaling(u, th, 1.0) == 0.0);
    CHECK(check_scaling(u, th, 2.0) <= 5.0 * g.spacing * g.spacing);
    CHECK(check_scaling(u, th, 0.5) <= 5.0 * g.spacing * g.spacing);
    CHECK_THROWS_AS(check_scaling(u, th, 3.0), Error);
}

TEST_CASE("time laws of a perturbation profile") {
    const Grid g = make_grid(4.0, 16);
    const ScalarField psi = make_scalar(g, gaussian);
    const VectorField v = make_vector(g, [](int a, const auto& x) { return std::sin(x[a]) * gaussian(x); });
    const TimeLaw law = time_law_constants(v, psi, {0.5, 1.0, 2.0});
    CHECK(law.dispersion <= 1e-6);
    CHECK(law.value_exponent == doctest::Approx(0.25).epsilon(1e-9));
    CHECK(law.gradient_exponent == doctest::Approx(-0.25).epsilon(1e-9));
    // norm(t) = (2t)^{1/4} (||V|| + ||Psi||).
    CHECK(law.c == doctest::Approx(std::pow(2.0, 0.25) * (l2_norm(v) + l2_norm(psi))).epsilon(1e-9));

    const TimeLaw zero = time_law_constants(VectorField(g), ScalarField(g), {0.5, 1.0, 2.0});
    CHECK(zero.c == 0.0);
    CHECK(zero.c_prime == 0.0);
    CHECK_THROWS_AS(time_law_constants(v, psi, {0.5, 1.0}), Error);
}

TEST_CASE("weak L3 quasinorm of a constant field") {
    const Grid g = make_grid(2.0, 8);
    VectorField u(g);
    for (auto& x : u.comp[0]) x = 2.0;
    // |U| = 2 on the whole cube of volume 64.
    CHECK(weak_l3_quasinorm(u) == doctest::Approx(2.0 * std::cbrt(64.0)));
}

TEST_CASE("verification report") {
    VerificationReport r;
    r.add("a", 0.5, 1.0);
    r.add("b", 5.0, 0.0, false);
    CHECK(r.passed());
    r.add("c", std::nan(""), 1.0);
    CHECK_FALSE(r.passed());
    const auto j = r.to_json();
    CHECK(j["checks"].size() == 3);
    CHECK(r.to_csv().find("b,5,0,info") != std::string::npos);
}
