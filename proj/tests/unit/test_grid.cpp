#include <cmath>
#include <numbers>

#include "doctest.h"
#include "obbq/errors.hpp"
#include "obbq/grid.hpp"

using namespace obbq;

namespace {
double gaussian(const std::array<double, 3>& x) {
    return std::exp(-0.5 * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]));
}
}  // namespace

TEST_CASE("make_grid spacing and symmetry") {
    const Grid g = make_grid(4.0, 8);
    CHECK(g.spacing == 1.0);
    CHECK(g.cell_count() == 512);
    for (int i = 0; i < 8; ++i) CHECK(g.cell_center(i) == -g.cell_center(7 - i));
    CHECK(g.face(4) == 0.0);
    CHECK(make_grid(8.0, 128).spacing == 0.125);
    CHECK(g.spacing * g.cells == 2.0 * g.half_width);
}

TEST_CASE("make_grid rejects bad sizes") {
    CHECK_THROWS_AS(make_grid(4.0, 7), Error);
    CHECK_THROWS_AS(make_grid(4.0, 6), Error);
    CHECK_THROWS_AS(make_grid(-1.0, 8), Error);
    try {
        make_grid(4.0, 7);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::InvalidGrid);
    }
}

TEST_CASE("l2 norm of constants and zero") {
    const Grid g = make_grid(1.0, 8);
    CHECK(l2_norm(ScalarField(g)) == 0.0);
    CHECK(l2_norm(ScalarField(g, 1.0)) == doctest::Approx(std::sqrt(8.0)).epsilon(1e-14));
}

TEST_CASE("Gaussian norms on R=8, n=128") {
    const Grid g = make_grid(8.0, 128);
    const ScalarField f = make_scalar(g, gaussian);
    CHECK(std::abs(l2_norm(f) - std::pow(std::numbers::pi, 0.75)) <= 1e-3);
    const double grad = std::sqrt(1.5 * std::pow(std::numbers::pi, 1.5));
    CHECK(std::abs(h1_seminorm(f) - grad) <= 1e-2);
    CHECK(std::abs(h1_seminorm(f, Closure::Dirichlet) - grad) <= 1e-2);
}

TEST_CASE("norm scaling, symmetry and second-order refinement") {
    const double exact = std::pow(std::numbers::pi, 0.75);
    double prev_err = 0.0;
    for (int n : {16, 32}) {
        const Grid g = make_grid(8.0, n);
        const ScalarField f = make_scalar(g, [](const auto& x) { return gaussian(x) * (1.0 + 0.3 * x[0]); });
        const ScalarField fm = make_scalar(g, [](const auto& x) { return gaussian(x) * (1.0 - 0.3 * x[0]); });
        CHECK(l2_norm(-3.5 * f) == doctest::Approx(3.5 * l2_norm(f)).epsilon(1e-13));
        CHECK(l2_norm(f) == doctest::Approx(l2_norm(fm)).epsilon(1e-14));
        const double err = std::abs(l2_norm(make_scalar(g, gaussian)) - exact);
        if (prev_err > 0.0) CHECK(prev_err / err > 3.5);
        prev_err = err;
    }
}

TEST_CASE("h1 of constant vanishes, Dirichlet energy matches") {
    const Grid g = make_grid(2.0, 8);
    CHECK(h1_seminorm(ScalarField(g, 2.0)) == 0.0);
    // Dirichlet closure counts the jump to the reflected ghost.
    CHECK(h1_seminorm(ScalarField(g, 1.0), Closure::Dirichlet) > 0.0);
}

TEST_CASE("interpolation reproduces linear fields") {
    const Grid coarse = make_grid(2.0, 8);
    const Grid fine = make_grid(2.0, 16);
    const auto lin = [](const std::array<double, 3>& x) { return 1.0 + 2.0 * x[0] - x[1] + 0.5 * x[2]; };
    const ScalarField f = make_scalar(coarse, lin);
    const ScalarField g = interpolate_to(f, fine);
    const Layout l = g.layout();
    double err = 0.0;
    for (int k = 0; k < 16; ++k)
        for (int j = 0; j < 16; ++j)
            for (int i = 0; i < 16; ++i)
                err = std::max(err, std::abs(g(i, j, k) - lin(node_position(fine, l, i, j, k))));
    CHECK(err < 1e-13);
    const VectorField v = make_vector(coarse, [](int, const auto& x) { return x[0]; });
    const VectorField w = interpolate_to(v, fine);
    double verr = 0.0;
    for (int a = 0; a < 3; ++a) {
        const Layout la = w.layout(a);
        for (int k = 0; k < la.dims[2]; ++k)
            for (int j = 0; j < la.dims[1]; ++j)
                for (int i = 0; i < la.dims[0]; ++i)
                    verr = std::max(verr, std::abs(w(a, i, j, k) - node_position(fine, la, i, j, k)[0]));
    }
    CHECK(verr < 1e-13);
    CHECK(sample(f, {5.0, 0.0, 0.0}) == 0.0);
}

TEST_CASE("restrict copies nodes and rejects oversize domains") {
    const Grid g = make_grid(4.0, 16);
    const ScalarField f = make_scalar(g, [](const auto& x) { return x[0] + 10 * x[1] + 100 * x[2]; });
    const ScalarField r = restrict_to(f, 2.0);
    CHECK(r.grid.cells == 8);
    CHECK(r.grid.spacing == g.spacing);
    const Layout l = r.layout();
    for (int k = 0; k < 8; ++k)
        for (int j = 0; j < 8; ++j)
            for (int i = 0; i < 8; ++i) {
                const auto x = node_position(r.grid, l, i, j, k);
                CHECK(r(i, j, k) == doctest::Approx(x[0] + 10 * x[1] + 100 * x[2]).epsilon(1e-14));
            }
    CHECK_THROWS_AS(restrict_to(f, 5.0), Error);
    CHECK_THROWS_AS(restrict_to(f, 1.75), Error);
    const VectorField v = make_vector(g, [](int a, const auto& x) { return a + x[a]; });
    const VectorField rv = restrict_to(v, 2.0);
    CHECK(rv(0, 0, 0, 0) == doctest::Approx(-2.0));
    CHECK(rv(2, 3, 3, 8) == doctest::Approx(4.0));
}

TEST_CASE("grid mismatch detected") {
    ScalarField a(make_grid(1.0, 8)), b(make_grid(1.0, 10));
    CHECK_THROWS_AS(a += b, Error);
}
