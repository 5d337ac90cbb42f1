/// @file grid.hpp
/// @brief Truncated cube domain, MAC field layout, discrete norms and transfers.
///
/// The domain is the cube [-R, R]^3 split into n^3 cells of width h = 2R/n.
/// Scalars live at cell centers. Vector component a lives on the faces normal
/// to axis a, so its array has n+1 nodes along a (the two outermost are the
/// boundary faces) and n nodes along the other two axes.
///
/// Coordinates are computed as (i + 1/2 - n/2) h for cell centers and
/// (i - n/2) h for faces, which makes them exactly antisymmetric about the
/// origin. Because n is even the origin is a cell vertex: no cell center and
/// no face center ever coincides with it.
///
/// Arrays are stored x-fastest: index = i + nx (j + ny k).
#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace obbq {

struct Grid {
    double half_width = 0.0;
    int cells = 0;
    double spacing = 0.0;

    double cell_center(int i) const { return (i + 0.5 - cells / 2) * spacing; }
    double face(int i) const { return static_cast<double>(i - cells / 2) * spacing; }
    double cell_volume() const { return spacing * spacing * spacing; }
    std::size_t cell_count() const {
        return static_cast<std::size_t>(cells) * cells * cells;
    }

    friend bool operator==(const Grid& a, const Grid& b) {
        return a.half_width == b.half_width && a.cells == b.cells;
    }
};

/// Throws InvalidGrid unless R > 0, n even and n >= 8.
Grid make_grid(double half_width, int cells);

/// Throws GridMismatch when the two grids differ.
void require_same_grid(const Grid& a, const Grid& b, const char* where);

/// Shape of one node array: per-axis extent and whether that axis is face-located.
struct Layout {
    std::array<int, 3> dims{};
    std::array<bool, 3> face{};

    std::size_t size() const {
        return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
    }
    std::size_t index(int i, int j, int k) const {
        return static_cast<std::size_t>(i) +
               static_cast<std::size_t>(dims[0]) *
                   (static_cast<std::size_t>(j) + static_cast<std::size_t>(dims[1]) * k);
    }
    std::size_t stride(int axis) const {
        return axis == 0 ? 1 : axis == 1 ? static_cast<std::size_t>(dims[0])
                                         : static_cast<std::size_t>(dims[0]) * dims[1];
    }

    static Layout cells(const Grid& g) { return {{g.cells, g.cells, g.cells}, {false, false, false}}; }
    static Layout faces(const Grid& g, int axis) {
        Layout l = cells(g);
        l.dims[axis] += 1;
        l.face[axis] = true;
        return l;
    }
};

/// Coordinate of node `i` along `axis` of layout `l`.
inline double node_coordinate(const Grid& g, const Layout& l, int axis, int i) {
    return l.face[axis] ? g.face(i) : g.cell_center(i);
}

/// Position of node (i, j, k) of layout `l`.
inline std::array<double, 3> node_position(const Grid& g, const Layout& l, int i, int j, int k) {
    return {node_coordinate(g, l, 0, i), node_coordinate(g, l, 1, j), node_coordinate(g, l, 2, k)};
}

/// One 64-bit value per cell center.
struct ScalarField {
    Grid grid;
    std::vector<double> values;

    ScalarField() = default;
    explicit ScalarField(const Grid& g, double fill = 0.0)
        : grid(g), values(g.cell_count(), fill) {}

    Layout layout() const { return Layout::cells(grid); }
    double& operator()(int i, int j, int k) { return values[layout().index(i, j, k)]; }
    double operator()(int i, int j, int k) const { return values[layout().index(i, j, k)]; }
};

/// Staggered vector field; component a holds values on faces normal to axis a.
struct VectorField {
    Grid grid;
    std::array<std::vector<double>, 3> comp;

    VectorField() = default;
    explicit VectorField(const Grid& g, double fill = 0.0) : grid(g) {
        for (int a = 0; a < 3; ++a) comp[a].assign(Layout::faces(g, a).size(), fill);
    }

    Layout layout(int axis) const { return Layout::faces(grid, axis); }
    double& operator()(int a, int i, int j, int k) { return comp[a][layout(a).index(i, j, k)]; }
    double operator()(int a, int i, int j, int k) const { return comp[a][layout(a).index(i, j, k)]; }
};

/// Samples fn(x) at every cell center.
template <class Fn>
ScalarField make_scalar(const Grid& g, Fn&& fn) {
    ScalarField f(g);
    const Layout l = f.layout();
    for (int k = 0; k < l.dims[2]; ++k)
        for (int j = 0; j < l.dims[1]; ++j)
            for (int i = 0; i < l.dims[0]; ++i) f.values[l.index(i, j, k)] = fn(node_position(g, l, i, j, k));
    return f;
}

/// Samples component a as fn(a, x) on the faces normal to a.
template <class Fn>
VectorField make_vector(const Grid& g, Fn&& fn) {
    VectorField f(g);
    for (int a = 0; a < 3; ++a) {
        const Layout l = f.layout(a);
        for (int k = 0; k < l.dims[2]; ++k)
            for (int j = 0; j < l.dims[1]; ++j)
                for (int i = 0; i < l.dims[0]; ++i)
                    f.comp[a][l.index(i, j, k)] = fn(a, node_position(g, l, i, j, k));
    }
    return f;
}

// Elementwise algebra used by the solvers. All require matching grids.
ScalarField& operator+=(ScalarField& a, const ScalarField& b);
ScalarField& operator-=(ScalarField& a, const ScalarField& b);
ScalarField& operator*=(ScalarField& a, double s);
ScalarField operator+(ScalarField a, const ScalarField& b);
ScalarField operator-(ScalarField a, const ScalarField& b);
ScalarField operator*(double s, ScalarField a);
VectorField& operator+=(VectorField& a, const VectorField& b);
VectorField& operator-=(VectorField& a, const VectorField& b);
VectorField& operator*=(VectorField& a, double s);
VectorField operator+(VectorField a, const VectorField& b);
VectorField operator-(VectorField a, const VectorField& b);
VectorField operator*(double s, VectorField a);
void axpy(double alpha, const VectorField& x, VectorField& y);
void axpy(double alpha, const ScalarField& x, ScalarField& y);

/// Boundary treatment for stencils that reach past the outermost cell layer.
///  - Dirichlet: ghost = -value, i.e. zero at the wall (perturbation fields V, Psi).
///  - Extrapolate: ghost = 2 value - neighbour (given profiles that do not vanish at the wall).
///  - Free: only differences between existing nodes are used (norms only).
enum class Closure { Dirichlet, Extrapolate, Free };

/// Discrete L2 inner products. Boundary faces carry half weight (trapezoid rule).
double inner(const ScalarField& a, const ScalarField& b);
double inner(const VectorField& a, const VectorField& b);

/// sqrt(h^3 sum v^2), fixed summation order.
double l2_norm(const ScalarField& f);
double l2_norm(const VectorField& f);
double max_abs(const ScalarField& f);
double max_abs(const VectorField& f);
bool all_finite(const ScalarField& f);
bool all_finite(const VectorField& f);

/// sqrt(h^3 sum v^2) over nodes at least `margin` cells from every wall and
/// with |x| >= exclusion_radius. Fixed summation order.
double interior_norm(const ScalarField& f, int margin, double exclusion_radius = 0.0);
double interior_norm(const VectorField& f, int margin, double exclusion_radius = 0.0);

/// ||grad f||_2 from node differences. With Closure::Dirichlet the wall
/// differences (ghost = -value) are included with half weight, which makes
/// h1_seminorm(f)^2 == <f, -laplacian(f)> exactly for Dirichlet fields.
double h1_seminorm(const ScalarField& f, Closure closure = Closure::Free);
double h1_seminorm(const VectorField& f, Closure closure = Closure::Free);

/// Trilinear evaluation of a node array at an arbitrary point. Inside the
/// node hull the result is trilinear; between the outermost node and the wall
/// it extrapolates linearly; outside [-R, R]^3 it returns 0.
double sample(const Grid& g, const Layout& l, std::span<const double> values,
              const std::array<double, 3>& x);
double sample(const ScalarField& f, const std::array<double, 3>& x);
double sample(const VectorField& f, int axis, const std::array<double, 3>& x);

/// Field on `target` sampled by trilinear interpolation from `f`.
ScalarField interpolate_to(const ScalarField& f, const Grid& target);
VectorField interpolate_to(const VectorField& f, const Grid& target);

/// Exact copy of the node values inside [-r, r]^3. `r` must be a positive
/// multiple of the spacing not exceeding the source half-width; otherwise
/// DomainMismatch is thrown.
ScalarField restrict_to(const ScalarField& f, double sub_half_width);
VectorField restrict_to(const VectorField& f, double sub_half_width);

}  // namespace obbq
