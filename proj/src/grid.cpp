#include "obbq/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "obbq/errors.hpp"

namespace obbq {

std::string_view error_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidGrid: return "InvalidGrid";
        case ErrorCode::DomainMismatch: return "DomainMismatch";
        case ErrorCode::GridMismatch: return "GridMismatch";
        case ErrorCode::OriginEvaluation: return "OriginEvaluation";
        case ErrorCode::NotDivergenceFree: return "NotDivergenceFree";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::QuadratureUnderflow: return "QuadratureUnderflow";
        case ErrorCode::PoissonDivergence: return "PoissonDivergence";
        case ErrorCode::ZeroGradient: return "ZeroGradient";
        case ErrorCode::InnerSolveFailure: return "InnerSolveFailure";
        case ErrorCode::NonFiniteIterate: return "NonFiniteIterate";
        case ErrorCode::PicardDiverged: return "PicardDiverged";
        case ErrorCode::ContinuationStalled: return "ContinuationStalled";
        case ErrorCode::AprioriBoundExceeded: return "AprioriBoundExceeded";
        case ErrorCode::SweepDiverged: return "SweepDiverged";
        case ErrorCode::IoError: return "IoError";
        case ErrorCode::FormatError: return "FormatError";
        case ErrorCode::VersionError: return "VersionError";
        case ErrorCode::ConfigError: return "ConfigError";
        case ErrorCode::TimeNonpositive: return "TimeNonpositive";
    }
    return "Unknown";
}

Grid make_grid(double half_width, int cells) {
    if (!(half_width > 0.0) || !std::isfinite(half_width))
        throw Error(ErrorCode::InvalidGrid, "grid half-width must be positive and finite");
    if (cells < 8 || cells % 2 != 0)
        throw Error(ErrorCode::InvalidGrid,
                    "cells per axis must be even and >= 8, got " + std::to_string(cells));
    return Grid{half_width, cells, 2.0 * half_width / cells};
}

void require_same_grid(const Grid& a, const Grid& b, const char* where) {
    if (!(a == b))
        throw Error(ErrorCode::GridMismatch, std::string(where) + ": fields live on different grids");
}

namespace {

template <class F>
F& scalar_op(F& a, const F& b, double s) {
    require_same_grid(a.grid, b.grid, "field arithmetic");
    for (std::size_t i = 0; i < a.values.size(); ++i) a.values[i] += s * b.values[i];
    return a;
}

VectorField& vector_op(VectorField& a, const VectorField& b, double s) {
    require_same_grid(a.grid, b.grid, "field arithmetic");
    for (int c = 0; c < 3; ++c)
        for (std::size_t i = 0; i < a.comp[c].size(); ++i) a.comp[c][i] += s * b.comp[c][i];
    return a;
}

}  // namespace

ScalarField& operator+=(ScalarField& a, const ScalarField& b) { return scalar_op(a, b, 1.0); }
ScalarField& operator-=(ScalarField& a, const ScalarField& b) { return scalar_op(a, b, -1.0); }
ScalarField& operator*=(ScalarField& a, double s) {
    for (double& v : a.values) v *= s;
    return a;
}
ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
ScalarField operator*(double s, ScalarField a) { return a *= s; }

VectorField& operator+=(VectorField& a, const VectorField& b) { return vector_op(a, b, 1.0); }
VectorField& operator-=(VectorField& a, const VectorField& b) { return vector_op(a, b, -1.0); }
VectorField& operator*=(VectorField& a, double s) {
    for (auto& c : a.comp)
        for (double& v : c) v *= s;
    return a;
}
VectorField operator+(VectorField a, const VectorField& b) { return a += b; }
VectorField operator-(VectorField a, const VectorField& b) { return a -= b; }
VectorField operator*(double s, VectorField a) { return a *= s; }

void axpy(double alpha, const VectorField& x, VectorField& y) { vector_op(y, x, alpha); }
void axpy(double alpha, const ScalarField& x, ScalarField& y) { scalar_op(y, x, alpha); }

double inner(const ScalarField& a, const ScalarField& b) {
    require_same_grid(a.grid, b.grid, "inner");
    double s = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) s += a.values[i] * b.values[i];
    return s * a.grid.cell_volume();
}

double inner(const VectorField& a, const VectorField& b) {
    require_same_grid(a.grid, b.grid, "inner");
    const int n = a.grid.cells;
    double s = 0.0;
    for (int c = 0; c < 3; ++c) {
        const Layout l = a.layout(c);
        for (int k = 0; k < l.dims[2]; ++k)
            for (int j = 0; j < l.dims[1]; ++j)
                for (int i = 0; i < l.dims[0]; ++i) {
                    const int along = c == 0 ? i : c == 1 ? j : k;
                    const double w = (along == 0 || along == n) ? 0.5 : 1.0;
                    const std::size_t id = l.index(i, j, k);
                    s += w * a.comp[c][id] * b.comp[c][id];
                }
    }
    return s * a.grid.cell_volume();
}

double l2_norm(const ScalarField& f) { return std::sqrt(inner(f, f)); }
double l2_norm(const VectorField& f) { return std::sqrt(inner(f, f)); }

double max_abs(const ScalarField& f) {
    double m = 0.0;
    for (double v : f.values) m = std::max(m, std::abs(v));
    return m;
}

double max_abs(const VectorField& f) {
    double m = 0.0;
    for (const auto& c : f.comp)
        for (double v : c) m = std::max(m, std::abs(v));
    return m;
}

bool all_finite(const ScalarField& f) {
    return std::all_of(f.values.begin(), f.values.end(), [](double v) { return std::isfinite(v); });
}

bool all_finite(const VectorField& f) {
    for (const auto& c : f.comp)
        if (!std::all_of(c.begin(), c.end(), [](double v) { return std::isfinite(v); })) return false;
    return true;
}

namespace {

double interior_sum(const Grid& g, const Layout& l, const std::vector<double>& v, int margin, double excl) {
    const double lo = -g.half_width + margin * g.spacing - 1e-12 * g.spacing;
    const double hi = -lo;
    double s = 0.0;
    for (int k = 0; k < l.dims[2]; ++k)
        for (int j = 0; j < l.dims[1]; ++j)
            for (int i = 0; i < l.dims[0]; ++i) {
                const auto x = node_position(g, l, i, j, k);
                if (x[0] < lo || x[0] > hi || x[1] < lo || x[1] > hi || x[2] < lo || x[2] > hi) continue;
                if (excl > 0.0 && x[0] * x[0] + x[1] * x[1] + x[2] * x[2] < excl * excl) continue;
                const double w = v[l.index(i, j, k)];
                s += w * w;
            }
    return s;
}

}  // namespace

double interior_norm(const ScalarField& f, int margin, double exclusion_radius) {
    return std::sqrt(interior_sum(f.grid, f.layout(), f.values, margin, exclusion_radius) * f.grid.cell_volume());
}

double interior_norm(const VectorField& f, int margin, double exclusion_radius) {
    double s = 0.0;
    for (int a = 0; a < 3; ++a) s += interior_sum(f.grid, f.layout(a), f.comp[a], margin, exclusion_radius);
    return std::sqrt(s * f.grid.cell_volume());
}

namespace {

// Sum of squared forward differences of one node array along every axis,
// scaled to approximate the integral of |grad|^2.
double gradient_energy(const Grid& g, const Layout& l, const std::vector<double>& v, Closure closure) {
    const double h = g.spacing;
    double s = 0.0;
    for (int axis = 0; axis < 3; ++axis) {
        const std::size_t st = l.stride(axis);
        const int m = l.dims[axis];
        for (int k = 0; k < l.dims[2]; ++k)
            for (int j = 0; j < l.dims[1]; ++j)
                for (int i = 0; i < l.dims[0]; ++i) {
                    const int along = axis == 0 ? i : axis == 1 ? j : k;
                    const std::size_t id = l.index(i, j, k);
                    if (along + 1 < m) {
                        const double d = v[id + st] - v[id];
                        s += d * d;
                    }
                    // Wall differences on cell-centred axes: ghost = -value
                    // sits one cell away, the dual cell is half as wide.
                    if (closure == Closure::Dirichlet && !l.face[axis] && (along == 0 || along == m - 1))
                        s += 2.0 * v[id] * v[id];
                }
    }
    return s * h;  // h^3 * (d/h)^2
}

}  // namespace

double h1_seminorm(const ScalarField& f, Closure closure) {
    return std::sqrt(gradient_energy(f.grid, f.layout(), f.values, closure));
}

double h1_seminorm(const VectorField& f, Closure closure) {
    double s = 0.0;
    for (int c = 0; c < 3; ++c) s += gradient_energy(f.grid, f.layout(c), f.comp[c], closure);
    return std::sqrt(s);
}

namespace {

// Locate x along one axis: lower node index and fractional weight. Points
// between the outermost node and the wall use the nearest pair (linear
// extrapolation).
bool locate(const Grid& g, const Layout& l, int axis, double x, int& i0, double& t) {
    const double R = g.half_width;
    if (x < -R || x > R) return false;
    const double h = g.spacing;
    const int m = l.dims[axis];
    const double first = node_coordinate(g, l, axis, 0);
    double pos = (x - first) / h;
    int i = static_cast<int>(std::floor(pos));
    i = std::clamp(i, 0, m - 2);
    i0 = i;
    t = pos - i;
    return true;
}

}  // namespace

double sample(const Grid& g, const Layout& l, std::span<const double> v, const std::array<double, 3>& x) {
    std::array<int, 3> i0{};
    std::array<double, 3> t{};
    for (int a = 0; a < 3; ++a)
        if (!locate(g, l, a, x[a], i0[a], t[a])) return 0.0;
    double s = 0.0;
    for (int c = 0; c < 8; ++c) {
        const int di = c & 1, dj = (c >> 1) & 1, dk = (c >> 2) & 1;
        const double w = (di ? t[0] : 1.0 - t[0]) * (dj ? t[1] : 1.0 - t[1]) * (dk ? t[2] : 1.0 - t[2]);
        if (w == 0.0) continue;
        s += w * v[l.index(i0[0] + di, i0[1] + dj, i0[2] + dk)];
    }
    return s;
}

double sample(const ScalarField& f, const std::array<double, 3>& x) {
    return sample(f.grid, f.layout(), f.values, x);
}

double sample(const VectorField& f, int axis, const std::array<double, 3>& x) {
    return sample(f.grid, f.layout(axis), f.comp[axis], x);
}

ScalarField interpolate_to(const ScalarField& f, const Grid& target) {
    ScalarField out(target);
    const Layout l = out.layout();
    for (int k = 0; k < l.dims[2]; ++k)
        for (int j = 0; j < l.dims[1]; ++j)
            for (int i = 0; i < l.dims[0]; ++i)
                out.values[l.index(i, j, k)] = sample(f, node_position(target, l, i, j, k));
    return out;
}

VectorField interpolate_to(const VectorField& f, const Grid& target) {
    VectorField out(target);
    for (int a = 0; a < 3; ++a) {
        const Layout l = out.layout(a);
        for (int k = 0; k < l.dims[2]; ++k)
            for (int j = 0; j < l.dims[1]; ++j)
                for (int i = 0; i < l.dims[0]; ++i)
                    out.comp[a][l.index(i, j, k)] = sample(f, a, node_position(target, l, i, j, k));
    }
    return out;
}

namespace {

Grid sub_grid(const Grid& g, double r, int& offset) {
    const double cells = 2.0 * r / g.spacing;
    const int n = static_cast<int>(std::lround(cells));
    if (!(r > 0.0) || r > g.half_width * (1.0 + 1e-12) || std::abs(cells - n) > 1e-9 * cells)
        throw Error(ErrorCode::DomainMismatch,
                    "sub-domain half-width must be a multiple of the spacing inside the source domain");
    if ((g.cells - n) % 2 != 0 || n < 8)
        throw Error(ErrorCode::DomainMismatch, "sub-domain does not align with the source cells");
    offset = (g.cells - n) / 2;
    Grid s = make_grid(r, n);
    s.spacing = g.spacing;
    return s;
}

}  // namespace

ScalarField restrict_to(const ScalarField& f, double r) {
    int off = 0;
    ScalarField out(sub_grid(f.grid, r, off));
    const Layout src = f.layout(), dst = out.layout();
    for (int k = 0; k < dst.dims[2]; ++k)
        for (int j = 0; j < dst.dims[1]; ++j)
            for (int i = 0; i < dst.dims[0]; ++i)
                out.values[dst.index(i, j, k)] = f.values[src.index(i + off, j + off, k + off)];
    return out;
}

VectorField restrict_to(const VectorField& f, double r) {
    int off = 0;
    VectorField out(sub_grid(f.grid, r, off));
    for (int a = 0; a < 3; ++a) {
        const Layout src = f.layout(a), dst = out.layout(a);
        for (int k = 0; k < dst.dims[2]; ++k)
            for (int j = 0; j < dst.dims[1]; ++j)
                for (int i = 0; i < dst.dims[0]; ++i)
                    out.comp[a][dst.index(i, j, k)] = f.comp[a][src.index(i + off, j + off, k + off)];
    }
    return out;
}

}  // namespace obbq
