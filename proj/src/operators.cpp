#include "obbq/operators.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "obbq/errors.hpp"
#include "obbq/linalg.hpp"

namespace obbq {

double CutoffFamily::base(double r) {
    if (r <= 0.5) return 0.0;
    if (r >= 1.0) return 1.0;
    const double t = (r - 0.5) / 0.5;
    return t * t * (3.0 - 2.0 * t);
}

double CutoffFamily::operator()(const std::array<double, 3>& x) const {
    return (*this)(std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]));
}

namespace {

// Visits the first node of every line of `l` running along `axis`.
template <class Fn>
void for_each_line(const Layout& l, int axis, Fn&& fn) {
    const int b = (axis + 1) % 3, c = (axis + 2) % 3;
    std::array<int, 3> idx{};
    for (int ic = 0; ic < l.dims[c]; ++ic)
        for (int ib = 0; ib < l.dims[b]; ++ib) {
            idx[axis] = 0;
            idx[b] = ib;
            idx[c] = ic;
            fn(l.index(idx[0], idx[1], idx[2]));
        }
}

double ghost(double f0, double f1, Closure c) {
    switch (c) {
        case Closure::Dirichlet: return -f0;
        case Closure::Extrapolate: return 2.0 * f0 - f1;
        case Closure::Free: return f0;
    }
    return 0.0;
}

// Strided view of one line with closure-dependent values at -1 and m.
struct LineView {
    const double* f;
    std::size_t st;
    int m;
    Closure closure;

    double operator()(int i) const {
        if (i < 0) return ghost(f[0], m > 1 ? f[st] : f[0], closure);
        if (i >= m) return ghost(f[(m - 1) * st], m > 1 ? f[(m - 2) * st] : f[0], closure);
        return f[i * st];
    }
};

// Range of output nodes along a line. Dirichlet face lines keep the wall
// faces as data.
std::pair<int, int> active_range(int m, bool face, Closure c) {
    if (face && c == Closure::Dirichlet) return {1, m - 1};
    return {0, m};
}

// out += scale * second difference
void line_d2(const LineView& f, bool face, double h, double scale, double* out, std::size_t st) {
    const auto [lo, hi] = active_range(f.m, face, f.closure);
    const double s = scale / (h * h);
    for (int i = lo; i < hi; ++i) out[i * st] += s * (f(i + 1) - 2.0 * f(i) + f(i - 1));
}

// out += scale * x d/dx along the line
void line_drift(const LineView& f, bool face, const Grid& g, DriftScheme scheme, double scale,
                double* out, std::size_t st) {
    const auto [lo, hi] = active_range(f.m, face, f.closure);
    const double h = g.spacing;
    for (int i = lo; i < hi; ++i) {
        const double x = face ? g.face(i) : g.cell_center(i);
        double d;
        if (scheme == DriftScheme::Centered) {
            const double xp = x + 0.5 * h, xm = x - 0.5 * h;
            d = (xp * f(i + 1) - xm * f(i - 1)) / (2.0 * h) - 0.5 * f(i);
        } else if (x > 0.0) {
            d = x * (f(i + 1) - f(i)) / h;
        } else if (x < 0.0) {
            d = x * (f(i) - f(i - 1)) / h;
        } else {
            d = 0.0;
        }
        out[i * st] += scale * d;
    }
}

enum class Kind { SecondDifference, Drift };

void apply_axis(const Grid& g, const Layout& l, const std::vector<double>& in, std::vector<double>& out,
                int axis, Closure c, Kind kind, DriftScheme scheme, double scale) {
    const std::size_t st = l.stride(axis);
    const int m = l.dims[axis];
    const bool face = l.face[axis];
    for_each_line(l, axis, [&](std::size_t base) {
        const LineView v{in.data() + base, st, m, c};
        if (kind == Kind::SecondDifference)
            line_d2(v, face, g.spacing, scale, out.data() + base, st);
        else
            line_drift(v, face, g, scheme, scale, out.data() + base, st);
    });
}

void apply_all_axes(const Grid& g, const Layout& l, const std::vector<double>& in, std::vector<double>& out,
                    Closure c, Kind kind, DriftScheme scheme, double scale) {
    for (int axis = 0; axis < 3; ++axis) apply_axis(g, l, in, out, axis, c, kind, scheme, scale);
}

}  // namespace

ScalarField laplacian(const ScalarField& f, Closure closure) {
    ScalarField out(f.grid);
    apply_all_axes(f.grid, f.layout(), f.values, out.values, closure, Kind::SecondDifference,
                   DriftScheme::Centered, 1.0);
    return out;
}

VectorField laplacian(const VectorField& f, Closure closure) {
    VectorField out(f.grid);
    for (int a = 0; a < 3; ++a)
        apply_all_axes(f.grid, f.layout(a), f.comp[a], out.comp[a], closure, Kind::SecondDifference,
                       DriftScheme::Centered, 1.0);
    return out;
}

ScalarField drift(const ScalarField& f, Closure closure, DriftScheme scheme) {
    ScalarField out(f.grid);
    apply_all_axes(f.grid, f.layout(), f.values, out.values, closure, Kind::Drift, scheme, 1.0);
    return out;
}

VectorField drift(const VectorField& f, Closure closure, DriftScheme scheme) {
    VectorField out(f.grid);
    for (int a = 0; a < 3; ++a)
        apply_all_axes(f.grid, f.layout(a), f.comp[a], out.comp[a], closure, Kind::Drift, scheme, 1.0);
    return out;
}

ScalarField principal_operator(const ScalarField& f, double lambda, DriftScheme scheme) {
    ScalarField out(f.grid);
    const Layout l = f.layout();
    apply_all_axes(f.grid, l, f.values, out.values, Closure::Dirichlet, Kind::SecondDifference, scheme, -1.0);
    if (lambda != 0.0) {
        apply_all_axes(f.grid, l, f.values, out.values, Closure::Dirichlet, Kind::Drift, scheme, -lambda);
        for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] -= lambda * f.values[i];
    }
    return out;
}

VectorField principal_operator(const VectorField& f, double lambda, DriftScheme scheme) {
    VectorField out(f.grid);
    const int n = f.grid.cells;
    for (int a = 0; a < 3; ++a) {
        const Layout l = f.layout(a);
        apply_all_axes(f.grid, l, f.comp[a], out.comp[a], Closure::Dirichlet, Kind::SecondDifference, scheme,
                       -1.0);
        if (lambda != 0.0) {
            apply_all_axes(f.grid, l, f.comp[a], out.comp[a], Closure::Dirichlet, Kind::Drift, scheme, -lambda);
            for (std::size_t i = 0; i < out.comp[a].size(); ++i) out.comp[a][i] -= lambda * f.comp[a][i];
        }
        // Wall faces are data, not unknowns.
        for_each_line(l, a, [&](std::size_t base) {
            out.comp[a][base] = 0.0;
            out.comp[a][base + n * l.stride(a)] = 0.0;
        });
    }
    return out;
}

Eigen::MatrixXd axis_matrix(const Grid& g, bool face_axis, double lambda, double shift, DriftScheme scheme) {
    const int n = g.cells;
    const int len = face_axis ? n + 1 : n;
    const int first = face_axis ? 1 : 0;
    const int m = face_axis ? n - 1 : n;
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, m);
    std::vector<double> e(len), out(len);
    for (int j = 0; j < m; ++j) {
        std::fill(e.begin(), e.end(), 0.0);
        std::fill(out.begin(), out.end(), 0.0);
        e[first + j] = 1.0;
        const LineView v{e.data(), 1, len, Closure::Dirichlet};
        line_d2(v, face_axis, g.spacing, -1.0, out.data(), 1);
        if (lambda != 0.0) line_drift(v, face_axis, g, scheme, -lambda, out.data(), 1);
        for (int i = 0; i < m; ++i) a(i, j) = out[first + i];
        a(j, j) -= shift;
    }
    return a;
}

VectorField gradient(const ScalarField& s) {
    VectorField out(s.grid);
    const int n = s.grid.cells;
    const double inv_h = 1.0 / s.grid.spacing;
    const Layout c = s.layout();
    for (int a = 0; a < 3; ++a) {
        const Layout l = out.layout(a);
        const std::size_t st = c.stride(a);
        for (int k = 0; k < l.dims[2]; ++k)
            for (int j = 0; j < l.dims[1]; ++j)
                for (int i = 0; i < l.dims[0]; ++i) {
                    const int along = a == 0 ? i : a == 1 ? j : k;
                    if (along == 0 || along == n) continue;
                    // Cell on the high side of this face has the same (i,j,k).
                    const std::size_t hi = c.index(i, j, k);
                    out.comp[a][l.index(i, j, k)] = (s.values[hi] - s.values[hi - st]) * inv_h;
                }
    }
    return out;
}

ScalarField divergence(const VectorField& v) {
    ScalarField out(v.grid);
    const double inv_h = 1.0 / v.grid.spacing;
    const Layout c = out.layout();
    for (int a = 0; a < 3; ++a) {
        const Layout l = v.layout(a);
        const std::size_t st = l.stride(a);
        const auto& va = v.comp[a];
        for (int k = 0; k < c.dims[2]; ++k)
            for (int j = 0; j < c.dims[1]; ++j)
                for (int i = 0; i < c.dims[0]; ++i) {
                    const std::size_t lo = l.index(i, j, k);
                    out.values[c.index(i, j, k)] += (va[lo + st] - va[lo]) * inv_h;
                }
    }
    return out;
}

VectorField face_average(const ScalarField& s, Closure closure) {
    VectorField out(s.grid);
    const int n = s.grid.cells;
    const Layout c = s.layout();
    for (int a = 0; a < 3; ++a) {
        const Layout l = out.layout(a);
        const std::size_t st = c.stride(a);
        for (int k = 0; k < l.dims[2]; ++k)
            for (int j = 0; j < l.dims[1]; ++j)
                for (int i = 0; i < l.dims[0]; ++i) {
                    const int along = a == 0 ? i : a == 1 ? j : k;
                    double value;
                    if (along == 0) {
                        const std::size_t c0 = c.index(i, j, k);
                        value = 0.5 * (s.values[c0] + ghost(s.values[c0], s.values[c0 + st], closure));
                    } else if (along == n) {
                        const std::size_t c0 = c.index(i, j, k) - st;
                        value = 0.5 * (s.values[c0] + ghost(s.values[c0], s.values[c0 - st], closure));
                    } else {
                        const std::size_t hi = c.index(i, j, k);
                        value = 0.5 * (s.values[hi] + s.values[hi - st]);
                    }
                    out.comp[a][l.index(i, j, k)] = value;
                }
    }
    return out;
}

ScalarField div_product(const VectorField& s_faces, const VectorField& w) {
    require_same_grid(s_faces.grid, w.grid, "div_product");
    VectorField flux(w.grid);
    for (int a = 0; a < 3; ++a)
        for (std::size_t i = 0; i < flux.comp[a].size(); ++i) flux.comp[a][i] = s_faces.comp[a][i] * w.comp[a][i];
    return divergence(flux);
}

ScalarField div_product(const ScalarField& s, const VectorField& w, Closure closure) {
    require_same_grid(s.grid, w.grid, "div_product");
    return div_product(face_average(s, closure), w);
}

ScalarField advect(const VectorField& w, const ScalarField& f, Closure closure) {
    require_same_grid(w.grid, f.grid, "advect");
    ScalarField out = div_product(f, w, closure);
    const ScalarField dw = divergence(w);
    for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] -= f.values[i] * dw.values[i];
    return out;
}

VectorField advect(const VectorField& w, const VectorField& f, Closure closure) {
    require_same_grid(w.grid, f.grid, "advect");
    const Grid& g = f.grid;
    const int n = g.cells;
    const double inv_h = 1.0 / g.spacing;
    VectorField out(g);
    for (int a = 0; a < 3; ++a) {
        const Layout la = f.layout(a);
        const auto& fa = f.comp[a];
        const auto& wa = w.comp[a];
        const std::size_t sa = la.stride(a);
        std::array<int, 3> p{};
        for (p[2] = 0; p[2] < la.dims[2]; ++p[2])
            for (p[1] = 0; p[1] < la.dims[1]; ++p[1])
                for (p[0] = 0; p[0] < la.dims[0]; ++p[0]) {
                    const int i = p[a];
                    if (i == 0 || i == n) continue;
                    const std::size_t id = la.index(p[0], p[1], p[2]);
                    // Along a: dual faces at the cell centres i-1 and i.
                    const double w_hi = 0.5 * (wa[id] + wa[id + sa]);
                    const double w_lo = 0.5 * (wa[id - sa] + wa[id]);
                    const double f_hi = 0.5 * (fa[id] + fa[id + sa]);
                    const double f_lo = 0.5 * (fa[id - sa] + fa[id]);
                    double flux = w_hi * f_hi - w_lo * f_lo;
                    double div = w_hi - w_lo;
                    for (int b = 0; b < 3; ++b) {
                        if (b == a) continue;
                        const Layout lb = w.layout(b);
                        const std::size_t sb_f = la.stride(b);
                        const int j = p[b];
                        // w_b on the b-faces j and j+1 of the cells i-1 and i along a.
                        std::array<int, 3> q = p;
                        auto wb_edge = [&](int face) {
                            q[b] = face;
                            q[a] = i - 1;
                            const double w0 = w.comp[b][lb.index(q[0], q[1], q[2])];
                            q[a] = i;
                            const double w1 = w.comp[b][lb.index(q[0], q[1], q[2])];
                            return 0.5 * (w0 + w1);
                        };
                        const LineView line{fa.data() + id - j * sb_f, sb_f, n, closure};
                        const double e_lo = wb_edge(j), e_hi = wb_edge(j + 1);
                        flux += e_hi * 0.5 * (line(j) + line(j + 1)) - e_lo * 0.5 * (line(j - 1) + line(j));
                        div += e_hi - e_lo;
                    }
                    out.comp[a][id] = (flux - fa[id] * div) * inv_h;
                }
    }
    return out;
}

VectorField gravity_force(const VectorField& s_faces, const CutoffFamily& cutoff) {
    const Grid& g = s_faces.grid;
    VectorField out(g);
    for (int a = 0; a < 3; ++a) {
        const Layout l = out.layout(a);
        for (int k = 0; k < l.dims[2]; ++k)
            for (int j = 0; j < l.dims[1]; ++j)
                for (int i = 0; i < l.dims[0]; ++i) {
                    const auto x = node_position(g, l, i, j, k);
                    const double r = std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
                    const double rho = cutoff(r);
                    if (rho == 0.0) continue;
                    const std::size_t id = l.index(i, j, k);
                    out.comp[a][id] = s_faces.comp[a][id] * rho * (-x[a] / (r * r * r));
                }
    }
    return out;
}

VectorField gravity_force(const ScalarField& psi, const VectorField& theta0_faces, const CutoffFamily& cutoff) {
    VectorField s = face_average(psi, Closure::Dirichlet);
    s += theta0_faces;
    return gravity_force(s, cutoff);
}

std::pair<VectorField, ScalarField> leray_project(const VectorField& v) {
    const Grid& g = v.grid;
    const ScalarField r = divergence(v);
    ScalarField q(g);
    poisson_for(g)->solve(r.values, q.values);

    double mean = 0.0;
    for (double x : r.values) mean += x;
    mean /= static_cast<double>(r.values.size());
    const VectorField gq = gradient(q);
    const ScalarField check = divergence(gq);
    double err = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < r.values.size(); ++i) {
        err = std::max(err, std::abs(check.values[i] - (r.values[i] - mean)));
        scale = std::max(scale, std::abs(r.values[i]));
    }
    if (!(err <= 1e-9 * scale + 1e-300) && scale > 0.0)
        throw Error(ErrorCode::PoissonDivergence,
                    "pressure Poisson residual " + std::to_string(err / scale) + " exceeds tolerance");
    return {v - gq, std::move(q)};
}

VectorField balance_wall_flux(const VectorField& v) {
    VectorField out = v;
    const int n = v.grid.cells;
    double net = 0.0;
    for (int a = 0; a < 3; ++a) {
        const Layout l = v.layout(a);
        const std::size_t top = static_cast<std::size_t>(n) * l.stride(a);
        for_each_line(l, a, [&](std::size_t base) { net += v.comp[a][base + top] - v.comp[a][base]; });
    }
    const double c = net / (6.0 * n * n);
    for (int a = 0; a < 3; ++a) {
        const Layout l = v.layout(a);
        const std::size_t top = static_cast<std::size_t>(n) * l.stride(a);
        for_each_line(l, a, [&](std::size_t base) {
            out.comp[a][base + top] -= c;
            out.comp[a][base] += c;
        });
    }
    return out;
}

namespace {

// Integral of |x|^-2 over the unit cube [0,1]^3 (one corner at the singularity).
constexpr double kCornerCubeIntegral = 1.9185310556109327;

// Integral of |x|^-2 over the cell with integer offset (a,b,c) >= 0 from the
// origin, in units of h.
double cell_singular_weight(int a, int b, int c) {
    if (a == 0 && b == 0 && c == 0) return kCornerCubeIntegral;
    static const double x6[] = {-0.9324695142031521, -0.6612093864662645, -0.2386191860831969,
                                0.2386191860831969,  0.6612093864662645,  0.9324695142031521};
    static const double w6[] = {0.1713244923791704, 0.3607615730481386, 0.4679139345726910,
                                0.4679139345726910, 0.3607615730481386, 0.1713244923791704};
    static const double x3[] = {-0.7745966692414834, 0.0, 0.7745966692414834};
    static const double w3[] = {0.5555555555555556, 0.8888888888888888, 0.5555555555555556};
    const bool near = std::max({a, b, c}) < 4;
    const double* xs = near ? x6 : x3;
    const double* ws = near ? w6 : w3;
    const int m = near ? 6 : 3;
    double s = 0.0;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            for (int k = 0; k < m; ++k) {
                const double x = a + 0.5 + 0.5 * xs[i], y = b + 0.5 + 0.5 * xs[j], z = c + 0.5 + 0.5 * xs[k];
                s += ws[i] * ws[j] * ws[k] / (x * x + y * y + z * z);
            }
    return s / 8.0;
}

}  // namespace

double hardy_ratio(const ScalarField& f) {
    const Grid& g = f.grid;
    const int n = g.cells, half = n / 2;
    const double grad = h1_seminorm(f, Closure::Dirichlet);
    if (!(grad > 0.0)) throw Error(ErrorCode::ZeroGradient, "hardy_ratio: field has zero gradient");
    std::vector<double> w(static_cast<std::size_t>(half) * half * half);
    for (int c = 0; c < half; ++c)
        for (int b = 0; b < half; ++b)
            for (int a = 0; a < half; ++a)
                w[a + half * (b + static_cast<std::size_t>(half) * c)] = cell_singular_weight(a, b, c);
    auto octant = [half](int i) { return i >= half ? i - half : half - 1 - i; };
    double num = 0.0;
    for (int k = 0; k < n; ++k)
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) {
                const double v = f(i, j, k);
                num += v * v * w[octant(i) + half * (octant(j) + static_cast<std::size_t>(half) * octant(k))];
            }
    num *= g.spacing;
    return std::sqrt(num) / grad;
}

namespace {

double wall_sum(const Grid& g, const Layout& l, const std::vector<double>& v) {
    double s = 0.0;
    for (int axis = 0; axis < 3; ++axis) {
        if (l.face[axis]) continue;
        const std::size_t top = static_cast<std::size_t>(l.dims[axis] - 1) * l.stride(axis);
        for_each_line(l, axis, [&](std::size_t base) { s += v[base] * v[base] + v[base + top] * v[base + top]; });
    }
    return s * g.half_width / (2.0 * g.spacing) * g.cell_volume();
}

}  // namespace

double drift_wall_term(const ScalarField& f) { return wall_sum(f.grid, f.layout(), f.values); }

double drift_wall_term(const VectorField& f) {
    double s = 0.0;
    for (int a = 0; a < 3; ++a) s += wall_sum(f.grid, f.layout(a), f.comp[a]);
    return s;
}

}  // namespace obbq
