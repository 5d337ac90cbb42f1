#include "obbq/heat_profiles.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <numbers>

#include <Eigen/Dense>

#include "obbq/errors.hpp"
#include "obbq/field_io.hpp"
#include "obbq/operators.hpp"
#include "obbq/parallel.hpp"

namespace obbq {

namespace {

struct Nodes {
    std::vector<double> x, w;
};

// Gauss-Legendre nodes on [-1, 1] by Golub-Welsch.
Nodes gauss_legendre(int n) {
    Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n, n);
    for (int i = 1; i < n; ++i) {
        const double b = i / std::sqrt(4.0 * i * i - 1.0);
        j(i, i - 1) = j(i - 1, i) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(j);
    Nodes out;
    for (int i = 0; i < n; ++i) {
        out.x.push_back(es.eigenvalues()(i));
        const double v = es.eigenvectors()(0, i);
        out.w.push_back(2.0 * v * v);
    }
    return out;
}

class Quadrature {
public:
    explicit Quadrature(const QuadratureConfig& q)
        : cfg_(q), radial_(gauss_legendre(q.radial_nodes)), polar_(gauss_legendre(q.angular_nodes)) {
        for (int p = 0; p < q.angular_nodes; ++p) {
            const double phi = 2.0 * std::numbers::pi * p / q.angular_nodes;
            cos_.push_back(std::cos(phi));
            sin_.push_back(std::sin(phi));
        }
    }

    PointProfile evaluate(const HomogeneousData& d, const Vec3& x, bool gradients = true) const {
        const double T = cfg_.truncation_radius;
        const double rho = std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
        Vec3 ez = rho > 0.0 ? Vec3{x[0] / rho, x[1] / rho, x[2] / rho} : Vec3{0.0, 0.0, 1.0};
        // Any orthonormal pair perpendicular to ez.
        Vec3 t = std::abs(ez[0]) < 0.9 ? Vec3{1.0, 0.0, 0.0} : Vec3{0.0, 1.0, 0.0};
        const double dot = t[0] * ez[0] + t[1] * ez[1] + t[2] * ez[2];
        Vec3 ex{t[0] - dot * ez[0], t[1] - dot * ez[1], t[2] - dot * ez[2]};
        const double nx = std::sqrt(ex[0] * ex[0] + ex[1] * ex[1] + ex[2] * ex[2]);
        for (double& c : ex) c /= nx;
        const Vec3 ey{ez[1] * ex[2] - ez[2] * ex[1], ez[2] * ex[0] - ez[0] * ex[2], ez[0] * ex[1] - ez[1] * ex[0]};

        const double gmax = rho <= T ? std::numbers::pi : std::asin(T / rho);
        const int ng = cfg_.angular_nodes, nr = cfg_.radial_nodes, na = cfg_.angular_nodes;
        const double kernel = std::pow(2.0 * std::numbers::pi, -1.5);

        std::vector<double> m1(ng, 0.0), m2(ng, 0.0), gam(ng), wg(ng);
        double peak = 0.0;
        for (int g = 0; g < ng; ++g) {
            gam[g] = 0.5 * gmax * (polar_.x[g] + 1.0);
            wg[g] = 0.5 * gmax * polar_.w[g];
            const double cg = std::cos(gam[g]), sg = std::sin(gam[g]);
            const double s = rho * cg;
            const double d2 = T * T - rho * rho * sg * sg;
            if (d2 <= 0.0) continue;
            const double dd = std::sqrt(d2);
            const double lo = std::max(0.0, s - dd), hi = s + dd;
            if (hi <= lo) continue;
            const double half = 0.5 * (hi - lo);
            double a1 = 0.0, a2 = 0.0;
            for (int r = 0; r < nr; ++r) {
                const double rr = lo + half * (radial_.x[r] + 1.0);
                const double q = rho * rho + rr * rr - 2.0 * rho * rr * cg;
                const double wgt = half * radial_.w[r] * kernel * std::exp(-0.5 * q);
                a1 += wgt * rr;
                a2 += wgt * rr * rr;
            }
            m1[g] = a1 * wg[g] * sg * (2.0 * std::numbers::pi / na);
            m2[g] = a2 * wg[g] * sg * (2.0 * std::numbers::pi / na);
            peak = std::max({peak, std::abs(m1[g]), std::abs(m2[g])});
        }

        PointProfile out;
        std::array<Vec3, 3> mom{};  // mom[j][i] = int y_j G u_i
        Vec3 tmom{};
        for (int g = 0; g < ng; ++g) {
            if (std::abs(m1[g]) <= 1e-18 * peak && std::abs(m2[g]) <= 1e-18 * peak) continue;
            const double cg = std::cos(gam[g]), sg = std::sin(gam[g]);
            Vec3 su{};
            double st = 0.0;
            std::array<Vec3, 3> sju{};
            Vec3 sjt{};
            for (int p = 0; p < na; ++p) {
                const double a = sg * cos_[p], b = sg * sin_[p];
                const Vec3 w{cg * ez[0] + a * ex[0] + b * ey[0], cg * ez[1] + a * ex[1] + b * ey[1],
                             cg * ez[2] + a * ex[2] + b * ey[2]};
                const SphereValue v = d.on_sphere(w);
                for (int i = 0; i < 3; ++i) su[i] += v.velocity[i];
                st += v.temperature;
                if (!gradients) continue;
                for (int j = 0; j < 3; ++j) {
                    for (int i = 0; i < 3; ++i) sju[j][i] += w[j] * v.velocity[i];
                    sjt[j] += w[j] * v.temperature;
                }
            }
            for (int i = 0; i < 3; ++i) out.velocity[i] += m1[g] * su[i];
            out.temperature += m1[g] * st;
            for (int j = 0; j < 3; ++j) {
                for (int i = 0; i < 3; ++i) mom[j][i] += m2[g] * sju[j][i];
                tmom[j] += m2[g] * sjt[j];
            }
        }
        if (!gradients) return out;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) out.velocity_gradient[i][j] = mom[j][i] - x[j] * out.velocity[i];
        for (int j = 0; j < 3; ++j) out.temperature_gradient[j] = tmom[j] - x[j] * out.temperature;
        return out;
    }

private:
    QuadratureConfig cfg_;
    Nodes radial_, polar_;
    std::vector<double> cos_, sin_;
};

bool is_zero_data(const HomogeneousData& d) {
    return d.amplitude() == 0.0 || d.hash() == HomogeneousData().hash();
}

}  // namespace

void validate(const QuadratureConfig& q) {
    if (!(q.truncation_radius >= 6.0))
        throw Error(ErrorCode::QuadratureUnderflow,
                    "kernel truncation radius " + std::to_string(q.truncation_radius) + " is below 6 standard deviations");
    if (q.radial_nodes < 32 || q.angular_nodes < 64)
        throw Error(ErrorCode::InvalidArgument, "quadrature needs at least 32 radial and 64 angular nodes");
}

PointProfile evaluate_profile(const HomogeneousData& d, const Vec3& x, const QuadratureConfig& q) {
    validate(q);
    return Quadrature(q).evaluate(d, x);
}

HeatProfiles zero_profiles(const Grid& g) {
    HeatProfiles p;
    p.grid = g;
    p.velocity = VectorField(g);
    p.temperature = ScalarField(g);
    p.temperature_faces = VectorField(g);
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) p.velocity_gradient[i][j].assign(Layout::faces(g, i).size(), 0.0);
        p.temperature_gradient[i] = ScalarField(g);
    }
    p.data_hash = HomogeneousData().hash();
    return p;
}

HeatProfiles compute_profiles(const HomogeneousData& d, const Grid& g, const QuadratureConfig& q,
                              const ProfileParts& parts) {
    validate(q);
    HeatProfiles p = zero_profiles(g);
    p.quadrature = q;
    p.data_hash = d.hash();
    if (is_zero_data(d)) return p;
    const Quadrature quad(q);

    // Work list: every cell, then the faces normal to x, y, z.
    const Layout lc = Layout::cells(g);
    const std::array<Layout, 3> lf{Layout::faces(g, 0), Layout::faces(g, 1), Layout::faces(g, 2)};
    const std::size_t nc = lc.size();
    const std::array<std::size_t, 3> nf{lf[0].size(), lf[1].size(), lf[2].size()};
    const std::size_t total = nc + nf[0] + nf[1] + nf[2];
    const std::size_t first = parts.cells ? 0 : nc;

    auto locate = [&](std::size_t id, int& kind, std::size_t& local) {
        kind = -1;
        local = id;
        if (local < nc) return;
        local -= nc;
        for (int a = 0; a < 3; ++a) {
            kind = a;
            if (local < nf[a]) return;
            local -= nf[a];
        }
    };
    auto position = [&](const Layout& l, std::size_t local) {
        const int i = static_cast<int>(local % l.dims[0]);
        const int j = static_cast<int>((local / l.dims[0]) % l.dims[1]);
        const int k = static_cast<int>(local / (static_cast<std::size_t>(l.dims[0]) * l.dims[1]));
        return node_position(g, l, i, j, k);
    };

    parallel_for(total - first, [&](std::size_t begin, std::size_t end) {
        for (std::size_t id = first + begin; id < first + end; ++id) {
            int kind;
            std::size_t local;
            locate(id, kind, local);
            if (kind < 0) {
                const PointProfile v = quad.evaluate(d, position(lc, local), parts.gradients);
                p.temperature.values[local] = v.temperature;
                for (int j = 0; j < 3; ++j) p.temperature_gradient[j].values[local] = v.temperature_gradient[j];
            } else {
                const PointProfile v = quad.evaluate(d, position(lf[kind], local), parts.gradients);
                p.velocity.comp[kind][local] = v.velocity[kind];
                p.temperature_faces.comp[kind][local] = v.temperature;
                for (int j = 0; j < 3; ++j) p.velocity_gradient[kind][j][local] = v.velocity_gradient[kind][j];
            }
        }
    });
    return p;
}

namespace {

std::string cache_key(const HomogeneousData& d, const Grid& g, const QuadratureConfig& q) {
    std::uint64_t h = d.hash();
    auto mix = [&h](const void* p, std::size_t n) {
        const auto* b = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= b[i];
            h *= 1099511628211ull;
        }
    };
    mix(&g.half_width, sizeof g.half_width);
    mix(&g.cells, sizeof g.cells);
    mix(&q.radial_nodes, sizeof q.radial_nodes);
    mix(&q.angular_nodes, sizeof q.angular_nodes);
    mix(&q.truncation_radius, sizeof q.truncation_radius);
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

const char* kGradName[3] = {"velocity_gradient_x.obbq", "velocity_gradient_y.obbq", "velocity_gradient_z.obbq"};

}  // namespace

HeatProfiles cached_profiles(const HomogeneousData& d, const Grid& g, const QuadratureConfig& q,
                             const std::filesystem::path& cache_dir) {
    if (cache_dir.empty()) return compute_profiles(d, g, q);
    const auto dir = cache_dir / cache_key(d, g, q);
    if (std::filesystem::exists(dir / "complete")) {
        try {
            HeatProfiles p = zero_profiles(g);
            p.quadrature = q;
            p.data_hash = d.hash();
            p.velocity = read_vector(dir / "velocity.obbq");
            p.temperature = read_scalar(dir / "temperature.obbq");
            p.temperature_faces = read_vector(dir / "temperature_faces.obbq");
            FieldRecord tg = read_record(dir / "temperature_gradient.obbq");
            for (int j = 0; j < 3; ++j) p.temperature_gradient[j].values = std::move(tg.components.at(j));
            for (int i = 0; i < 3; ++i) {
                FieldRecord vg = read_record(dir / kGradName[i]);
                for (int j = 0; j < 3; ++j) p.velocity_gradient[i][j] = std::move(vg.components.at(j));
            }
            if (p.velocity.grid == g) return p;
        } catch (const Error&) {
            // Unreadable cache entries are recomputed below.
        }
    }
    HeatProfiles p = compute_profiles(d, g, q);
    std::filesystem::create_directories(dir);
    write_field(dir / "velocity.obbq", p.velocity);
    write_field(dir / "temperature.obbq", p.temperature);
    write_field(dir / "temperature_faces.obbq", p.temperature_faces);
    write_record(dir / "temperature_gradient.obbq",
                 {g, Staggering::Cells,
                  {p.temperature_gradient[0].values, p.temperature_gradient[1].values, p.temperature_gradient[2].values}});
    for (int i = 0; i < 3; ++i)
        write_record(dir / kGradName[i], {g, static_cast<Staggering>(2 + i),
                                          {p.velocity_gradient[i][0], p.velocity_gradient[i][1], p.velocity_gradient[i][2]}});
    write_text_atomic(dir / "complete", "");
    return p;
}

ScalarField self_similar_operator(const ScalarField& f) {
    ScalarField r = f;
    r += drift(f, Closure::Extrapolate);
    r += laplacian(f, Closure::Extrapolate);
    return r;
}

VectorField self_similar_operator(const VectorField& f) {
    VectorField r = f;
    r += drift(f, Closure::Extrapolate);
    r += laplacian(f, Closure::Extrapolate);
    return r;
}

ProfileResidual residual_profile_pde(const HeatProfiles& p) {
    return {interior_norm(self_similar_operator(p.velocity), 2), interior_norm(self_similar_operator(p.temperature), 2)};
}

namespace {

// Collocated |U0| and |grad U0| at cell centers from face data.
void cell_velocity(const HeatProfiles& p, int i, int j, int k, double& speed, double& grad) {
    const Grid& g = p.grid;
    double s2 = 0.0, g2 = 0.0;
    for (int a = 0; a < 3; ++a) {
        const Layout l = Layout::faces(g, a);
        std::array<int, 3> lo{i, j, k}, hi{i, j, k};
        hi[a] += 1;
        const std::size_t i0 = l.index(lo[0], lo[1], lo[2]), i1 = l.index(hi[0], hi[1], hi[2]);
        const double u = 0.5 * (p.velocity.comp[a][i0] + p.velocity.comp[a][i1]);
        s2 += u * u;
        for (int b = 0; b < 3; ++b) {
            const double d = 0.5 * (p.velocity_gradient[a][b][i0] + p.velocity_gradient[a][b][i1]);
            g2 += d * d;
        }
    }
    speed = std::sqrt(s2);
    grad = std::sqrt(g2);
}

}  // namespace

DecayConstants decay_constants(const HeatProfiles& p) {
    const Grid& g = p.grid;
    const Layout l = Layout::cells(g);
    DecayConstants c;
    for (int k = 0; k < g.cells; ++k)
        for (int j = 0; j < g.cells; ++j)
            for (int i = 0; i < g.cells; ++i) {
                const auto x = node_position(g, l, i, j, k);
                const double w = 1.0 + std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
                double speed, grad;
                cell_velocity(p, i, j, k, speed, grad);
                const std::size_t id = l.index(i, j, k);
                double tg = 0.0;
                for (int a = 0; a < 3; ++a) tg += p.temperature_gradient[a].values[id] * p.temperature_gradient[a].values[id];
                c.value = std::max(c.value, w * (speed + std::abs(p.temperature.values[id])));
                c.gradient = std::max(c.gradient, w * (grad + std::sqrt(tg)));
            }
    return c;
}

double velocity_divergence_max(const HeatProfiles& p) { return max_abs(divergence(p.velocity)); }

std::array<double, 2> gradient_l4_norms(const HeatProfiles& p) {
    const Grid& g = p.grid;
    const Layout l = Layout::cells(g);
    double su = 0.0, st = 0.0;
    for (int k = 0; k < g.cells; ++k)
        for (int j = 0; j < g.cells; ++j)
            for (int i = 0; i < g.cells; ++i) {
                double speed, grad;
                cell_velocity(p, i, j, k, speed, grad);
                const std::size_t id = l.index(i, j, k);
                double tg = 0.0;
                for (int a = 0; a < 3; ++a) tg += p.temperature_gradient[a].values[id] * p.temperature_gradient[a].values[id];
                su += grad * grad * grad * grad;
                st += tg * tg;
            }
    const double v = g.cell_volume();
    return {std::pow(su * v, 0.25), std::pow(st * v, 0.25)};
}

}  // namespace obbq
