#include "obbq/initial_data.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include "obbq/errors.hpp"

namespace obbq {

namespace {

double norm3(const Vec3& v) { return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]); }

Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

struct Table {
    std::vector<double> polar, azimuth;  // sorted node coordinates
    std::vector<std::array<double, 4>> values;  // polar-major

    const std::array<double, 4>& at(std::size_t p, std::size_t a) const { return values[p * azimuth.size() + a]; }
};

Table read_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open sphere table " + path);
    std::map<std::pair<double, double>, std::array<double, 4>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ss(line);
        double th, ph;
        std::array<double, 4> v{};
        if (!(ss >> th >> ph >> v[0] >> v[1] >> v[2] >> v[3])) {
            if (rows.empty()) continue;  // header
            throw Error(ErrorCode::FormatError, "malformed sphere table row: " + line);
        }
        rows[{th, ph}] = v;
    }
    Table t;
    for (const auto& [key, v] : rows) {
        t.polar.push_back(key.first);
        t.azimuth.push_back(key.second);
    }
    auto uniq = [](std::vector<double>& x) {
        std::sort(x.begin(), x.end());
        x.erase(std::unique(x.begin(), x.end()), x.end());
    };
    uniq(t.polar);
    uniq(t.azimuth);
    if (t.polar.size() < 2 || t.azimuth.size() < 1 || rows.size() != t.polar.size() * t.azimuth.size())
        throw Error(ErrorCode::FormatError, "sphere table " + path + " is not a complete lat-long grid");
    for (double p : t.polar) {
        for (double a : t.azimuth) {
            auto it = rows.find({p, a});
            if (it == rows.end()) throw Error(ErrorCode::FormatError, "sphere table " + path + " has a missing node");
            t.values.push_back(it->second);
        }
    }
    return t;
}

SphereValue table_lookup(const Table& t, const Vec3& d) {
    const double polar = std::acos(std::clamp(d[2], -1.0, 1.0));
    double az = std::atan2(d[1], d[0]);
    if (az < 0.0) az += 2.0 * std::numbers::pi;

    const auto& P = t.polar;
    std::size_t p0;
    double tp;
    if (polar <= P.front()) {
        p0 = 0;
        tp = 0.0;
    } else if (polar >= P.back()) {
        p0 = P.size() - 2;
        tp = 1.0;
    } else {
        p0 = static_cast<std::size_t>(std::upper_bound(P.begin(), P.end(), polar) - P.begin()) - 1;
        tp = (polar - P[p0]) / (P[p0 + 1] - P[p0]);
    }

    const auto& A = t.azimuth;
    const std::size_t na = A.size();
    std::size_t a0, a1;
    double ta;
    if (na == 1) {
        a0 = a1 = 0;
        ta = 0.0;
    } else {
        // Periodic in azimuth: the interval after the last node wraps to the first.
        auto it = std::upper_bound(A.begin(), A.end(), az);
        if (it == A.begin() || it == A.end()) {
            a0 = na - 1;
            a1 = 0;
            const double lo = A.back(), hi = A.front() + 2.0 * std::numbers::pi;
            const double x = az < A.front() ? az + 2.0 * std::numbers::pi : az;
            ta = (x - lo) / (hi - lo);
        } else {
            a1 = static_cast<std::size_t>(it - A.begin());
            a0 = a1 - 1;
            ta = (az - A[a0]) / (A[a1] - A[a0]);
        }
    }
    std::array<double, 4> v{};
    for (int c = 0; c < 4; ++c)
        v[c] = (1 - tp) * ((1 - ta) * t.at(p0, a0)[c] + ta * t.at(p0, a1)[c]) +
               tp * ((1 - ta) * t.at(p0 + 1, a0)[c] + ta * t.at(p0 + 1, a1)[c]);
    return {{v[0], v[1], v[2]}, v[3]};
}

double real_harmonic(int l, int m, const Vec3& d) {
    const double polar = std::acos(std::clamp(d[2], -1.0, 1.0));
    const double az = std::atan2(d[1], d[0]);
    const unsigned am = static_cast<unsigned>(std::abs(m));
    const double y = std::sph_legendre(static_cast<unsigned>(l), am, polar);
    if (m == 0) return y;
    return std::numbers::sqrt2 * y * (m > 0 ? std::cos(am * az) : std::sin(am * az));
}

// Fixed probe directions for fingerprints: Fibonacci sphere.
std::vector<Vec3> probe_directions() {
    std::vector<Vec3> out;
    const int count = 64;
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < count; ++i) {
        const double z = 1.0 - (2.0 * i + 1.0) / count;
        const double r = std::sqrt(1.0 - z * z);
        out.push_back({r * std::cos(golden * i), r * std::sin(golden * i), z});
    }
    return out;
}

}  // namespace

HomogeneousData::HomogeneousData()
    : family_("zero"), map_([](const Vec3&) { return SphereValue{}; }), amplitude_(1.0) {}

HomogeneousData::HomogeneousData(std::string family, SphereMap map, double amplitude)
    : family_(std::move(family)), map_(std::move(map)), amplitude_(amplitude) {
    if (!map_) throw Error(ErrorCode::InvalidArgument, "initial data needs a sphere map");
    if (!std::isfinite(amplitude_)) throw Error(ErrorCode::InvalidArgument, "amplitude must be finite");
}

HomogeneousData HomogeneousData::swirl(double a, Vec3 axis) {
    const double n = norm3(axis);
    if (!(n > 0.0)) throw Error(ErrorCode::InvalidArgument, "swirl axis must be nonzero");
    const Vec3 e{axis[0] / n, axis[1] / n, axis[2] / n};
    return {"swirl", [e](const Vec3& d) { return SphereValue{cross(e, d), 0.0}; }, a};
}

HomogeneousData HomogeneousData::radial_temperature(double b) {
    return {"radial", [](const Vec3&) { return SphereValue{{}, 1.0}; }, b};
}

HomogeneousData HomogeneousData::spherical_harmonic(int l, int m, double c) {
    if (l < 0 || std::abs(m) > l) throw Error(ErrorCode::InvalidArgument, "harmonic needs l >= |m|");
    return {"harmonic", [l, m](const Vec3& d) { return SphereValue{{}, real_harmonic(l, m, d)}; }, c};
}

HomogeneousData HomogeneousData::tabulated(const std::string& csv_path) {
    auto table = std::make_shared<const Table>(read_table(csv_path));
    return {"tabulated", [table](const Vec3& d) { return table_lookup(*table, d); }, 1.0};
}

SphereValue HomogeneousData::on_sphere(const Vec3& direction) const {
    SphereValue v = map_(direction);
    for (double& c : v.velocity) c *= amplitude_;
    v.temperature *= amplitude_;
    return v;
}

std::pair<Vec3, double> HomogeneousData::evaluate(const Vec3& x) const {
    const double r = norm3(x);
    if (r == 0.0) throw Error(ErrorCode::OriginEvaluation, "homogeneous data evaluated at the origin");
    const SphereValue v = on_sphere({x[0] / r, x[1] / r, x[2] / r});
    return {{v.velocity[0] / r, v.velocity[1] / r, v.velocity[2] / r}, v.temperature / r};
}

std::uint64_t HomogeneousData::hash() const {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](double x) {
        if (x == 0.0) x = 0.0;  // fold -0 into +0
        unsigned char bytes[sizeof(double)];
        std::memcpy(bytes, &x, sizeof x);
        for (unsigned char b : bytes) {
            h ^= b;
            h *= 1099511628211ull;
        }
    };
    for (const Vec3& d : probe_directions()) {
        const SphereValue v = on_sphere(d);
        for (double c : v.velocity) mix(c);
        mix(v.temperature);
    }
    return h;
}

HomogeneousData HomogeneousData::scaled(double factor) const {
    HomogeneousData out = *this;
    out.amplitude_ *= factor;
    return out;
}

HomogeneousData operator+(const HomogeneousData& a, const HomogeneousData& b) {
    return {a.family_ + "+" + b.family_,
            [a, b](const Vec3& d) {
                const SphereValue x = a.on_sphere(d), y = b.on_sphere(d);
                return SphereValue{{x.velocity[0] + y.velocity[0], x.velocity[1] + y.velocity[1],
                                    x.velocity[2] + y.velocity[2]},
                                   x.temperature + y.temperature};
            },
            1.0};
}

double check_homogeneity(const HomogeneousData& d, int sample_count) {
    if (sample_count < 1) throw Error(ErrorCode::InvalidArgument, "sample_count must be >= 1");
    std::mt19937_64 rng(20240601);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    double worst = 0.0;
    for (int s = 0; s < sample_count; ++s) {
        Vec3 x{u(rng), u(rng), u(rng)};
        if (norm3(x) < 1e-3) x[0] += 1.0;
        const auto [u0, t0] = d.evaluate(x);
        const double scale = std::max(norm3(u0) + std::abs(t0), 1e-300);
        for (double lam : {2.0, 0.5}) {
            const auto [u1, t1] = d.evaluate({lam * x[0], lam * x[1], lam * x[2]});
            const Vec3 diff{lam * u1[0] - u0[0], lam * u1[1] - u0[1], lam * u1[2] - u0[2]};
            const double defect = norm3(diff) + std::abs(lam * t1 - t0);
            if (defect > 0.0) worst = std::max(worst, defect / scale);
        }
    }
    return worst;
}

DivergenceReport divergence_residual(const HomogeneousData& d, const Grid& g) {
    const double h = g.spacing;
    const double width = std::min(1.5, 0.5 * g.half_width);
    const double step = 0.6 * width;
    DivergenceReport rep;
    rep.tolerance = 10.0 * h * h;

    const Layout l = Layout::cells(g);
    std::vector<Vec3> pts;
    std::vector<Vec3> vel;
    for (int k = 0; k < g.cells; ++k)
        for (int j = 0; j < g.cells; ++j)
            for (int i = 0; i < g.cells; ++i) {
                const Vec3 x = node_position(g, l, i, j, k);
                if (norm3(x) < h) continue;
                pts.push_back(x);
                vel.push_back(d.evaluate(x).first);
            }

    for (int cz = -1; cz <= 1; ++cz)
        for (int cy = -1; cy <= 1; ++cy)
            for (int cx = -1; cx <= 1; ++cx) {
                const Vec3 c{cx * step, cy * step, cz * step};
                double pairing = 0.0, h1 = 0.0;
                for (std::size_t p = 0; p < pts.size(); ++p) {
                    const Vec3 y{(pts[p][0] - c[0]) / width, (pts[p][1] - c[1]) / width, (pts[p][2] - c[2]) / width};
                    const double q = y[0] * y[0] + y[1] * y[1] + y[2] * y[2];
                    if (q >= 1.0) continue;
                    // phi = exp(-1/(1-q)); grad phi = phi * (-2 y / (1-q)^2) / width
                    const double phi = std::exp(-1.0 / (1.0 - q));
                    const double s = -2.0 * phi / ((1.0 - q) * (1.0 - q) * width);
                    const Vec3 gp{s * y[0], s * y[1], s * y[2]};
                    pairing += vel[p][0] * gp[0] + vel[p][1] * gp[1] + vel[p][2] * gp[2];
                    h1 += phi * phi + gp[0] * gp[0] + gp[1] * gp[1] + gp[2] * gp[2];
                }
                if (h1 == 0.0) continue;
                const double vol = g.cell_volume();
                rep.residual = std::max(rep.residual, std::abs(pairing * vol) / std::sqrt(h1 * vol));
            }
    rep.passed = rep.residual <= rep.tolerance;
    return rep;
}

double check_divergence(const HomogeneousData& d, const Grid& g) {
    const DivergenceReport rep = divergence_residual(d, g);
    if (!rep.passed)
        throw Error(ErrorCode::NotDivergenceFree, "weak divergence residual " + std::to_string(rep.residual) +
                                                      " exceeds tolerance " + std::to_string(rep.tolerance));
    return rep.residual;
}

}  // namespace obbq
