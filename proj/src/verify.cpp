#include "obbq/verify.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "obbq/errors.hpp"
#include "obbq/heat_profiles.hpp"
#include "obbq/operators.hpp"

namespace obbq {

namespace {

// s on faces times grad(1/|x|) = -x/|x|^3, without cutoff.
VectorField uncut_gravity(const VectorField& s_faces) {
    const Grid& g = s_faces.grid;
    VectorField out(g);
    for (int a = 0; a < 3; ++a) {
        const Layout l = out.layout(a);
        for (int k = 0; k < l.dims[2]; ++k)
            for (int j = 0; j < l.dims[1]; ++j)
                for (int i = 0; i < l.dims[0]; ++i) {
                    const auto x = node_position(g, l, i, j, k);
                    const double r = std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
                    const std::size_t id = l.index(i, j, k);
                    out.comp[a][id] = s_faces.comp[a][id] * (-x[a] / (r * r * r));
                }
    }
    return out;
}

}  // namespace

ProfileSystemResidual residual_bss(const VectorField& u, const ScalarField& theta, const ScalarField& p,
                                   const ProfileSystemOptions& opt) {
    require_same_grid(u.grid, theta.grid, "residual_bss");
    require_same_grid(u.grid, p.grid, "residual_bss");
    VectorField m = self_similar_operator(u);
    ScalarField t = self_similar_operator(theta);
    if (opt.nonlinear) {
        m -= advect(u, u, Closure::Extrapolate);
        t -= div_product(theta, u, Closure::Extrapolate);
    }
    if (opt.coupling) {
        m += uncut_gravity(face_average(theta, Closure::Extrapolate));
        m -= gradient(p);
    }
    ProfileSystemResidual r;
    r.momentum = interior_norm(m, opt.margin, opt.exclusion_radius);
    r.divergence = interior_norm(divergence(u), opt.margin, opt.exclusion_radius);
    r.temperature = interior_norm(t, opt.margin, opt.exclusion_radius);
    return r;
}

Reconstruction reconstruct(const VectorField& u, const ScalarField& theta, double t) {
    if (!(t > 0.0) || !std::isfinite(t))
        throw Error(ErrorCode::TimeNonpositive, "reconstruction time must be positive, got " + std::to_string(t));
    require_same_grid(u.grid, theta.grid, "reconstruct");
    const double s = std::sqrt(2.0 * t);
    Reconstruction r;
    if (t == 0.5) {
        r.velocity = u;
        r.temperature = theta;
        return r;
    }
    const Grid g = make_grid(u.grid.half_width * s, u.grid.cells);
    r.velocity = VectorField(g);
    r.temperature = ScalarField(g);
    for (int a = 0; a < 3; ++a)
        for (std::size_t i = 0; i < u.comp[a].size(); ++i) r.velocity.comp[a][i] = u.comp[a][i] / s;
    for (std::size_t i = 0; i < theta.values.size(); ++i) r.temperature.values[i] = theta.values[i] / s;
    return r;
}

double check_scaling(const VectorField& u, const ScalarField& theta, double lambda) {
    if (!(lambda >= 0.5 && lambda <= 2.0))
        throw Error(ErrorCode::InvalidArgument, "scaling check needs lambda in [1/2, 2]");
    if (lambda == 1.0) return 0.0;
    const Reconstruction a = reconstruct(u, theta, 1.0);
    const Reconstruction b = reconstruct(u, theta, lambda * lambda);
    const Grid& g = u.grid;
    // Observation points must sit two cells inside both reconstructed domains.
    const double ra = a.velocity.grid.half_width - 2.0 * a.velocity.grid.spacing;
    const double rb = (b.velocity.grid.half_width - 2.0 * b.velocity.grid.spacing) / lambda;
    const double lim = std::min(ra, rb);

    double diff = 0.0, scale = 0.0;
    auto visit = [&](const Layout& l, auto&& value) {
        for (int k = 0; k < l.dims[2]; ++k)
            for (int j = 0; j < l.dims[1]; ++j)
                for (int i = 0; i < l.dims[0]; ++i) {
                    const auto x = node_position(g, l, i, j, k);
                    if (std::abs(x[0]) > lim || std::abs(x[1]) > lim || std::abs(x[2]) > lim) continue;
                    const std::array<double, 3> y{lambda * x[0], lambda * x[1], lambda * x[2]};
                    const auto [ua, ub] = value(x, y);
                    diff = std::max(diff, std::abs(ua - lambda * ub));
                    scale = std::max(scale, std::abs(ua));
                }
    };
    for (int c = 0; c < 3; ++c)
        visit(u.layout(c), [&](const auto& x, const auto& y) {
            return std::pair{sample(a.velocity, c, x), sample(b.velocity, c, y)};
        });
    visit(theta.layout(), [&](const auto& x, const auto& y) {
        return std::pair{sample(a.temperature, x), sample(b.temperature, y)};
    });
    return scale > 0.0 ? diff / scale : diff;
}

TimeLaw time_law_constants(const VectorField& v, const ScalarField& psi, const std::vector<double>& times) {
    if (times.size() < 3) throw Error(ErrorCode::InvalidArgument, "time laws need at least three times");
    for (double t : times)
        if (!(t > 0.0)) throw Error(ErrorCode::TimeNonpositive, "times must be positive");
    TimeLaw law;
    law.times = times;
    std::vector<double> cv, cg;
    for (double t : times) {
        const Reconstruction r = reconstruct(v, psi, t);
        const double value = l2_norm(r.velocity) + l2_norm(r.temperature);
        const double grad = h1_seminorm(r.velocity, Closure::Dirichlet) + h1_seminorm(r.temperature, Closure::Dirichlet);
        law.value_norms.push_back(value);
        law.gradient_norms.push_back(grad);
        cv.push_back(value / std::pow(t, 0.25));
        cg.push_back(grad * std::pow(t, 0.25));
    }
    auto mean = [](const std::vector<double>& x) {
        double s = 0.0;
        for (double y : x) s += y;
        return s / static_cast<double>(x.size());
    };
    law.c = mean(cv);
    law.c_prime = mean(cg);
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (law.c > 0.0) law.dispersion = std::max(law.dispersion, std::abs(cv[i] - law.c) / law.c);
        if (law.c_prime > 0.0) law.dispersion = std::max(law.dispersion, std::abs(cg[i] - law.c_prime) / law.c_prime);
    }
    const std::size_t last = times.size() - 1;
    const double lt = std::log(times[last] / times[0]);
    if (law.value_norms[0] > 0.0 && lt != 0.0)
        law.value_exponent = std::log(law.value_norms[last] / law.value_norms[0]) / lt;
    if (law.gradient_norms[0] > 0.0 && lt != 0.0)
        law.gradient_exponent = std::log(law.gradient_norms[last] / law.gradient_norms[0]) / lt;
    return law;
}

double weak_l3_quasinorm(const VectorField& u) {
    const Grid& g = u.grid;
    const int n = g.cells;
    std::vector<double> mag;
    mag.reserve(g.cell_count());
    for (int k = 0; k < n; ++k)
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) {
                double s = 0.0;
                for (int a = 0; a < 3; ++a) {
                    std::array<int, 3> hi{i, j, k};
                    hi[a] += 1;
                    const double c = 0.5 * (u(a, i, j, k) + u(a, hi[0], hi[1], hi[2]));
                    s += c * c;
                }
                mag.push_back(std::sqrt(s));
            }
    std::sort(mag.begin(), mag.end(), std::greater<>());
    double best = 0.0;
    for (std::size_t m = 0; m < mag.size(); ++m)
        best = std::max(best, mag[m] * std::cbrt(static_cast<double>(m + 1) * g.cell_volume()));
    return best;
}

bool VerificationReport::passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return !c.gated || c.pass; });
}

void VerificationReport::add(const std::string& name, double value, double tolerance, bool gated) {
    checks.push_back({name, value, tolerance, std::isfinite(value) && value <= tolerance, gated});
}

nlohmann::json VerificationReport::to_json() const {
    nlohmann::json j;
    j["passed"] = passed();
    j["checks"] = nlohmann::json::array();
    for (const auto& c : checks)
        j["checks"].push_back(
            {{"name", c.name}, {"value", c.value}, {"tolerance", c.tolerance}, {"pass", c.pass}, {"gated", c.gated}});
    j["details"] = details;
    return j;
}

std::string VerificationReport::to_csv() const {
    std::ostringstream out;
    out.precision(17);
    out << "check,value,tolerance,pass\n";
    for (const auto& c : checks)
        out << c.name << ',' << c.value << ',' << c.tolerance << ',' << (c.gated ? (c.pass ? "true" : "false") : "info")
            << '\n';
    return out.str();
}

}  // namespace obbq
