#include "obbq/linalg.hpp"

#include <fftw3.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include "obbq/errors.hpp"

namespace obbq {

using cd = std::complex<double>;

KroneckerSolver::KroneckerSolver(const std::array<Eigen::MatrixXd, 3>& factors) {
    for (int a = 0; a < 3; ++a) {
        dims_[a] = static_cast<int>(factors[a].rows());
        if (factors[a].rows() != factors[a].cols() || factors[a].rows() == 0)
            throw Error(ErrorCode::InvalidArgument, "Kronecker factor must be square and non-empty");
        // Identical factors (the common case) share one decomposition.
        for (int b = 0; b < a; ++b)
            if (factors[b].rows() == factors[a].rows() && factors[b] == factors[a]) factors_[a] = factors_[b];
        if (factors_[a]) continue;
        Eigen::ComplexSchur<Eigen::MatrixXcd> schur(factors[a].cast<cd>());
        if (schur.info() != Eigen::Success)
            throw Error(ErrorCode::InnerSolveFailure, "Schur decomposition did not converge");
        auto f = std::make_shared<Factor>();
        f->q = schur.matrixU();
        f->t = schur.matrixT();
        factors_[a] = std::move(f);
    }
}

namespace {

// Solves (T + shift I) x = r in place for upper-triangular T, column oriented.
void upper_solve(const Eigen::MatrixXcd& t, cd shift, cd* x) {
    const int m = static_cast<int>(t.rows());
    for (int i = m - 1; i >= 0; --i) {
        x[i] /= t(i, i) + shift;
        const cd xi = x[i];
        const cd* col = t.data() + static_cast<std::size_t>(i) * m;
        for (int r = 0; r < i; ++r) x[r] -= col[r] * xi;
    }
}

}  // namespace

void KroneckerSolver::solve(std::span<const double> b, std::span<double> u) const {
    const int m0 = dims_[0], m1 = dims_[1], m2 = dims_[2];
    const std::size_t n = size();
    if (b.size() != n || u.size() != n)
        throw Error(ErrorCode::InvalidArgument, "Kronecker solve: array size does not match factors");
    const auto& q0 = factors_[0]->q;
    const auto& q1 = factors_[1]->q;
    const auto& q2 = factors_[2]->q;
    const auto& t0 = factors_[0]->t;
    const auto& t1 = factors_[1]->t;
    const auto& t2 = factors_[2]->t;

    std::vector<cd> work(n);
    for (std::size_t i = 0; i < n; ++i) work[i] = b[i];
    const std::size_t slab = static_cast<std::size_t>(m0) * m1;

    {
        Eigen::Map<Eigen::MatrixXcd> x(work.data(), m0, static_cast<Eigen::Index>(m1) * m2);
        x = (q0.adjoint() * x).eval();
    }
    const Eigen::MatrixXcd q1c = q1.conjugate();
    for (int k = 0; k < m2; ++k) {
        Eigen::Map<Eigen::MatrixXcd> s(work.data() + k * slab, m0, m1);
        s = (s * q1c).eval();
    }
    Eigen::Map<Eigen::MatrixXcd> x(work.data(), static_cast<Eigen::Index>(slab), m2);
    x = (x * q2.conjugate()).eval();

    for (int k = m2 - 1; k >= 0; --k) {
        const int tail2 = m2 - 1 - k;
        if (tail2 > 0) x.col(k).noalias() -= x.rightCols(tail2) * t2.row(k).tail(tail2).transpose();
        Eigen::Map<Eigen::MatrixXcd> s(work.data() + k * slab, m0, m1);
        const cd s2 = t2(k, k);
        for (int j = m1 - 1; j >= 0; --j) {
            const int tail1 = m1 - 1 - j;
            if (tail1 > 0) s.col(j).noalias() -= s.rightCols(tail1) * t1.row(j).tail(tail1).transpose();
            upper_solve(t0, t1(j, j) + s2, s.col(j).data());
        }
    }

    x = (x * q2.transpose()).eval();
    const Eigen::MatrixXcd q1t = q1.transpose();
    for (int k = 0; k < m2; ++k) {
        Eigen::Map<Eigen::MatrixXcd> s(work.data() + k * slab, m0, m1);
        s = (s * q1t).eval();
    }
    {
        Eigen::Map<Eigen::MatrixXcd> y(work.data(), m0, static_cast<Eigen::Index>(m1) * m2);
        y = (q0 * y).eval();
    }
    for (std::size_t i = 0; i < n; ++i) u[i] = work[i].real();
}

namespace {
std::mutex& fftw_mutex() {
    static std::mutex m;
    return m;
}
}  // namespace

NeumannPoisson::NeumannPoisson(const Grid& g) : grid_(g) {
    const int n = g.cells;
    const double h = g.spacing;
    std::vector<double> ev(n);
    for (int i = 0; i < n; ++i) {
        const double s = std::sin(std::numbers::pi * i / (2.0 * n));
        ev[i] = -4.0 / (h * h) * s * s;
    }
    eig_.resize(g.cell_count());
    const Layout l = Layout::cells(g);
    for (int k = 0; k < n; ++k)
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) eig_[l.index(i, j, k)] = ev[i] + ev[j] + ev[k];

    std::lock_guard lock(fftw_mutex());
    double* buf = fftw_alloc_real(g.cell_count());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    forward_ = fftw_plan_r2r_3d(n, n, n, buf, buf, FFTW_REDFT10, FFTW_REDFT10, FFTW_REDFT10, flags);
    backward_ = fftw_plan_r2r_3d(n, n, n, buf, buf, FFTW_REDFT01, FFTW_REDFT01, FFTW_REDFT01, flags);
    fftw_free(buf);
    if (!forward_ || !backward_) throw Error(ErrorCode::PoissonDivergence, "FFTW plan creation failed");
}

NeumannPoisson::~NeumannPoisson() {
    std::lock_guard lock(fftw_mutex());
    if (forward_) fftw_destroy_plan(static_cast<fftw_plan>(forward_));
    if (backward_) fftw_destroy_plan(static_cast<fftw_plan>(backward_));
}

void NeumannPoisson::solve(std::span<const double> rhs, std::span<double> q) const {
    const std::size_t m = grid_.cell_count();
    if (rhs.size() != m || q.size() != m)
        throw Error(ErrorCode::InvalidArgument, "Poisson solve: array size mismatch");
    std::vector<double> w(rhs.begin(), rhs.end());
    fftw_execute_r2r(static_cast<fftw_plan>(forward_), w.data(), w.data());
    const double n = grid_.cells;
    const double norm = 1.0 / (8.0 * n * n * n);
    w[0] = 0.0;
    for (std::size_t i = 1; i < m; ++i) w[i] *= norm / eig_[i];
    fftw_execute_r2r(static_cast<fftw_plan>(backward_), w.data(), w.data());
    std::copy(w.begin(), w.end(), q.begin());
}

std::shared_ptr<const NeumannPoisson> poisson_for(const Grid& g) {
    static std::mutex m;
    static std::map<std::pair<double, int>, std::shared_ptr<const NeumannPoisson>> cache;
    std::lock_guard lock(m);
    auto& slot = cache[{g.half_width, g.cells}];
    if (!slot) slot = std::make_shared<NeumannPoisson>(g);
    return slot;
}

GmresResult gmres(const LinearMap& a, const LinearMap& precond, const Eigen::VectorXd& b,
                  Eigen::VectorXd& x, double tol, int restart, int max_iterations) {
    GmresResult res;
    const Eigen::Index n = b.size();
    if (x.size() != n) x = Eigen::VectorXd::Zero(n);
    const double bnorm = b.norm();
    if (bnorm == 0.0) {
        x.setZero();
        res.converged = true;
        return res;
    }
    Eigen::VectorXd r(n), w(n), z(n);
    a(x, w);
    r = b - w;
    double beta = r.norm();
    res.relative_residual = beta / bnorm;
    if (res.relative_residual <= tol) {
        res.converged = true;
        return res;
    }
    const int m = restart;
    Eigen::MatrixXd basis(n, m + 1);
    Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(m + 1, m);
    Eigen::VectorXd cs(m), sn(m), g(m + 1);

    while (res.iterations < max_iterations) {
        basis.col(0) = r / beta;
        g.setZero();
        g(0) = beta;
        hess.setZero();
        int j = 0;
        for (; j < m && res.iterations < max_iterations; ++j) {
            ++res.iterations;
            precond(basis.col(j), z);
            a(z, w);
            for (int i = 0; i <= j; ++i) {
                hess(i, j) = basis.col(i).dot(w);
                w -= hess(i, j) * basis.col(i);
            }
            hess(j + 1, j) = w.norm();
            if (hess(j + 1, j) > 0.0) basis.col(j + 1) = w / hess(j + 1, j);
            for (int i = 0; i < j; ++i) {
                const double t = cs(i) * hess(i, j) + sn(i) * hess(i + 1, j);
                hess(i + 1, j) = -sn(i) * hess(i, j) + cs(i) * hess(i + 1, j);
                hess(i, j) = t;
            }
            const double rr = std::hypot(hess(j, j), hess(j + 1, j));
            cs(j) = rr == 0.0 ? 1.0 : hess(j, j) / rr;
            sn(j) = rr == 0.0 ? 0.0 : hess(j + 1, j) / rr;
            hess(j, j) = rr;
            hess(j + 1, j) = 0.0;
            g(j + 1) = -sn(j) * g(j);
            g(j) = cs(j) * g(j);
            res.relative_residual = std::abs(g(j + 1)) / bnorm;
            if (res.relative_residual <= tol || hess(j, j) == 0.0) {
                ++j;
                break;
            }
        }
        Eigen::VectorXd y = hess.topLeftCorner(j, j).triangularView<Eigen::Upper>().solve(g.head(j));
        Eigen::VectorXd update = basis.leftCols(j) * y;
        precond(update, z);
        x += z;
        a(x, w);
        r = b - w;
        beta = r.norm();
        res.relative_residual = beta / bnorm;
        if (res.relative_residual <= tol) {
            res.converged = true;
            return res;
        }
    }
    return res;
}

}  // namespace obbq
