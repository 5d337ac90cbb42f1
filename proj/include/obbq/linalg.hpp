/// @file linalg.hpp
/// @brief Direct and Krylov solvers used by the projection and the Picard sweeps.
#pragma once

#include <Eigen/Dense>
#include <array>
#include <complex>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "obbq/grid.hpp"

namespace obbq {

/// Direct solver for a Kronecker sum  A = A_x (+) A_y (+) A_z  acting on an
/// x-fastest array of shape m_x * m_y * m_z.
///
/// Each 1-D factor is reduced to complex Schur form A_a = Q_a T_a Q_a^H; the
/// transformed system is upper triangular in every direction and is solved by
/// nested back substitution. Unlike diagonalisation this stays backward
/// stable for the strongly non-normal drift matrices on large domains.
class KroneckerSolver {
public:
    KroneckerSolver() = default;
    explicit KroneckerSolver(const std::array<Eigen::MatrixXd, 3>& factors);

    std::array<int, 3> shape() const { return dims_; }
    std::size_t size() const {
        return static_cast<std::size_t>(dims_[0]) * dims_[1] * dims_[2];
    }

    /// Solves A u = b. `b` and `u` may alias.
    void solve(std::span<const double> b, std::span<double> u) const;

private:
    struct Factor {
        Eigen::MatrixXcd q, t;
    };
    std::array<std::shared_ptr<const Factor>, 3> factors_;
    std::array<int, 3> dims_{};
};

/// Cell-centred Poisson solver with homogeneous Neumann walls:
/// div(grad q) = r, where grad lives on interior faces only. The compatible
/// (mean-free) part of r is solved; the returned q has zero mean.
class NeumannPoisson {
public:
    explicit NeumannPoisson(const Grid& g);
    ~NeumannPoisson();
    NeumannPoisson(const NeumannPoisson&) = delete;
    NeumannPoisson& operator=(const NeumannPoisson&) = delete;

    const Grid& grid() const { return grid_; }
    void solve(std::span<const double> rhs, std::span<double> q) const;

private:
    Grid grid_;
    std::vector<double> eig_;
    void* forward_ = nullptr;
    void* backward_ = nullptr;
};

/// Shared solver for one grid; created once and reused (thread safe).
std::shared_ptr<const NeumannPoisson> poisson_for(const Grid& g);

struct GmresResult {
    int iterations = 0;
    double relative_residual = 0.0;
    bool converged = false;
};

/// Right-preconditioned restarted GMRES for A x = b. On entry `x` holds the
/// initial guess. The tolerance is relative to ||b||.
using LinearMap = std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&)>;
GmresResult gmres(const LinearMap& a, const LinearMap& precond, const Eigen::VectorXd& b,
                  Eigen::VectorXd& x, double tol, int restart = 40, int max_iterations = 400);

}  // namespace obbq
