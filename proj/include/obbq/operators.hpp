/// @file operators.hpp
/// @brief Staggered-grid difference operators, cutoff gravity and the discrete Leray projection.
///
/// Every operator works line by line along one axis. Cell-centred axes reach
/// past the outermost cell through a ghost value chosen by the Closure;
/// face-located axes store the wall faces themselves. Under
/// Closure::Dirichlet the wall faces are treated as fixed data: operators
/// return 0 there and never modify them.
///
/// The drift x.grad is discretised per axis in the skew form
///   (x_{i+1/2} f_{i+1} - x_{i-1/2} f_{i-1}) / 2h - f_i / 2,
/// which is exact on linear functions and satisfies
///   sum f (x.grad f) = -3/2 sum f^2 - wall terms
/// for Dirichlet fields, the wall terms being the reflection ghosts' share.
#pragma once

#include <Eigen/Dense>
#include <array>
#include <utility>

#include "obbq/grid.hpp"

namespace obbq {

enum class DriftScheme { Centered, Upwind };

/// Radial cutoff rho_k(x) = rho(k x): 0 for |x| <= 1/(2k), 1 for |x| >= 1/k,
/// cubic smoothstep 3t^2 - 2t^3 in between.
struct CutoffFamily {
    int index = 1;

    static double base(double r);
    double operator()(double r) const { return base(index * r); }
    double operator()(const std::array<double, 3>& x) const;
};

ScalarField laplacian(const ScalarField& f, Closure closure = Closure::Dirichlet);
VectorField laplacian(const VectorField& f, Closure closure = Closure::Dirichlet);

/// x.grad f with the skew-centred (or first-order upwind) stencil.
ScalarField drift(const ScalarField& f, Closure closure = Closure::Dirichlet,
                  DriftScheme scheme = DriftScheme::Centered);
VectorField drift(const VectorField& f, Closure closure = Closure::Dirichlet,
                  DriftScheme scheme = DriftScheme::Centered);

/// Cell-to-face difference on interior faces; wall faces are 0.
VectorField gradient(const ScalarField& s);
/// Face-to-cell difference using every face, wall faces included.
ScalarField divergence(const VectorField& v);

/// Scalar interpolated to faces: component a holds s on faces normal to a.
/// Wall faces take the closure's ghost average (0 under Dirichlet).
VectorField face_average(const ScalarField& s, Closure closure);

/// div(s w) in flux form. `s_faces` holds s on the faces (see face_average).
ScalarField div_product(const VectorField& s_faces, const VectorField& w);
ScalarField div_product(const ScalarField& s, const VectorField& w, Closure closure);

/// (w.grad) f in conservative-minus-divergence form on the dual control
/// volumes of the faces. Skew-symmetric for Dirichlet f when div w = 0 and w
/// has no normal component on the walls. Normal wall faces of the result are 0.
VectorField advect(const VectorField& w, const VectorField& f, Closure closure);
ScalarField advect(const VectorField& w, const ScalarField& f, Closure closure);

/// (s_faces) rho_k(x) grad(1/|x|) evaluated pointwise at every face.
VectorField gravity_force(const VectorField& s_faces, const CutoffFamily& cutoff);
VectorField gravity_force(const ScalarField& psi, const VectorField& theta0_faces,
                          const CutoffFamily& cutoff);

/// Orthogonal projection onto discretely divergence-free fields with the
/// wall faces held fixed. Returns (v - grad q, q) with mean(q) = 0. If the
/// net wall flux of v is not zero its uniform part cannot be removed.
/// Throws PoissonDivergence when the Poisson residual is not at round-off.
std::pair<VectorField, ScalarField> leray_project(const VectorField& v);

/// Moves the net flux through the walls to zero by a uniform correction of
/// the wall normal faces, so that leray_project can reach div = 0 exactly.
VectorField balance_wall_flux(const VectorField& v);

/// ||f/|x|||_2 / ||grad f||_2 for f vanishing outside the grid. The singular
/// weight |x|^-2 is integrated exactly over each cell. Throws ZeroGradient.
double hardy_ratio(const ScalarField& f);

/// Sum over wall cells of the reflection-ghost drift contribution,
/// (R / 2h) h^3 sum_{wall layers} f^2, per axis. Nonnegative.
double drift_wall_term(const ScalarField& f);
double drift_wall_term(const VectorField& f);

/// Dense matrix of  -d2 - lambda drift - shift  along one axis, restricted to
/// the unknowns of that axis under Dirichlet closure (n cells, or the n-1
/// interior faces). Built by probing the same line kernels the field
/// operators use.
Eigen::MatrixXd axis_matrix(const Grid& g, bool face_axis, double lambda, double shift,
                            DriftScheme scheme);

/// Applies  -laplacian - lambda drift - lambda  with Dirichlet closure.
ScalarField principal_operator(const ScalarField& f, double lambda, DriftScheme scheme);
VectorField principal_operator(const VectorField& f, double lambda, DriftScheme scheme);

}  // namespace obbq
