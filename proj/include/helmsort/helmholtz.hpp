#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <optional>

#include "helmsort/grid.hpp"

namespace helmsort {

enum class SolverKind { Penalized, Direct };

// Input bundle for a decomposition on a 2-D grid.
struct DecompositionInput {
  ScalarField f;                      // worker density, nonnegative, positive mass
  MatrixField C;                      // SPD complementarity per node
  VectorField A;                      // technological change field
  std::optional<ScalarField> fdot;    // distribution change (direct solver only)
  double psi = 0.0;                   // curl-penalty weight; <= 0 selects the default
  SolverKind solver = SolverKind::Penalized;
  double tol = 1e-10;                 // linear-solver relative residual
  int max_iterations = 0;             // <= 0 selects 10 * system dimension
  bool use_squared_weight = false;    // penalized variant with B^2 in place of B
  bool force_iterative = false;       // direct solver only: CG even on small grids
  std::optional<double> iterative_init;  // constant initial guess for CG runs
};

struct Diagnostics {
  double orthogonality = 0.0;       // <v, r>_f
  double divergence_residual = 0.0; // ||div(r f)||_L2 over interior nodes
  double max_boundary_flux = 0.0;   // max |r f . n| over boundary nodes
  double curl_residual = 0.0;       // ||curl v||_L2
  double output_gain = 0.0;         // 1/2 int r' C r f
};

struct DecompositionResult {
  VectorField v;      // gradient part
  ScalarField wdot;   // potential, mean zero across nodes
  VectorField r;      // reallocation; net displacement when fdot was present
  bool net_displacement = false;
  Diagnostics diagnostics;
};

struct FeasibilityReport {
  double divergence_residual = 0.0;  // ||div(r f)||_L2 over interior nodes
  double max_boundary_flux = 0.0;    // max |r f . n|
  double boundary_flux_l2 = 0.0;     // sqrt(sum flux^2 * ds), ds = (d1+d2)/2
};

struct PotentialRecovery {
  ScalarField wdot;      // mean-zero potential
  double residual = 0.0; // ||gradient(wdot) - v||_L2
};

// Curl-penalty operator on flattened vector fields (2N columns). Row u < N is
// nonzero only when the forward cell {u, u+e1, u+e2, u+e1+e2} lies in the
// domain and then holds exactly four entries: -1 on v1(u), +1 on v2(u), +1 on
// v1 at (i,j+1), -1 on v2 at (i+1,j). Rows >= N are two-entry compatibility
// rows equating each backward (no-forward-neighbor) sample with its
// neighbor's forward sample of the same edge. Applied to the flattening of a
// gradient field the whole operator returns exactly zero on square-spaced
// grids, and its kernel is exactly the discrete gradient fields plus any
// stencil-less components.
Eigen::SparseMatrix<double> assemble_curl_penalty(const Grid& g);

// Penalized gradient regression: solves (B + psi Q'Q) z_v = B z_A with
// B the block assembly of f C^{-1} (diagonal entries staggered to the
// difference-stencil midpoints, see weight_blocks), then recovers the
// potential by least squares and sets r = C^{-1}(A - v). Rejects inputs
// carrying fdot (the penalty encodes market clearing for a fixed density
// only), grids with d1 != d2 (the penalty stencil assumes square spacing),
// and force_iterative (the penalty term is ill-conditioned by construction,
// so this route always factorizes).
DecompositionResult gradient_regression(const DecompositionInput& in);

// Variable-coefficient Poisson route: minimizes |G w - z_A|^2_B, i.e. solves
// G'BG w = G'B z_A + z_fdot with G the full one-sided gradient stencil; flux
// boundary conditions are built into the normal equations. v = gradient(wdot)
// identically and r = C^{-1}(A - v). When fdot is present the r slot holds the
// net displacement field (reallocation minus distribution shift) and the
// result is flagged accordingly.
//
// Both routes report diagnostics.orthogonality in the scheme's quadrature,
// z_v' B (z_A - z_v) * cell weight: B(z_A - z_v) holds the staggered samples
// of f*r, and this is the pairing in which each minimizer is exactly
// orthogonal (up to 1/psi for the penalized route). Without fdot it vanishes
// to solver precision; with fdot it equals -<wdot, fdot> as in the continuum.
DecompositionResult solve_poisson_direct(const DecompositionInput& in);

// Dispatch on in.solver.
DecompositionResult decompose(const DecompositionInput& in);

// Least-squares integration of a vector field back to its potential
// (mean-zero). Requires the field to be curl-free: relative curl residual
// above 10x tol raises InvalidInputError.
PotentialRecovery recover_potential(const VectorField& v, double tol = 1e-10);

// 1/2 sum r'C r f * cell weight: the second-order output gain functional.
double output_gain(const VectorField& r, const MatrixField& C, const ScalarField& f);

// Market-clearing diagnostics for a displacement field.
FeasibilityReport feasibility_report(const VectorField& r, const ScalarField& f);

// Default curl-penalty weight: 1e7 * mass-weighted median eigenvalue of the
// f C^{-1} blocks, scaled by 1/(d1 d2) so the penalty strength is
// grid-independent. The median is weighted by f so peaked densities scale to
// the mass-carrying core rather than the tail. The reported orthogonality of
// the penalized route scales like 1/psi; this factor keeps it an order of
// magnitude under 1e-6 relative while the solution itself is insensitive to
// psi over several orders of magnitude.
double default_penalty_weight(const ScalarField& f, const MatrixField& C);

// One-dimensional skill space. Feasibility (d/dx (r f) = 0 with zero endpoint
// flux) forces r = 0, so technological change passes through entirely:
// v = A exactly, wdot = mean-zero antiderivative of A, both residuals 0.
struct Unidimensional {
  Eigen::VectorXd x;  // strictly increasing nodes
  Eigen::VectorXd f;  // density (unused by the solution; kept for reporting)
  Eigen::VectorXd a;  // technological change
};

struct UnidimensionalResult {
  Eigen::VectorXd v;     // equals a exactly
  Eigen::VectorXd wdot;  // mean-zero cumulative integral of a
  Eigen::VectorXd r;     // exactly zero
  double divergence_residual = 0.0;  // exactly zero
  double max_boundary_flux = 0.0;    // exactly zero
};

UnidimensionalResult decompose_unidimensional(const Unidimensional& in);

}  // namespace helmsort
