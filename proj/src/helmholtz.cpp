#include "helmsort/helmholtz.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace helmsort {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Trip = Eigen::Triplet<double>;

Eigen::VectorXd flatten(const VectorField& v) {
  Eigen::VectorXd z(2 * v.values.rows());
  for (Eigen::Index u = 0; u < v.values.rows(); ++u) {
    z[2 * u] = v.values(u, 0);
    z[2 * u + 1] = v.values(u, 1);
  }
  return z;
}

VectorField unflatten(const Grid& g, const Eigen::VectorXd& z) {
  VectorField v = zeros_vector(g);
  for (int u = 0; u < g.size(); ++u) {
    v.values(u, 0) = z[2 * u];
    v.values(u, 1) = z[2 * u + 1];
  }
  return v;
}

// Complete one-sided gradient stencil as a 2N x N matrix; row 2u+k matches the
// module `gradient` operator exactly, so G w flattens gradient(w).
SpMat assemble_gradient_matrix(const Grid& g) {
  std::vector<Trip> t;
  t.reserve(4 * static_cast<std::size_t>(g.size()));
  const double d[2] = {g.d1(), g.d2()};
  for (int u = 0; u < g.size(); ++u) {
    for (int k = 0; k < 2; ++k) {
      const int row = 2 * u + k;
      const int fwd = g.neighbor(u, k, +1);
      if (fwd >= 0) {
        t.emplace_back(row, fwd, 1.0 / d[k]);
        t.emplace_back(row, u, -1.0 / d[k]);
        continue;
      }
      const int bwd = g.neighbor(u, k, -1);
      if (bwd >= 0) {
        t.emplace_back(row, u, 1.0 / d[k]);
        t.emplace_back(row, bwd, -1.0 / d[k]);
      }
    }
  }
  SpMat m(2 * g.size(), g.size());
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

Eigen::Matrix2d node_weight(const ScalarField& f, const MatrixField& c, int u) {
  const Eigen::Matrix2d cf = f.values[u] * c.values[static_cast<std::size_t>(u)].inverse();
  return 0.5 * (cf + cf.transpose());
}

// Per-node weight blocks for the quadratic form. Three refinements over a
// plain node-collocated f C^{-1}:
//
//  1. Staggering: the diagonal entry for component k is evaluated at the
//     midpoint of that component's difference stencil (average of the two
//     stencil nodes), pairing the one-sided gradient with its own quadrature
//     point. Node values alone leave a first-order placement error that
//     dominates the decomposition. Off-diagonal entries stay at the node; if
//     the mixed entry breaks positive definiteness of a staggered block, the
//     node falls back to its (always SPD) node-evaluated block.
//
//  2. Cut cells: each row's quadrature weight is the fraction of its edge
//     strip (the dual rectangle of the stencil edge) covered by the true
//     domain. On a masked disk this makes the quadratic form a consistent
//     quadrature of the integral over the analytic disk, so the natural
//     boundary condition emerges on the true circle instead of the staircase;
//     without it the flux of f*r through staircase faces does not cancel and
//     an O(1)-amplitude boundary layer forms. Applied as a congruence scaling
//     (sqrt of the row fractions on both sides) to keep blocks SPD. A small
//     floor keeps the penalized system's conditioning in check.
//
//  3. Shared-edge split: a backward-fallback row reuses the same edge as its
//     west/south neighbor's forward row, so that strip would be counted
//     twice; both rows carry half the weight.
std::vector<Eigen::Matrix2d> weight_blocks(const ScalarField& f, const MatrixField& c) {
  const Grid& g = *f.grid;
  const Eigen::Vector2d half{0.5 * g.d1(), 0.5 * g.d2()};
  std::vector<Eigen::Matrix2d> blocks;
  blocks.reserve(static_cast<std::size_t>(g.size()));
  for (int u = 0; u < g.size(); ++u) {
    const Eigen::Matrix2d base = node_weight(f, c, u);
    Eigen::Matrix2d b = base;
    Eigen::Vector2d row_weight{1.0, 1.0};
    for (int k = 0; k < 2; ++k) {
      int partner = g.neighbor(u, k, +1);
      const bool forward = partner >= 0;
      if (!forward) partner = g.neighbor(u, k, -1);
      if (partner < 0) continue;
      b(k, k) = 0.5 * (base(k, k) + node_weight(f, c, partner)(k, k));
      Eigen::Vector2d blo = g.x(u).cwiseMin(g.x(partner));
      Eigen::Vector2d bhi = g.x(u).cwiseMax(g.x(partner));
      blo[1 - k] -= half[1 - k];
      bhi[1 - k] += half[1 - k];
      double w = g.cover_fraction(blo, bhi);
      if (!forward || g.neighbor(partner, k, +1) < 0) w *= 0.5;
      row_weight[k] = std::max(w, 0.05);
    }
    if (b(0, 0) * b(1, 1) - b(0, 1) * b(1, 0) <= 1e-12 * b(0, 0) * b(1, 1)) b = base;
    for (int r = 0; r < 2; ++r)
      for (int s = 0; s < 2; ++s) b(r, s) *= std::sqrt(row_weight[r] * row_weight[s]);
    blocks.push_back(b);
  }
  return blocks;
}

SpMat assemble_block_diagonal(const std::vector<Eigen::Matrix2d>& blocks) {
  std::vector<Trip> t;
  t.reserve(4 * blocks.size());
  for (std::size_t u = 0; u < blocks.size(); ++u) {
    const auto& b = blocks[u];
    const int base = 2 * static_cast<int>(u);
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 2; ++c)
        if (b(r, c) != 0.0) t.emplace_back(base + r, base + c, b(r, c));
  }
  SpMat m(2 * static_cast<int>(blocks.size()), 2 * static_cast<int>(blocks.size()));
  m.setFromTriplets(t.begin(), t.end());
  return m;
}

// Decouples node 0 (value pinned to zero) so the constant null space is fixed
// and the remaining system is positive definite.
SpMat ground_node0(const SpMat& l) {
  double anchor = 0.0;
  for (int u = 0; u < l.rows(); ++u) anchor += l.coeff(u, u);
  anchor /= static_cast<double>(l.rows());
  std::vector<Trip> t;
  t.reserve(l.nonZeros());
  for (int col = 0; col < l.outerSize(); ++col)
    for (SpMat::InnerIterator it(l, col); it; ++it)
      if (it.row() != 0 && it.col() != 0) t.emplace_back(it.row(), it.col(), it.value());
  t.emplace_back(0, 0, anchor);
  SpMat out(l.rows(), l.cols());
  out.setFromTriplets(t.begin(), t.end());
  return out;
}

struct LinearStats {
  double residual = 0.0;
  int iterations = 0;
};

Eigen::VectorXd solve_spd(const SpMat& m, const Eigen::VectorXd& rhs, bool factorize,
                          double tol, int maxit, const std::optional<double>& init,
                          LinearStats& stats) {
  if (factorize && !init) {
    // Jacobi equilibration: factor D m D with D = diag(m)^{-1/2}. Exact in
    // real arithmetic, but it compresses the diagonal spread (density tails,
    // cut-cell floors, large penalty weights can span ten orders) so the
    // factorization keeps its accuracy where the plain system would lose it.
    Eigen::VectorXd d = m.diagonal();
    for (Eigen::Index i = 0; i < d.size(); ++i)
      d[i] = d[i] > 0.0 ? 1.0 / std::sqrt(d[i]) : 1.0;
    SpMat scaled = d.asDiagonal() * m * d.asDiagonal();
    Eigen::SimplicialLLT<SpMat> llt(scaled);
    if (llt.info() != Eigen::Success)
      throw NumericalError("linear solve: sparse factorization failed (matrix not SPD?)");
    Eigen::VectorXd x = d.asDiagonal() * llt.solve(d.asDiagonal() * rhs).eval();
    stats.residual = (m * x - rhs).norm() / std::max(rhs.norm(), 1e-300);
    stats.iterations = 0;
    return x;
  }
  Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper,
                           Eigen::DiagonalPreconditioner<double>>
      cg;
  cg.setTolerance(tol);
  cg.setMaxIterations(maxit);
  cg.compute(m);
  Eigen::VectorXd x;
  if (init) {
    x = cg.solveWithGuess(rhs, Eigen::VectorXd::Constant(rhs.size(), *init));
  } else {
    x = cg.solve(rhs);
  }
  stats.residual = cg.error();
  stats.iterations = static_cast<int>(cg.iterations());
  if (cg.info() != Eigen::Success)
    throw NumericalError("linear solve: conjugate gradient stalled; relative residual " +
                         std::to_string(cg.error()));
  return x;
}

ScalarField floor_density(const ScalarField& f) {
  if (!f.values.allFinite() || f.values.minCoeff() < 0.0)
    throw InvalidInputError("decomposition: density must be finite and nonnegative");
  const double fmax = f.values.maxCoeff();
  if (!(fmax > 0.0)) throw InvalidInputError("decomposition: density has no mass");
  ScalarField out{f.grid, f.values.cwiseMax(1e-8 * fmax)};
  out.values *= integrate(f) / integrate(out);  // flooring must not change the mass
  return out;
}

void validate_input(const DecompositionInput& in) {
  if (in.f.grid == nullptr) throw InvalidInputError("decomposition: missing grid");
  require_same_grid(in.f.grid, in.C.grid, "decomposition");
  require_same_grid(in.f.grid, in.A.grid, "decomposition");
  const Grid& g = *in.f.grid;
  if (in.f.values.size() != g.size() || in.A.values.rows() != g.size() ||
      static_cast<int>(in.C.values.size()) != g.size())
    throw InvalidInputError("decomposition: field sizes do not match the grid");
  if (g.interior_span(0) < 3 || g.interior_span(1) < 3)
    throw InvalidInputError("decomposition: grid too coarse, need 3 interior nodes per axis");
  if (!in.A.values.allFinite())
    throw InvalidInputError("decomposition: technological change field must be finite");
  validate_spd(in.C, "decomposition: complementarity");
  if (in.fdot) {
    require_same_grid(in.f.grid, in.fdot->grid, "decomposition");
    if (std::abs(integrate(*in.fdot)) > 1e-8)
      throw InvalidInputError("decomposition: distribution change must integrate to zero");
  }
}

ScalarField potential_least_squares(const VectorField& v, bool factorize, double tol,
                                    double& residual_out) {
  const Grid& g = *v.grid;
  const SpMat gm = assemble_gradient_matrix(g);
  const Eigen::VectorXd zv = flatten(v);
  SpMat l = SpMat(gm.transpose()) * gm;
  Eigen::VectorXd rhs = gm.transpose() * zv;
  rhs.array() -= rhs.mean();
  const SpMat lg = ground_node0(l);
  rhs[0] = 0.0;
  LinearStats stats;
  Eigen::VectorXd w =
      solve_spd(lg, rhs, factorize, tol, 10 * static_cast<int>(rhs.size()), std::nullopt, stats);
  w.array() -= w.mean();
  residual_out = std::sqrt((gm * w - zv).squaredNorm() * g.cell_weight());
  return ScalarField{&g, std::move(w)};
}

// <v, r>_f in the scheme's own quadrature: B(z_A - z_v) holds the staggered
// samples of f*r, so this is the inner product the normal equations control.
double native_orthogonality(const SpMat& b, const Eigen::VectorXd& za,
                            const Eigen::VectorXd& zv, double cell_weight) {
  return zv.dot(b * (za - zv)) * cell_weight;
}

Diagnostics compute_diagnostics(const VectorField& v, const VectorField& r,
                                const ScalarField& f, const MatrixField& c,
                                double orthogonality) {
  Diagnostics d;
  d.orthogonality = orthogonality;
  const FeasibilityReport feas = feasibility_report(r, f);
  d.divergence_residual = feas.divergence_residual;
  d.max_boundary_flux = feas.max_boundary_flux;
  d.curl_residual = l2_norm(curl2d(v));
  d.output_gain = output_gain(r, c, f);
  return d;
}

VectorField residual_reallocation(const MatrixField& c, const VectorField& a,
                                  const VectorField& v) {
  VectorField r = zeros_vector(*a.grid);
  for (int u = 0; u < a.grid->size(); ++u) {
    const Eigen::Vector2d diff = a.values.row(u) - v.values.row(u);
    r.values.row(u) = c.values[u].inverse() * diff;
  }
  return r;
}

}  // namespace

Eigen::SparseMatrix<double> assemble_curl_penalty(const Grid& g) {
  std::vector<Trip> t;
  for (int u = 0; u < g.size(); ++u) {
    if (!g.full_forward_cell(u)) continue;  // boundary rows carry no entries
    const int east = g.neighbor(u, 0, +1);
    const int north = g.neighbor(u, 1, +1);
    t.emplace_back(u, 2 * u, -1.0);          // -v1 at (i,j)
    t.emplace_back(u, 2 * u + 1, 1.0);       // +v2 at (i,j)
    t.emplace_back(u, 2 * north, 1.0);       // +v1 at (i,j+1)
    t.emplace_back(u, 2 * east + 1, -1.0);   // -v2 at (i+1,j)
  }
  // One-sided compatibility rows. A component with no forward neighbor is a
  // backward sample of the same edge as its neighbor's forward sample, so on
  // a gradient field the two agree exactly; without these rows that sample
  // appears in no cell row and the penalty leaves it unconstrained (it would
  // snap to the data pointwise along the east/north staircase). Together with
  // the cell rows they shrink the penalty kernel to the discrete gradients.
  int row = g.size();
  std::vector<Trip> extra;
  for (int u = 0; u < g.size(); ++u) {
    for (int k = 0; k < 2; ++k) {
      if (g.neighbor(u, k, +1) >= 0) continue;
      const int back = g.neighbor(u, k, -1);
      if (back < 0) continue;
      extra.emplace_back(row, 2 * u + k, 1.0);
      extra.emplace_back(row, 2 * back + k, -1.0);
      ++row;
    }
  }
  t.insert(t.end(), extra.begin(), extra.end());
  SpMat q(row, 2 * g.size());
  q.setFromTriplets(t.begin(), t.end());
  return q;
}

double default_penalty_weight(const ScalarField& f, const MatrixField& c) {
  // Mass-weighted median: each node counts with its density, so a peaked f
  // (most nodes in a thin tail) still yields a core-scale weight. A plain
  // node median under-scales psi there and the reported orthogonality, which
  // is normalized by the mass-carrying core, drifts up with the tail volume.
  std::vector<std::pair<double, double>> eigs;
  eigs.reserve(2 * c.values.size());
  double total = 0.0;
  for (std::size_t u = 0; u < c.values.size(); ++u) {
    const double fu = f.values[static_cast<Eigen::Index>(u)];
    const Eigen::Matrix2d cf = fu * c.values[u].inverse();
    const double tr = 0.5 * (cf(0, 0) + cf(1, 1));
    const double det = cf.determinant();
    const double disc = std::sqrt(std::max(tr * tr - det, 0.0));
    eigs.emplace_back(tr - disc, fu);
    eigs.emplace_back(tr + disc, fu);
    total += 2.0 * fu;
  }
  std::sort(eigs.begin(), eigs.end());
  double median = eigs.back().first;
  double acc = 0.0;
  for (const auto& [eig, weight] : eigs) {
    acc += weight;
    if (acc >= 0.5 * total) {
      median = eig;
      break;
    }
  }
  // The reported orthogonality scales like 1/psi until factorization noise
  // takes over; this factor keeps it an order of magnitude under the 1e-6
  // target while the solution itself is insensitive to psi over several
  // orders of magnitude.
  return 1e7 * std::max(median, 1e-300) / (f.grid->d1() * f.grid->d2());
}

DecompositionResult gradient_regression(const DecompositionInput& in) {
  validate_input(in);
  if (in.fdot)
    throw InvalidInputError(
        "gradient_regression: distribution change requires the direct solver");
  const Grid& g = *in.f.grid;
  if (std::abs(g.d1() - g.d2()) > 1e-12 * std::max(g.d1(), g.d2()))
    throw InvalidInputError("gradient_regression: penalty stencil requires square spacing");
  if (in.psi < 0.0)
    throw InvalidInputError("gradient_regression: penalty weight must be positive");
  if (in.force_iterative)
    throw InvalidInputError(
        "gradient_regression: the penalty system is too ill-conditioned for an "
        "iterative solve; it is always factorized (use the direct solver for "
        "iterative runs)");

  const ScalarField f = floor_density(in.f);
  SpMat b = assemble_block_diagonal(weight_blocks(f, in.C));
  const SpMat q = assemble_curl_penalty(g);
  const double psi = in.psi > 0.0 ? in.psi : default_penalty_weight(f, in.C);

  const Eigen::VectorXd za = flatten(in.A);
  if (in.use_squared_weight) b = SpMat(b * b);
  const SpMat m = b + SpMat(psi * SpMat(q.transpose() * q));
  const Eigen::VectorXd rhs = b * za;

  LinearStats stats;
  const Eigen::VectorXd zv = solve_spd(m, rhs, /*factorize=*/true, in.tol,
                                       static_cast<int>(rhs.size()), std::nullopt, stats);

  DecompositionResult out;
  out.v = unflatten(g, zv);
  double fit_residual = 0.0;
  out.wdot = potential_least_squares(out.v, std::max(g.n1(), g.n2()) <= 64,
                                     std::min(in.tol, 1e-10), fit_residual);
  out.r = residual_reallocation(in.C, in.A, out.v);
  out.diagnostics = compute_diagnostics(out.v, out.r, f, in.C,
                                        native_orthogonality(b, za, zv, g.cell_weight()));
  return out;
}

DecompositionResult solve_poisson_direct(const DecompositionInput& in) {
  validate_input(in);
  const Grid& g = *in.f.grid;
  const ScalarField f = floor_density(in.f);
  const auto blocks = weight_blocks(f, in.C);
  const SpMat b = assemble_block_diagonal(blocks);
  const SpMat gm = assemble_gradient_matrix(g);

  const Eigen::VectorXd za = flatten(in.A);
  const SpMat l = SpMat(gm.transpose()) * SpMat(b * gm);
  Eigen::VectorXd rhs = gm.transpose() * (b * za);
  if (in.fdot) rhs += in.fdot->values;
  rhs.array() -= rhs.mean();  // compatibility: project onto the solvable range

  const SpMat lg = ground_node0(l);
  rhs[0] = 0.0;
  const bool factorize = !in.force_iterative && std::max(g.n1(), g.n2()) <= 64;
  const int maxit = in.max_iterations > 0 ? in.max_iterations
                                          : 10 * static_cast<int>(rhs.size());
  LinearStats stats;
  Eigen::VectorXd w = solve_spd(lg, rhs, factorize, in.tol, maxit, in.iterative_init, stats);
  w.array() -= w.mean();

  DecompositionResult out;
  out.wdot = ScalarField{&g, std::move(w)};
  out.v = gradient(out.wdot);
  out.r = residual_reallocation(in.C, in.A, out.v);
  out.net_displacement = in.fdot.has_value();
  out.diagnostics = compute_diagnostics(
      out.v, out.r, f, in.C, native_orthogonality(b, za, flatten(out.v), g.cell_weight()));
  return out;
}

DecompositionResult decompose(const DecompositionInput& in) {
  return in.solver == SolverKind::Penalized ? gradient_regression(in)
                                            : solve_poisson_direct(in);
}

PotentialRecovery recover_potential(const VectorField& v, double tol) {
  const Grid& g = *v.grid;
  const double curl_l2 = l2_norm(curl2d(v));
  const double v_l2 = l2_norm(v);
  const double span = std::hypot(g.n1() * g.d1(), g.n2() * g.d2());
  if (v_l2 > 0.0 && curl_l2 * span > 10.0 * tol * v_l2)
    throw InvalidInputError("recover_potential: field is not a gradient (curl residual " +
                            std::to_string(curl_l2) + ")");
  PotentialRecovery rec;
  const bool factorize = std::max(g.n1(), g.n2()) <= 64;
  rec.wdot = potential_least_squares(v, factorize, tol, rec.residual);
  return rec;
}

double output_gain(const VectorField& r, const MatrixField& c, const ScalarField& f) {
  require_same_grid(r.grid, c.grid, "output_gain");
  require_same_grid(r.grid, f.grid, "output_gain");
  double acc = 0.0;
  for (int u = 0; u < r.grid->size(); ++u) {
    const Eigen::Vector2d ru = r.values.row(u);
    acc += ru.dot(c.values[u] * ru) * f.values[u];
  }
  return 0.5 * acc * r.grid->cell_weight();
}

FeasibilityReport feasibility_report(const VectorField& r, const ScalarField& f) {
  require_same_grid(r.grid, f.grid, "feasibility_report");
  const Grid& g = *r.grid;
  VectorField rf = r;
  rf.values.array().colwise() *= f.values.array();
  const ScalarField div = divergence(rf);
  double acc = 0.0;
  for (int u = 0; u < g.size(); ++u)
    if (!g.is_boundary(u)) acc += div.values[u] * div.values[u];
  FeasibilityReport rep;
  rep.divergence_residual = std::sqrt(acc * g.cell_weight());
  const std::vector<double> flux = boundary_flux(r, f);
  double flux2 = 0.0;
  for (double fl : flux) {
    rep.max_boundary_flux = std::max(rep.max_boundary_flux, std::abs(fl));
    flux2 += fl * fl;
  }
  rep.boundary_flux_l2 = std::sqrt(flux2 * 0.5 * (g.d1() + g.d2()));
  return rep;
}

UnidimensionalResult decompose_unidimensional(const Unidimensional& in) {
  const Eigen::Index n = in.x.size();
  if (n < 2 || in.f.size() != n || in.a.size() != n)
    throw InvalidInputError("unidimensional: need matching x, f, a with at least 2 nodes");
  for (Eigen::Index i = 1; i < n; ++i)
    if (!(in.x[i] > in.x[i - 1]))
      throw InvalidInputError("unidimensional: nodes must be strictly increasing");

  UnidimensionalResult out;
  out.v = in.a;  // feasibility forces r = 0: change passes through entirely
  out.r = Eigen::VectorXd::Zero(n);
  out.wdot = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 1; i < n; ++i)
    out.wdot[i] = out.wdot[i - 1] +
                  0.5 * (in.a[i] + in.a[i - 1]) * (in.x[i] - in.x[i - 1]);
  out.wdot.array() -= out.wdot.mean();
  out.divergence_residual = 0.0;
  out.max_boundary_flux = 0.0;
  return out;
}

}  // namespace helmsort
