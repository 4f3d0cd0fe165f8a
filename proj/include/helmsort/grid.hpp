#pragma once

#include <Eigen/Dense>
#include <functional>
#include <utility>
#include <vector>

#include "helmsort/errors.hpp"

namespace helmsort {

// Cell-centered finite-difference mesh over a rectangle or a disk mask.
//
// Nodes sit at cell centers x = lo + (i+1/2)*Delta and are stored in
// lexicographic (x1, x2) order; a disk keeps only the centers inside the
// circle (masked rectangle). A node is boundary iff one of its 4-neighbors is
// outside the domain; outward normals come from the analytic shape (face
// normals on the rectangle, radial on the disk), not from the staircase.
class Grid {
 public:
  enum class Shape { Rectangle, Disk };

  static Grid rectangle(const Eigen::Vector2d& lo, const Eigen::Vector2d& hi,
                        int n1, int n2);
  static Grid unit_square(int n) { return rectangle({0.0, 0.0}, {1.0, 1.0}, n, n); }
  static Grid disk(const Eigen::Vector2d& center, double radius, int n);

  Shape shape() const { return shape_; }
  int n1() const { return n1_; }
  int n2() const { return n2_; }
  double d1() const { return d_[0]; }
  double d2() const { return d_[1]; }
  double cell_weight() const { return d_[0] * d_[1]; }

  // Number of active nodes.
  int size() const { return static_cast<int>(coords_.rows()); }

  // Compact index of lattice site (i,j); -1 when outside the domain.
  int node(int i, int j) const {
    if (i < 0 || j < 0 || i >= n1_ || j >= n2_) return -1;
    return index_[static_cast<std::size_t>(i) * n2_ + j];
  }
  std::pair<int, int> ij(int u) const { return ij_[u]; }
  Eigen::Vector2d x(int u) const { return coords_.row(u); }
  const Eigen::Matrix<double, Eigen::Dynamic, 2>& coords() const { return coords_; }

  // Neighbor along axis (0 or 1) at signed lattice offset `step`; -1 if absent.
  int neighbor(int u, int axis, int step) const {
    const auto [i, j] = ij_[u];
    return axis == 0 ? node(i + step, j) : node(i, j + step);
  }

  bool is_boundary(int u) const { return boundary_[u] != 0; }
  const std::vector<int>& boundary_nodes() const { return boundary_nodes_; }

  // Outward unit normal at boundary nodes; zero vector on interior nodes.
  Eigen::Vector2d normal(int u) const { return normals_.row(u); }

  // True when {u, u+e1, u+e2, u+e1+e2} are all in the domain. Curl evaluations
  // and penalty rows live on these cells only: that is what makes the discrete
  // cross-derivative identity curl(grad s) = 0 exact on masked domains too.
  bool full_forward_cell(int u) const {
    const auto [i, j] = ij_[u];
    return node(i + 1, j) >= 0 && node(i, j + 1) >= 0 && node(i + 1, j + 1) >= 0;
  }

  // Distinct interior lattice coordinates per axis (solver resolution check).
  int interior_span(int axis) const;

  // Fraction of the axis-aligned box [blo, bhi] covered by the true domain
  // (exact circle overlap on disks, clipped box on rectangles). Quadrature
  // near a masked boundary uses this so cell weights see the analytic shape
  // rather than the staircase.
  double cover_fraction(const Eigen::Vector2d& blo, const Eigen::Vector2d& bhi) const;

 private:
  Grid() = default;
  void finalize();  // builds boundary classification and normals

  Shape shape_ = Shape::Rectangle;
  int n1_ = 0, n2_ = 0;
  Eigen::Vector2d lo_{0.0, 0.0};
  Eigen::Vector2d d_{0.0, 0.0};
  Eigen::Vector2d center_{0.0, 0.0};
  double radius_ = 0.0;
  std::vector<int> index_;                 // n1*n2 lattice -> compact index or -1
  std::vector<std::pair<int, int>> ij_;    // compact index -> lattice site
  Eigen::Matrix<double, Eigen::Dynamic, 2> coords_;
  std::vector<char> boundary_;
  std::vector<int> boundary_nodes_;
  Eigen::Matrix<double, Eigen::Dynamic, 2> normals_;
};

// One real value per active node.
struct ScalarField {
  const Grid* grid = nullptr;
  Eigen::VectorXd values;
};

// One 2-vector per active node (row u = value at node u).
struct VectorField {
  const Grid* grid = nullptr;
  Eigen::Matrix<double, Eigen::Dynamic, 2> values;
};

// One 2x2 matrix per active node.
struct MatrixField {
  const Grid* grid = nullptr;
  std::vector<Eigen::Matrix2d> values;
};

ScalarField make_scalar(const Grid& g,
                        const std::function<double(const Eigen::Vector2d&)>& fn);
VectorField make_vector(
    const Grid& g, const std::function<Eigen::Vector2d(const Eigen::Vector2d&)>& fn);
MatrixField make_matrix(
    const Grid& g, const std::function<Eigen::Matrix2d(const Eigen::Vector2d&)>& fn);
MatrixField constant_matrix(const Grid& g, const Eigen::Matrix2d& m);
ScalarField zeros(const Grid& g);
VectorField zeros_vector(const Grid& g);

// Forward differences with one-sided backward fallback where the forward
// neighbor leaves the domain.
VectorField gradient(const ScalarField& s);

// Backward differences with forward fallback: the negative adjoint of
// `gradient` up to boundary terms.
ScalarField divergence(const VectorField& v);

// dv2/dx1 - dv1/dx2 via forward differences on full forward cells; zero-filled
// elsewhere.
ScalarField curl2d(const VectorField& v);

// v(x)·n(x)·f(x) per boundary node, ordered as grid.boundary_nodes().
std::vector<double> boundary_flux(const VectorField& v, const ScalarField& f);

// Midpoint quadrature with cell weight d1*d2 over active nodes.
double integrate(const ScalarField& s);
// Sum of a(x)·b(x) f(x) d1 d2 over active nodes.
double inner_product(const VectorField& a, const VectorField& b, const ScalarField& f);

// Weighted L2 norms under the same quadrature; the vector overloads admit an
// optional density weight.
double l2_norm(const ScalarField& s);
double l2_norm(const VectorField& v);
double l2_norm(const VectorField& v, const ScalarField& f);

// Pointwise helpers.
ScalarField multiply(const ScalarField& a, const ScalarField& b);
VectorField apply(const MatrixField& m, const VectorField& v);
MatrixField inverse(const MatrixField& m);

// Throws InvalidInputError unless every entry is symmetric within 1e-10 with
// strictly positive eigenvalues.
void validate_spd(const MatrixField& m, const std::string& what);

// Throws InvalidInputError unless the two fields live on the same grid.
void require_same_grid(const Grid* a, const Grid* b, const std::string& what);

}  // namespace helmsort
