#include "helmsort/grid.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <set>

namespace helmsort {

namespace {

// Integral of sqrt(r^2 - t^2) over [a, b] (arguments clipped to [-r, r]).
double chord_integral(double r, double a, double b) {
  const auto antiderivative = [r](double t) {
    t = std::clamp(t, -r, r);
    return 0.5 * (t * std::sqrt(std::max(0.0, r * r - t * t)) +
                  r * r * std::asin(std::clamp(t / r, -1.0, 1.0)));
  };
  return antiderivative(b) - antiderivative(a);
}

// Exact area of {(t, s) in [x0,x1] x [y0,y1] : t^2 + s^2 <= r^2}. The box is
// split at every abscissa where a horizontal box edge meets the circle, so on
// each piece the vertical section is one smooth case (box edge or arc) that
// integrates in closed form.
double circle_box_area(double r, double x0, double x1, double y0, double y1) {
  x0 = std::max(x0, -r);
  x1 = std::min(x1, r);
  if (!(x1 > x0) || y0 >= r || y1 <= -r || y1 <= y0) return 0.0;
  double cuts[6] = {x0, x1, x1, x1, x1, x1};
  int m = 2;
  for (double y : {y0, y1}) {
    if (std::abs(y) < r) {
      const double t = std::sqrt(r * r - y * y);
      for (double c : {-t, t})
        if (c > x0 && c < x1) cuts[m++] = c;
    }
  }
  std::sort(cuts, cuts + m);
  double area = 0.0;
  for (int p = 0; p + 1 < m; ++p) {
    const double a = cuts[p], b = cuts[p + 1];
    if (!(b > a)) continue;
    const double mid = 0.5 * (a + b);
    const double s = std::sqrt(std::max(0.0, r * r - mid * mid));
    if (std::min(s, y1) <= std::max(-s, y0)) continue;
    const bool arc_top = s < y1, arc_bot = -s > y0;
    area += (arc_top ? chord_integral(r, a, b) : y1 * (b - a)) -
            (arc_bot ? -chord_integral(r, a, b) : y0 * (b - a));
  }
  return std::max(area, 0.0);
}

}  // namespace

Grid Grid::rectangle(const Eigen::Vector2d& lo, const Eigen::Vector2d& hi,
                     int n1, int n2) {
  if (n1 < 2 || n2 < 2) throw InvalidInputError("grid: need at least 2 nodes per axis");
  if (!(hi[0] > lo[0]) || !(hi[1] > lo[1]))
    throw InvalidInputError("grid: rectangle bounds must satisfy lo < hi");
  Grid g;
  g.shape_ = Shape::Rectangle;
  g.n1_ = n1;
  g.n2_ = n2;
  g.lo_ = lo;
  g.d_ = {(hi[0] - lo[0]) / n1, (hi[1] - lo[1]) / n2};
  g.index_.assign(static_cast<std::size_t>(n1) * n2, -1);
  g.ij_.reserve(static_cast<std::size_t>(n1) * n2);
  std::vector<Eigen::Vector2d> pts;
  pts.reserve(g.ij_.capacity());
  for (int i = 0; i < n1; ++i) {
    for (int j = 0; j < n2; ++j) {
      g.index_[static_cast<std::size_t>(i) * n2 + j] = static_cast<int>(g.ij_.size());
      g.ij_.emplace_back(i, j);
      pts.emplace_back(lo[0] + (i + 0.5) * g.d_[0], lo[1] + (j + 0.5) * g.d_[1]);
    }
  }
  g.coords_.resize(static_cast<Eigen::Index>(pts.size()), 2);
  for (std::size_t u = 0; u < pts.size(); ++u) g.coords_.row(static_cast<Eigen::Index>(u)) = pts[u];
  g.finalize();
  return g;
}

Grid Grid::disk(const Eigen::Vector2d& center, double radius, int n) {
  if (n < 2) throw InvalidInputError("grid: need at least 2 nodes per axis");
  if (!(radius > 0.0)) throw InvalidInputError("grid: disk radius must be positive");
  Grid g;
  g.shape_ = Shape::Disk;
  g.n1_ = n;
  g.n2_ = n;
  g.lo_ = center - Eigen::Vector2d{radius, radius};
  g.d_ = {2.0 * radius / n, 2.0 * radius / n};
  g.center_ = center;
  g.radius_ = radius;
  g.index_.assign(static_cast<std::size_t>(n) * n, -1);
  std::vector<Eigen::Vector2d> pts;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const Eigen::Vector2d x{g.lo_[0] + (i + 0.5) * g.d_[0],
                              g.lo_[1] + (j + 0.5) * g.d_[1]};
      if ((x - center).norm() <= radius) {
        g.index_[static_cast<std::size_t>(i) * n + j] = static_cast<int>(g.ij_.size());
        g.ij_.emplace_back(i, j);
        pts.push_back(x);
      }
    }
  }
  if (pts.empty()) throw InvalidInputError("grid: disk mask contains no nodes");
  g.coords_.resize(static_cast<Eigen::Index>(pts.size()), 2);
  for (std::size_t u = 0; u < pts.size(); ++u) g.coords_.row(static_cast<Eigen::Index>(u)) = pts[u];
  g.finalize();
  return g;
}

void Grid::finalize() {
  const int n = size();
  boundary_.assign(n, 0);
  normals_.setZero(n, 2);
  for (int u = 0; u < n; ++u) {
    const auto [i, j] = ij_[u];
    const bool bdry = node(i - 1, j) < 0 || node(i + 1, j) < 0 ||
                      node(i, j - 1) < 0 || node(i, j + 1) < 0;
    if (!bdry) continue;
    boundary_[u] = 1;
    boundary_nodes_.push_back(u);
    if (shape_ == Shape::Disk) {
      const Eigen::Vector2d r = Eigen::Vector2d(coords_.row(u)) - center_;
      normals_.row(u) = r.normalized();
    } else {
      Eigen::Vector2d nrm{0.0, 0.0};
      if (node(i - 1, j) < 0) nrm[0] -= 1.0;
      if (node(i + 1, j) < 0) nrm[0] += 1.0;
      if (node(i, j - 1) < 0) nrm[1] -= 1.0;
      if (node(i, j + 1) < 0) nrm[1] += 1.0;
      normals_.row(u) = nrm.normalized();
    }
  }
}

int Grid::interior_span(int axis) const {
  std::set<int> seen;
  for (int u = 0; u < size(); ++u) {
    if (boundary_[u]) continue;
    seen.insert(axis == 0 ? ij_[u].first : ij_[u].second);
  }
  return static_cast<int>(seen.size());
}

double Grid::cover_fraction(const Eigen::Vector2d& blo, const Eigen::Vector2d& bhi) const {
  const double area = (bhi[0] - blo[0]) * (bhi[1] - blo[1]);
  if (!(area > 0.0)) return 0.0;
  if (shape_ == Shape::Disk)
    return circle_box_area(radius_, blo[0] - center_[0], bhi[0] - center_[0],
                           blo[1] - center_[1], bhi[1] - center_[1]) /
           area;
  const Eigen::Vector2d hi = lo_ + Eigen::Vector2d{n1_ * d_[0], n2_ * d_[1]};
  const double w = std::max(0.0, std::min(bhi[0], hi[0]) - std::max(blo[0], lo_[0]));
  const double h = std::max(0.0, std::min(bhi[1], hi[1]) - std::max(blo[1], lo_[1]));
  return w * h / area;
}

ScalarField make_scalar(const Grid& g,
                        const std::function<double(const Eigen::Vector2d&)>& fn) {
  ScalarField s{&g, Eigen::VectorXd(g.size())};
  for (int u = 0; u < g.size(); ++u) s.values[u] = fn(g.x(u));
  return s;
}

VectorField make_vector(
    const Grid& g, const std::function<Eigen::Vector2d(const Eigen::Vector2d&)>& fn) {
  VectorField v{&g, Eigen::Matrix<double, Eigen::Dynamic, 2>(g.size(), 2)};
  for (int u = 0; u < g.size(); ++u) v.values.row(u) = fn(g.x(u));
  return v;
}

MatrixField make_matrix(
    const Grid& g, const std::function<Eigen::Matrix2d(const Eigen::Vector2d&)>& fn) {
  MatrixField m{&g, {}};
  m.values.reserve(g.size());
  for (int u = 0; u < g.size(); ++u) m.values.push_back(fn(g.x(u)));
  return m;
}

MatrixField constant_matrix(const Grid& g, const Eigen::Matrix2d& m) {
  return make_matrix(g, [&m](const Eigen::Vector2d&) { return m; });
}

ScalarField zeros(const Grid& g) {
  return ScalarField{&g, Eigen::VectorXd::Zero(g.size())};
}

VectorField zeros_vector(const Grid& g) {
  return VectorField{&g, Eigen::Matrix<double, Eigen::Dynamic, 2>::Zero(g.size(), 2)};
}

VectorField gradient(const ScalarField& s) {
  const Grid& g = *s.grid;
  if (s.values.size() != g.size())
    throw InvalidInputError("gradient: field size does not match grid");
  VectorField out = zeros_vector(g);
  const double d[2] = {g.d1(), g.d2()};
  for (int u = 0; u < g.size(); ++u) {
    for (int k = 0; k < 2; ++k) {
      const int fwd = g.neighbor(u, k, +1);
      if (fwd >= 0) {
        out.values(u, k) = (s.values[fwd] - s.values[u]) / d[k];
      } else {
        const int bwd = g.neighbor(u, k, -1);
        if (bwd >= 0) out.values(u, k) = (s.values[u] - s.values[bwd]) / d[k];
      }
    }
  }
  return out;
}

ScalarField divergence(const VectorField& v) {
  const Grid& g = *v.grid;
  if (v.values.rows() != g.size())
    throw InvalidInputError("divergence: field size does not match grid");
  ScalarField out = zeros(g);
  const double d[2] = {g.d1(), g.d2()};
  for (int u = 0; u < g.size(); ++u) {
    double acc = 0.0;
    for (int k = 0; k < 2; ++k) {
      const int bwd = g.neighbor(u, k, -1);
      if (bwd >= 0) {
        acc += (v.values(u, k) - v.values(bwd, k)) / d[k];
      } else {
        const int fwd = g.neighbor(u, k, +1);
        if (fwd >= 0) acc += (v.values(fwd, k) - v.values(u, k)) / d[k];
      }
    }
    out.values[u] = acc;
  }
  return out;
}

ScalarField curl2d(const VectorField& v) {
  const Grid& g = *v.grid;
  if (v.values.rows() != g.size())
    throw InvalidInputError("curl2d: field size does not match grid");
  ScalarField out = zeros(g);
  for (int u = 0; u < g.size(); ++u) {
    if (!g.full_forward_cell(u)) continue;
    const int f1 = g.neighbor(u, 0, +1);
    const int f2 = g.neighbor(u, 1, +1);
    out.values[u] = (v.values(f1, 1) - v.values(u, 1)) / g.d1() -
                    (v.values(f2, 0) - v.values(u, 0)) / g.d2();
  }
  return out;
}

std::vector<double> boundary_flux(const VectorField& v, const ScalarField& f) {
  const Grid& g = *v.grid;
  require_same_grid(v.grid, f.grid, "boundary_flux");
  std::vector<double> out;
  out.reserve(g.boundary_nodes().size());
  for (int b : g.boundary_nodes()) {
    const Eigen::Vector2d n = g.normal(b);
    out.push_back((v.values(b, 0) * n[0] + v.values(b, 1) * n[1]) * f.values[b]);
  }
  return out;
}

double integrate(const ScalarField& s) { return s.values.sum() * s.grid->cell_weight(); }

double inner_product(const VectorField& a, const VectorField& b, const ScalarField& f) {
  require_same_grid(a.grid, b.grid, "inner_product");
  require_same_grid(a.grid, f.grid, "inner_product");
  const auto dots = (a.values.array() * b.values.array()).rowwise().sum();
  return (dots * f.values.array()).sum() * a.grid->cell_weight();
}

double l2_norm(const ScalarField& s) {
  return std::sqrt(s.values.squaredNorm() * s.grid->cell_weight());
}

double l2_norm(const VectorField& v) {
  return std::sqrt(v.values.squaredNorm() * v.grid->cell_weight());
}

double l2_norm(const VectorField& v, const ScalarField& f) {
  const double q = inner_product(v, v, f);
  return std::sqrt(std::max(q, 0.0));
}

ScalarField multiply(const ScalarField& a, const ScalarField& b) {
  require_same_grid(a.grid, b.grid, "multiply");
  return ScalarField{a.grid, a.values.cwiseProduct(b.values)};
}

VectorField apply(const MatrixField& m, const VectorField& v) {
  require_same_grid(m.grid, v.grid, "apply");
  VectorField out = zeros_vector(*v.grid);
  for (int u = 0; u < v.grid->size(); ++u)
    out.values.row(u) = m.values[u] * v.values.row(u).transpose();
  return out;
}

MatrixField inverse(const MatrixField& m) {
  MatrixField out{m.grid, {}};
  out.values.reserve(m.values.size());
  for (const auto& mat : m.values) {
    const double det = mat.determinant();
    if (det == 0.0 || !std::isfinite(det))
      throw NumericalError("matrix field: singular entry, cannot invert");
    out.values.push_back(mat.inverse());
  }
  return out;
}

void validate_spd(const MatrixField& m, const std::string& what) {
  for (const auto& mat : m.values) {
    const double scale = std::max(1.0, mat.cwiseAbs().maxCoeff());
    if ((mat - mat.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
      throw InvalidInputError(what + ": matrix entry is not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(0.5 * (mat + mat.transpose()));
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    if (!(lo > 1e-12 * std::max(hi, 0.0)))
      throw InvalidInputError(what + ": matrix entry is not positive definite");
  }
}

void require_same_grid(const Grid* a, const Grid* b, const std::string& what) {
  if (a == nullptr || b == nullptr || a != b)
    throw InvalidInputError(what + ": fields live on different grids");
}

}  // namespace helmsort
