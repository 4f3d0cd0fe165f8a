#include <cmath>
#include <numbers>

#include "doctest.h"
#include "helmsort/grid.hpp"

using namespace helmsort;

namespace {
constexpr double kPi = std::numbers::pi;

// Smooth scalar with nontrivial cross-derivatives, used by several tests.
double wavy(const Eigen::Vector2d& x) {
  return std::sin(2.0 * kPi * x[0]) * std::cos(kPi * x[1]) + 0.3 * x[0] * x[0];
}
}  // namespace

TEST_CASE("grid layout: cell centers in lexicographic order") {
  const Grid g = Grid::rectangle({0.0, 0.0}, {2.0, 1.0}, 4, 5);
  CHECK(g.size() == 20);
  CHECK(g.d1() == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(g.d2() == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(g.x(0)[0] == doctest::Approx(0.25));
  CHECK(g.x(0)[1] == doctest::Approx(0.1));
  for (int u = 1; u < g.size(); ++u) {
    const auto a = g.x(u - 1);
    const auto b = g.x(u);
    const bool lex = a[0] < b[0] || (a[0] == b[0] && a[1] < b[1]);
    CHECK(lex);
  }
}

TEST_CASE("grid classification: normals are unit length, disk rule holds") {
  for (const Grid& g : {Grid::unit_square(7), Grid::disk({0.0, 0.0}, 1.0, 32)}) {
    CHECK(g.interior_span(0) >= 3);
    CHECK(g.interior_span(1) >= 3);
    for (int u = 0; u < g.size(); ++u) {
      const bool has_missing_neighbor =
          g.neighbor(u, 0, -1) < 0 || g.neighbor(u, 0, +1) < 0 ||
          g.neighbor(u, 1, -1) < 0 || g.neighbor(u, 1, +1) < 0;
      CHECK(g.is_boundary(u) == has_missing_neighbor);
      if (g.is_boundary(u)) {
        CHECK(std::abs(g.normal(u).norm() - 1.0) <= 1e-12);
      } else {
        CHECK(g.normal(u).norm() == 0.0);
      }
    }
  }
}

TEST_CASE("grid: rectangle corner normals bisect the faces") {
  const Grid g = Grid::unit_square(6);
  const int corner = g.node(0, 0);
  REQUIRE(corner >= 0);
  const Eigen::Vector2d n = g.normal(corner);
  CHECK(n[0] == doctest::Approx(-1.0 / std::sqrt(2.0)).epsilon(1e-14));
  CHECK(n[1] == doctest::Approx(-1.0 / std::sqrt(2.0)).epsilon(1e-14));
}

TEST_CASE("gradient: constant, affine, bilinear") {
  const Grid g = Grid::unit_square(16);

  const VectorField gc = gradient(make_scalar(g, [](const Eigen::Vector2d&) { return 3.7; }));
  CHECK(gc.values.cwiseAbs().maxCoeff() == 0.0);

  const VectorField gx = gradient(make_scalar(g, [](const Eigen::Vector2d& x) { return x[0]; }));
  for (int u = 0; u < g.size(); ++u) {
    CHECK(gx.values(u, 0) == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(std::abs(gx.values(u, 1)) <= 1e-13);
  }

  // Forward and backward differences are both exact on x1*x2.
  const VectorField gb =
      gradient(make_scalar(g, [](const Eigen::Vector2d& x) { return x[0] * x[1]; }));
  double maxerr = 0.0;
  for (int u = 0; u < g.size(); ++u) {
    const Eigen::Vector2d x = g.x(u);
    maxerr = std::max(maxerr, std::abs(gb.values(u, 0) - x[1]));
    maxerr = std::max(maxerr, std::abs(gb.values(u, 1) - x[0]));
  }
  CHECK(maxerr <= std::max(g.d1(), g.d2()));  // stated bound
  CHECK(maxerr <= 1e-13);                     // actually exact for bilinear
}

TEST_CASE("divergence: constant, radial, rotation") {
  for (const Grid& g : {Grid::unit_square(16), Grid::disk({0.0, 0.0}, 1.0, 24)}) {
    const VectorField c =
        make_vector(g, [](const Eigen::Vector2d&) { return Eigen::Vector2d{1.5, -2.0}; });
    CHECK(divergence(c).values.cwiseAbs().maxCoeff() == 0.0);

    const VectorField radial = make_vector(g, [](const Eigen::Vector2d& x) { return x; });
    const ScalarField dr = divergence(radial);
    for (int u = 0; u < g.size(); ++u) CHECK(dr.values[u] == doctest::Approx(2.0).epsilon(1e-12));

    const VectorField rot =
        make_vector(g, [](const Eigen::Vector2d& x) { return Eigen::Vector2d{x[1], -x[0]}; });
    CHECK(divergence(rot).values.cwiseAbs().maxCoeff() <= 1e-13);
  }
}

TEST_CASE("curl2d: rotation field and the exact forward-difference value") {
  const Grid g = Grid::unit_square(16);
  const VectorField rot =
      make_vector(g, [](const Eigen::Vector2d& x) { return Eigen::Vector2d{x[1], -x[0]}; });
  const ScalarField c = curl2d(rot);
  for (int u = 0; u < g.size(); ++u) {
    if (g.full_forward_cell(u)) {
      CHECK(c.values[u] == doctest::Approx(-2.0).epsilon(1e-13));
    } else {
      CHECK(c.values[u] == 0.0);
    }
  }

  const VectorField q = make_vector(
      g, [](const Eigen::Vector2d& x) { return Eigen::Vector2d{0.0, x[0] * x[0]}; });
  const ScalarField cq = curl2d(q);
  for (int u = 0; u < g.size(); ++u) {
    if (!g.full_forward_cell(u)) continue;
    CHECK(cq.values[u] == doctest::Approx(2.0 * g.x(u)[0] + g.d1()).epsilon(1e-12));
  }
}

TEST_CASE("curl2d(gradient) vanishes identically, including on disk masks") {
  for (const Grid& g : {Grid::unit_square(16), Grid::unit_square(64),
                        Grid::disk({0.3, -0.1}, 1.2, 48)}) {
    const ScalarField s = make_scalar(g, wavy);
    const ScalarField c = curl2d(gradient(s));
    const double scale = std::max(1.0, s.values.cwiseAbs().maxCoeff() / (g.d1() * g.d2()));
    CHECK(c.values.cwiseAbs().maxCoeff() <= 1e-12 * scale);
  }
}

TEST_CASE("boundary_flux: tangent, radial, zero") {
  const Grid g = Grid::disk({0.0, 0.0}, 1.0, 32);
  const ScalarField one = make_scalar(g, [](const Eigen::Vector2d&) { return 1.0; });

  const VectorField tangent =
      make_vector(g, [](const Eigen::Vector2d& x) { return Eigen::Vector2d{x[1], -x[0]}; });
  for (double fl : boundary_flux(tangent, one)) CHECK(std::abs(fl) <= 1e-10);

  const VectorField radial =
      make_vector(g, [](const Eigen::Vector2d& x) { return Eigen::Vector2d(x.normalized()); });
  for (double fl : boundary_flux(radial, one)) CHECK(fl == doctest::Approx(1.0).epsilon(1e-12));

  for (double fl : boundary_flux(zeros_vector(g), one)) CHECK(fl == 0.0);
}

TEST_CASE("integrate: unit mass and disk second moment") {
  for (int n : {16, 32}) {
    const Grid g = Grid::unit_square(n);
    const double mass = integrate(make_scalar(g, [](const Eigen::Vector2d&) { return 1.0; }));
    CHECK(std::abs(mass - 1.0) <= 2.0 / n);
  }

  const Grid disk = Grid::disk({0.0, 0.0}, 1.0, 128);
  ScalarField f = make_scalar(disk, [](const Eigen::Vector2d&) { return 1.0; });
  f.values /= integrate(f);  // normalized uniform density
  CHECK(std::abs(integrate(f) - 1.0) <= 1e-8);
  const ScalarField r2f = make_scalar(disk, [](const Eigen::Vector2d& x) { return x.squaredNorm(); });
  CHECK(std::abs(integrate(multiply(r2f, f)) - 0.5) <= 1e-2);
}

TEST_CASE("inner_product: pointwise-orthogonal fields give exactly zero") {
  const Grid g = Grid::unit_square(12);
  const VectorField a =
      make_vector(g, [](const Eigen::Vector2d& x) { return Eigen::Vector2d{x[1], x[0]}; });
  const VectorField b =
      make_vector(g, [](const Eigen::Vector2d& x) { return Eigen::Vector2d{-x[0], x[1]}; });
  const ScalarField f = make_scalar(g, [](const Eigen::Vector2d& x) { return 1.0 + x[0]; });
  CHECK(inner_product(a, b, f) == 0.0);
}

TEST_CASE("adjointness of gradient and divergence improves with resolution") {
  // v vanishes on the continuum boundary, so the summation-by-parts defect is a
  // pure discretization boundary term and must shrink as the grid refines.
  auto defect = [](int n) {
    const Grid g = Grid::unit_square(n);
    const ScalarField s = make_scalar(g, wavy);
    const VectorField v = make_vector(g, [](const Eigen::Vector2d& x) {
      const double bump = x[0] * (1.0 - x[0]) * x[1] * (1.0 - x[1]);
      return Eigen::Vector2d{bump * (1.0 + x[1]), bump * std::sin(3.0 * x[0])};
    });
    const ScalarField one = make_scalar(g, [](const Eigen::Vector2d&) { return 1.0; });
    const double lhs = inner_product(gradient(s), v, one);
    const double rhs = integrate(multiply(s, divergence(v)));
    return std::abs(lhs + rhs);
  };
  const double e16 = defect(16), e32 = defect(32), e64 = defect(64);
  CHECK(e32 < e16);
  CHECK(e64 < e32);
  CHECK(e64 <= 0.05);
}

TEST_CASE("adjointness is exact for compactly supported fields") {
  const Grid g = Grid::unit_square(20);
  const ScalarField s = make_scalar(g, wavy);
  VectorField v = make_vector(g, [](const Eigen::Vector2d& x) {
    return Eigen::Vector2d{std::cos(x[0] + x[1]), x[0] - x[1] * x[1]};
  });
  for (int u = 0; u < g.size(); ++u) {
    const auto [i, j] = g.ij(u);
    if (i < 2 || j < 2 || i >= g.n1() - 2 || j >= g.n2() - 2) v.values.row(u).setZero();
  }
  const ScalarField one = make_scalar(g, [](const Eigen::Vector2d&) { return 1.0; });
  const double lhs = inner_product(gradient(s), v, one);
  const double rhs = integrate(multiply(s, divergence(v)));
  CHECK(std::abs(lhs + rhs) <= 1e-12);
}

TEST_CASE("grid rejects degenerate shapes") {
  CHECK_THROWS_AS(Grid::rectangle({0.0, 0.0}, {0.0, 1.0}, 8, 8), InvalidInputError);
  CHECK_THROWS_AS(Grid::rectangle({0.0, 0.0}, {1.0, 1.0}, 1, 8), InvalidInputError);
  CHECK_THROWS_AS(Grid::disk({0.0, 0.0}, -1.0, 8), InvalidInputError);
}

TEST_CASE("spd validation flags asymmetric and indefinite entries") {
  const Grid g = Grid::unit_square(4);
  MatrixField ok = constant_matrix(g, (Eigen::Matrix2d() << 2.0, 0.5, 0.5, 1.0).finished());
  CHECK_NOTHROW(validate_spd(ok, "test"));
  MatrixField asym = constant_matrix(g, (Eigen::Matrix2d() << 2.0, 0.5, -0.5, 1.0).finished());
  CHECK_THROWS_AS(validate_spd(asym, "test"), InvalidInputError);
  MatrixField indef = constant_matrix(g, (Eigen::Matrix2d() << 1.0, 2.0, 2.0, 1.0).finished());
  CHECK_THROWS_AS(validate_spd(indef, "test"), InvalidInputError);
}
