#pragma once

#include <Eigen/Dense>
#include <optional>

#include "helmsort/errors.hpp"

namespace helmsort {

// Bilinear technology: output x~' Sigma x, with change rates Sigma-dot.
// Sigma must be symmetric positive definite (twist condition).
struct BilinearTech {
  Eigen::MatrixXd sigma;
  Eigen::MatrixXd dsigma;
};

struct BilinearDecomposition {
  Eigen::MatrixXd R;            // reallocation generator, antisymmetric
  Eigen::MatrixXd W;            // earnings-slope change, symmetric
  std::optional<double> theta;  // rotation angle, set when d = 2
};

// Throws InvalidInputError unless sigma is square, symmetric within 1e-10,
// strictly positive definite (min eigenvalue > 1e-12 * max), and dsigma has
// matching shape.
void validate_technology(const BilinearTech& tech);

// Unique solution of Sigma R + R Sigma = dSigma - dSigma', computed in Sigma's
// orthonormal eigenbasis: R'_ij = (dSigma - dSigma')'_ij / (lambda_i + lambda_j).
// The result is antisymmetric.
Eigen::MatrixXd solve_sylvester(const BilinearTech& tech);

// W = dSigma - Sigma R; symmetric whenever R solves the Sylvester equation.
Eigen::MatrixXd earnings_slope(const BilinearTech& tech, const Eigen::MatrixXd& R);

// theta = (gdot - bdot) / (a + d) for Sigma = [[a,b],[c,d]] with b = c.
// The induced generator is R = theta * [[0,-1],[1,0]], i.e. rdot(x) = theta*(-x2, x1).
double rotation_angle_2d(double a, double b, double c, double d,
                         double adot, double bdot, double cdot, double ddot);

// The 2-D closed form of W entry by entry:
//   W11 = adot - b*theta, W12 = W21 = (a*gdot + d*bdot)/(a+d), W22 = ddot + c*theta.
// The W22 sign is forced by the reconstruction identity dSigma = W + Sigma R,
// since (Sigma R)_22 = -theta*c. Agrees with earnings_slope to 1e-12.
Eigen::Matrix2d tabulate_earnings_slope_2d(const BilinearTech& tech);

// Convenience bundle: R, W, and (for d = 2) theta.
BilinearDecomposition decompose_bilinear(const BilinearTech& tech);

}  // namespace helmsort
