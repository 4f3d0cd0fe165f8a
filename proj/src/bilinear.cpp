#include "helmsort/bilinear.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace helmsort {

void validate_technology(const BilinearTech& tech) {
  const auto& s = tech.sigma;
  if (s.rows() != s.cols() || s.rows() < 1)
    throw InvalidInputError("technology: sigma must be square");
  if (tech.dsigma.rows() != s.rows() || tech.dsigma.cols() != s.cols())
    throw InvalidInputError("technology: dsigma shape must match sigma");
  const double scale = std::max(1.0, s.cwiseAbs().maxCoeff());
  if ((s - s.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw InvalidInputError("technology: sigma is not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (s + s.transpose()));
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (!(lo > 1e-12 * std::max(hi, 0.0)))
    throw InvalidInputError("technology: sigma is not positive definite");
}

Eigen::MatrixXd solve_sylvester(const BilinearTech& tech) {
  validate_technology(tech);
  const Eigen::MatrixXd sym = 0.5 * (tech.sigma + tech.sigma.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  const Eigen::MatrixXd& u = es.eigenvectors();
  const Eigen::VectorXd& lam = es.eigenvalues();
  const Eigen::MatrixXd rhs =
      u.transpose() * (tech.dsigma - tech.dsigma.transpose()) * u;
  Eigen::MatrixXd rp(lam.size(), lam.size());
  for (Eigen::Index i = 0; i < lam.size(); ++i)
    for (Eigen::Index j = 0; j < lam.size(); ++j)
      rp(i, j) = rhs(i, j) / (lam[i] + lam[j]);
  return u * rp * u.transpose();
}

Eigen::MatrixXd earnings_slope(const BilinearTech& tech, const Eigen::MatrixXd& R) {
  if (R.rows() != tech.sigma.rows() || R.cols() != tech.sigma.cols())
    throw InvalidInputError("earnings_slope: generator shape must match sigma");
  const double scale = std::max(1.0, R.cwiseAbs().maxCoeff());
  if ((R + R.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw InvalidInputError("earnings_slope: generator is not antisymmetric");
  return tech.dsigma - tech.sigma * R;
}

double rotation_angle_2d(double a, double b, double c, double d,
                         double /*adot*/, double bdot, double cdot, double /*ddot*/) {
  if (!(a + d > 0.0)) throw InvalidInputError("rotation_angle_2d: trace a + d must be positive");
  if (std::abs(b - c) > 1e-10 * std::max(1.0, std::max(std::abs(b), std::abs(c))))
    throw InvalidInputError("rotation_angle_2d: sigma must be symmetric (b = c)");
  return (cdot - bdot) / (a + d);
}

Eigen::Matrix2d tabulate_earnings_slope_2d(const BilinearTech& tech) {
  validate_technology(tech);
  if (tech.sigma.rows() != 2)
    throw InvalidInputError("tabulate_earnings_slope_2d: requires d = 2");
  const double a = tech.sigma(0, 0), b = tech.sigma(0, 1);
  const double c = tech.sigma(1, 0), d = tech.sigma(1, 1);
  const double adot = tech.dsigma(0, 0), bdot = tech.dsigma(0, 1);
  const double cdot = tech.dsigma(1, 0), ddot = tech.dsigma(1, 1);
  const double theta = rotation_angle_2d(a, b, c, d, adot, bdot, cdot, ddot);
  Eigen::Matrix2d w;
  w(0, 0) = adot - b * theta;
  w(0, 1) = (a * cdot + d * bdot) / (a + d);
  w(1, 0) = w(0, 1);
  w(1, 1) = ddot + c * theta;
  return w;
}

BilinearDecomposition decompose_bilinear(const BilinearTech& tech) {
  BilinearDecomposition out;
  out.R = solve_sylvester(tech);
  out.W = earnings_slope(tech, out.R);
  if (tech.sigma.rows() == 2) {
    out.theta = rotation_angle_2d(tech.sigma(0, 0), tech.sigma(0, 1), tech.sigma(1, 0),
                                  tech.sigma(1, 1), tech.dsigma(0, 0), tech.dsigma(0, 1),
                                  tech.dsigma(1, 0), tech.dsigma(1, 1));
  }
  return out;
}

}  // namespace helmsort
