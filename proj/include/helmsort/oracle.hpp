#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "helmsort/errors.hpp"

namespace helmsort {

// Desk-scale discrete assignment instance: m workers, m jobs, output matrix
// Y(i,j) = output of worker i in job j.
struct DiscreteInstance {
  Eigen::Matrix<double, Eigen::Dynamic, 2> workers;
  Eigen::Matrix<double, Eigen::Dynamic, 2> jobs;
  Eigen::MatrixXd y;
  std::uint64_t seed = 0;
};

struct AssignmentResult {
  std::vector<int> assignment;   // worker i -> job assignment[i]
  double value = 0.0;            // total output of the matching
  Eigen::VectorXd worker_price;  // w_i, shifted to mean zero
  Eigen::VectorXd job_price;     // v_j, shifted oppositely
  double duality_gap = 0.0;      // |sum of prices - value|
};

struct RearrangementReport {
  double direct = 0.0;             // optimal value under the perturbed outputs
  double via_rearrangement = 0.0;  // optimal value through the replacement problem
  double gap = 0.0;                // |direct - via_rearrangement|
  std::vector<int> initial;        // optimal matching under the base outputs
  std::vector<int> rearrangement;  // slot k taken over by worker rearrangement[k]
};

struct GainCheckReport {
  std::vector<double> t;
  std::vector<double> gain;          // per-worker reoptimization gain G(t)
  double fitted_coefficient = 0.0;   // least-squares c in G(t) ~ c t^2
  std::vector<double> duality_gaps;  // one per assignment solve
};

// Exact maximum-weight perfect matching with dual prices (shortest augmenting
// path / Jonker-Volgenant class, O(m^3)). Duals satisfy w_i + v_j >= Y(i,j)
// with equality on matched pairs; worker prices are mean-zero-shifted.
// Requires a square instance with m <= 2000.
AssignmentResult solve_assignment(const DiscreteInstance& inst);

// Solves the perturbed instance directly, and again through the replacement
// problem over the initial matching's job slots (slot k carries job
// initial[k]; Yhat(k,l) = y_perturbed(l, initial[k])). Both routes must give
// the same aggregate output.
RearrangementReport verify_rearrangement_equivalence(const DiscreteInstance& inst,
                                                     const Eigen::MatrixXd& y_perturbed);

// Bilinear second-order gain probe: jobs equal the worker sample, so the
// identity matching is optimal at t = 0 for any SPD sigma. For each t, the
// per-worker gain G(t) = (optimal - identity-frozen output)/m at technology
// sigma + t*dsigma; c is the least-squares fit of G(t) = c t^2 through the
// origin. Under a unit-mass density the fitted c estimates the quadratic
// output-gain functional.
GainCheckReport second_order_gain_check(
    const Eigen::Matrix<double, Eigen::Dynamic, 2>& sample,
    const Eigen::Matrix2d& sigma, const Eigen::Matrix2d& dsigma,
    const std::vector<double>& ts);

// Exhaustive-permutation optimum, m <= 8; the testing oracle for the solver.
double enumerate_best_value(const Eigen::MatrixXd& y);

}  // namespace helmsort
