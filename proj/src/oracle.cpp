#include "helmsort/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace helmsort {

namespace {

// Shortest-augmenting-path solution of the min-cost assignment with potentials
// (Jonker-Volgenant class). 1-indexed internally with a virtual column 0.
// On return: match_of_col[j] = row matched to column j, and the potentials
// (u, v) satisfy u[i] + v[j] <= cost(i,j), equality on matched pairs.
void lap_min(const Eigen::MatrixXd& cost, std::vector<int>& match_of_col,
             Eigen::VectorXd& u, Eigen::VectorXd& v) {
  const int n = static_cast<int>(cost.rows());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> pu(n + 1, 0.0), pv(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      int j1 = -1;
      double delta = inf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - pu[i0] - pv[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          pu[p[j]] += delta;
          pv[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  match_of_col.assign(n, 0);
  u.resize(n);
  v.resize(n);
  for (int j = 1; j <= n; ++j) match_of_col[j - 1] = p[j] - 1;
  for (int i = 1; i <= n; ++i) u[i - 1] = pu[i];
  for (int j = 1; j <= n; ++j) v[j - 1] = pv[j];
}

void require_square(const Eigen::MatrixXd& y) {
  if (y.rows() != y.cols() || y.rows() < 1)
    throw InvalidInputError("assignment: output matrix must be square and nonempty");
  if (!y.allFinite()) throw InvalidInputError("assignment: output matrix must be finite");
}

AssignmentResult solve_matrix(const Eigen::MatrixXd& y) {
  require_square(y);
  if (y.rows() > 2000) throw InvalidInputError("assignment: instance limit is m <= 2000");
  const int m = static_cast<int>(y.rows());

  std::vector<int> match_of_col;
  Eigen::VectorXd u, v;
  lap_min(-y, match_of_col, u, v);  // maximize Y == minimize -Y

  AssignmentResult out;
  out.assignment.assign(m, -1);
  for (int j = 0; j < m; ++j) out.assignment[match_of_col[j]] = j;
  double total = 0.0;
  for (int i = 0; i < m; ++i) total += y(i, out.assignment[i]);
  out.value = total;

  // Max-form prices: w_i + p_j >= Y(i,j), equality on matches.
  out.worker_price = -u;
  out.job_price = -v;
  const double shift = out.worker_price.mean();
  out.worker_price.array() -= shift;
  out.job_price.array() += shift;
  out.duality_gap = std::abs(out.worker_price.sum() + out.job_price.sum() - out.value);
  return out;
}

}  // namespace

AssignmentResult solve_assignment(const DiscreteInstance& inst) {
  return solve_matrix(inst.y);
}

RearrangementReport verify_rearrangement_equivalence(const DiscreteInstance& inst,
                                                     const Eigen::MatrixXd& y_perturbed) {
  require_square(inst.y);
  if (y_perturbed.rows() != inst.y.rows() || y_perturbed.cols() != inst.y.cols())
    throw InvalidInputError("rearrangement: perturbed outputs must match instance shape");
  const int m = static_cast<int>(inst.y.rows());

  const AssignmentResult base = solve_matrix(inst.y);
  const AssignmentResult direct = solve_matrix(y_perturbed);

  // Replacement problem: slot k is the job initially held by worker k; entry
  // (k, l) is the output of worker l taking over that slot.
  Eigen::MatrixXd yhat(m, m);
  for (int k = 0; k < m; ++k)
    for (int l = 0; l < m; ++l) yhat(k, l) = y_perturbed(l, base.assignment[k]);
  const AssignmentResult rearr = solve_matrix(yhat);

  RearrangementReport rep;
  rep.direct = direct.value;
  rep.via_rearrangement = rearr.value;
  rep.gap = std::abs(direct.value - rearr.value);
  rep.initial = base.assignment;
  rep.rearrangement = rearr.assignment;
  return rep;
}

GainCheckReport second_order_gain_check(
    const Eigen::Matrix<double, Eigen::Dynamic, 2>& sample,
    const Eigen::Matrix2d& sigma, const Eigen::Matrix2d& dsigma,
    const std::vector<double>& ts) {
  const int m = static_cast<int>(sample.rows());
  if (m < 2) throw InvalidInputError("gain check: need at least two sample points");

  GainCheckReport rep;
  for (const double t : ts) {
    const Eigen::Matrix2d st = sigma + t * dsigma;
    const Eigen::MatrixXd y = sample * st * sample.transpose();
    double frozen = 0.0;
    for (int i = 0; i < m; ++i) frozen += y(i, i);
    const AssignmentResult opt = solve_matrix(y);
    rep.t.push_back(t);
    rep.gain.push_back((opt.value - frozen) / m);
    rep.duality_gaps.push_back(opt.duality_gap);
  }

  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < rep.t.size(); ++k) {
    const double t2 = rep.t[k] * rep.t[k];
    num += rep.gain[k] * t2;
    den += t2 * t2;
  }
  rep.fitted_coefficient = den > 0.0 ? num / den : 0.0;
  return rep;
}

double enumerate_best_value(const Eigen::MatrixXd& y) {
  require_square(y);
  const int m = static_cast<int>(y.rows());
  if (m > 8) throw InvalidInputError("enumeration oracle: limit is m <= 8");
  std::vector<int> perm(m);
  std::iota(perm.begin(), perm.end(), 0);
  double best = -std::numeric_limits<double>::infinity();
  do {
    double total = 0.0;
    for (int i = 0; i < m; ++i) total += y(i, perm[i]);
    best = std::max(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

}  // namespace helmsort
