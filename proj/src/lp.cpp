#include "mvh/lp.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace mvh::detail {

namespace {

constexpr double kPivotTol = 1e-11;
constexpr double kPhase1Tol = 1e-9;

// Dense two-phase tableau simplex with Bland's rule. Problems here are tiny
// (children + assets + 1 rows), so clarity beats sparsity.
class Tableau {
 public:
  Tableau(int rows, int cols) : rows_(rows), cols_(cols), t_((rows + 1) * (cols + 1), 0.0),
                                basis_(rows, -1) {}

  double& at(int r, int c) { return t_[r * (cols_ + 1) + c]; }
  double& rhs(int r) { return t_[r * (cols_ + 1) + cols_]; }
  double& cost(int c) { return t_[rows_ * (cols_ + 1) + c]; }
  double& objective() { return t_[rows_ * (cols_ + 1) + cols_]; }
  int& basis(int r) { return basis_[r]; }

  void pivot(int pr, int pc) {
    const double piv = at(pr, pc);
    for (int c = 0; c <= cols_; ++c) t_[pr * (cols_ + 1) + c] /= piv;
    for (int r = 0; r <= rows_; ++r) {
      if (r == pr) continue;
      const double f = t_[r * (cols_ + 1) + pc];
      if (f == 0.0) continue;
      for (int c = 0; c <= cols_; ++c) t_[r * (cols_ + 1) + c] -= f * t_[pr * (cols_ + 1) + c];
    }
    basis_[pr] = pc;
  }

  // Minimizes the current cost row; `allowed(c)` guards entering columns.
  template <typename Pred>
  void run(const Pred& allowed) {
    for (int iter = 0; iter < 10000; ++iter) {
      int enter = -1;
      for (int c = 0; c < cols_; ++c) {  // Bland: first improving column
        if (!allowed(c)) continue;
        if (cost(c) < -kPivotTol) {
          enter = c;
          break;
        }
      }
      if (enter < 0) return;
      int leave = -1;
      double best = 0.0;
      for (int r = 0; r < rows_; ++r) {
        const double a = at(r, enter);
        if (a <= kPivotTol) continue;
        const double ratio = rhs(r) / a;
        if (leave < 0 || ratio < best - kPivotTol ||
            (std::abs(ratio - best) <= kPivotTol && basis_[r] < basis_[leave])) {
          leave = r;
          best = ratio;
        }
      }
      if (leave < 0) throw std::runtime_error("feasibility LP unbounded (malformed family)");
      pivot(leave, enter);
    }
    throw std::runtime_error("feasibility LP did not converge");
  }

  int rows_, cols_;
  std::vector<double> t_;
  std::vector<int> basis_;
};

}  // namespace

MaxMinResult max_min_weights(const Eigen::MatrixXd& increments) {
  const int k = static_cast<int>(increments.rows());
  const int d = static_cast<int>(increments.cols());
  if (k < 1) throw std::invalid_argument("family needs at least one child");

  // Columns: q_1..q_k, eps, s_1..s_k, then one artificial per coupling row.
  const int n_real = 2 * k + 1;
  const int n = n_real + d + 1;
  const int rows = 1 + d + k;
  Tableau t(rows, n);

  // Row 0: sum q = 1.
  for (int c = 0; c < k; ++c) t.at(0, c) = 1.0;
  t.rhs(0) = 1.0;
  t.at(0, n_real) = 1.0;
  t.basis(0) = n_real;
  // Rows 1..d: sum_c q_c * increment(c, i) = 0, scaled per asset.
  for (int i = 0; i < d; ++i) {
    const double scale = std::max(increments.col(i).cwiseAbs().maxCoeff(), 1.0);
    for (int c = 0; c < k; ++c) t.at(1 + i, c) = increments(c, i) / scale;
    t.at(1 + i, n_real + 1 + i) = 1.0;
    t.basis(1 + i) = n_real + 1 + i;
  }
  // Rows d+1 .. d+k: -q_c + eps + s_c = 0 with s_c basic.
  for (int c = 0; c < k; ++c) {
    const int r = 1 + d + c;
    t.at(r, c) = -1.0;
    t.at(r, k) = 1.0;
    t.at(r, k + 1 + c) = 1.0;
    t.basis(r) = k + 1 + c;
  }

  // Phase 1: minimize the artificials (their cost rows are eliminated from
  // the reduced-cost row right away since they start basic).
  for (int c = 0; c < n; ++c) {
    double z = (c >= n_real) ? 1.0 : 0.0;
    for (int r = 0; r <= d; ++r) z -= t.at(r, c);
    t.cost(c) = z;
  }
  t.objective() = -(t.rhs(0));
  for (int i = 0; i < d; ++i) t.objective() -= t.rhs(1 + i);
  t.run([&](int) { return true; });

  MaxMinResult res;
  if (-t.objective() > kPhase1Tol) return res;  // infeasible: no nonnegative weights

  // Phase 2: maximize eps (minimize -eps); artificials may not re-enter.
  // Basic columns are unit vectors, so restoring zero reduced cost on the
  // basis only needs an adjustment when eps itself is basic.
  for (int c = 0; c < n; ++c) t.cost(c) = 0.0;
  t.cost(k) = -1.0;
  t.objective() = 0.0;
  for (int r = 0; r < rows; ++r) {
    if (t.basis(r) == k) {
      for (int c = 0; c < n; ++c) t.cost(c) += t.at(r, c);
      t.objective() += t.rhs(r);
    }
  }
  t.run([&](int c) { return c < n_real; });

  res.feasible = true;
  res.weights = Eigen::VectorXd::Zero(k);
  double eps = 0.0;
  for (int r = 0; r < rows; ++r) {
    if (t.basis(r) < k) res.weights[t.basis(r)] = t.rhs(r);
    if (t.basis(r) == k) eps = t.rhs(r);
  }
  res.margin = eps;
  return res;
}

}  // namespace mvh::detail
