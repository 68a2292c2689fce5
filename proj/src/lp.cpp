#include "blockreach/lp.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "blockreach/error.hpp"

namespace blockreach::lp {
namespace {

constexpr double kPivotTol = 1e-12;
constexpr double kCostTol = 1e-11;
constexpr int kMaxPivots = 200000;

// Tableau in the form  T z = rhs, z >= 0, with an explicit objective row
// holding (c_B B^-1 A_j - c_j) so that a negative entry may enter.
class Tableau {
 public:
  Tableau(int rows, int cols)
      : rows_(rows), cols_(cols), t_(Eigen::MatrixXd::Zero(rows + 1, cols + 1)),
        basis_(rows, -1) {}

  double& at(int r, int c) { return t_(r, c); }
  double rhs(int r) const { return t_(r, cols_); }
  double& rhs(int r) { return t_(r, cols_); }
  int basis(int r) const { return basis_[r]; }
  void set_basis(int r, int var) { basis_[r] = var; }
  int rows() const { return rows_; }
  int cols() const { return cols_; }

  // Load the objective "maximize cost . z" given the current basis.
  void load_objective(const Eigen::VectorXd& cost) {
    Eigen::RowVectorXd obj = Eigen::RowVectorXd::Zero(cols_ + 1);
    obj.head(cols_) = -cost.transpose();
    for (int r = 0; r < rows_; ++r) {
      const double cb = cost(basis_[r]);
      if (cb != 0.0) obj += cb * t_.row(r);
    }
    t_.row(rows_) = obj;
  }

  double objective() const { return t_(rows_, cols_); }

  void pivot(int pr, int pc) {
    const double p = t_(pr, pc);
    t_.row(pr) /= p;
    for (int r = 0; r <= rows_; ++r) {
      if (r == pr) continue;
      const double f = t_(r, pc);
      if (f != 0.0) {
        t_.row(r) -= f * t_.row(pr);
        t_(r, pc) = 0.0;
      }
    }
    t_(pr, pc) = 1.0;
    basis_[pr] = pc;
  }

  enum class Outcome { Optimal, Unbounded };

  // Bland's rule: lowest-index improving column, lowest-index leaving
  // variable among ratio ties. Columns >= `col_limit` never enter.
  Outcome run(int col_limit, int& pivots) {
    for (;;) {
      int enter = -1;
      for (int c = 0; c < col_limit; ++c) {
        if (t_(rows_, c) < -kCostTol) {
          enter = c;
          break;
        }
      }
      if (enter < 0) return Outcome::Optimal;

      int leave = -1;
      double best = std::numeric_limits<double>::infinity();
      for (int r = 0; r < rows_; ++r) {
        const double a = t_(r, enter);
        if (a <= kPivotTol) continue;
        const double ratio = std::max(0.0, t_(r, cols_)) / a;
        if (ratio < best - 1e-14 ||
            (std::abs(ratio - best) <= 1e-14 && leave >= 0 &&
             basis_[r] < basis_[leave])) {
          best = ratio;
          leave = r;
        }
      }
      if (leave < 0) return Outcome::Unbounded;
      if (++pivots > kMaxPivots) {
        throw Error(ErrorKind::NumericalFailure, "simplex pivot budget exhausted");
      }
      pivot(leave, enter);
    }
  }

 private:
  int rows_;
  int cols_;
  Eigen::MatrixXd t_;
  std::vector<int> basis_;
};

struct Prepared {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  bool trivially_infeasible = false;
};

Prepared prepare(const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
  if (A.rows() != b.size()) {
    throw Error(ErrorKind::DimensionMismatch, "constraint matrix/rhs size mismatch");
  }
  Prepared out;
  std::vector<int> keep;
  std::vector<double> scale;
  for (int i = 0; i < A.rows(); ++i) {
    const double s = A.row(i).cwiseAbs().maxCoeff();
    if (!(s > 0.0)) {
      if (b(i) < -kFeasTol) out.trivially_infeasible = true;
      continue;
    }
    keep.push_back(i);
    scale.push_back(s);
  }
  out.A.resize(static_cast<Eigen::Index>(keep.size()), A.cols());
  out.b.resize(static_cast<Eigen::Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) {
    out.A.row(k) = A.row(keep[k]) / scale[k];
    out.b(k) = b(keep[k]) / scale[k];
  }
  return out;
}

// Columns: x+ (n) | x- (n) | slack (m) | artificial (na)
struct Layout {
  int n, m, na;
  int xp(int j) const { return j; }
  int xm(int j) const { return n + j; }
  int slack(int i) const { return 2 * n + i; }
  int art(int k) const { return 2 * n + m + k; }
  int real_cols() const { return 2 * n + m; }
  int cols() const { return 2 * n + m + na; }
};

struct PhaseOne {
  Tableau tab;
  Layout layout;
  bool feasible;
};

PhaseOne phase_one(const Prepared& p, int& pivots) {
  const int n = static_cast<int>(p.A.cols());
  const int m = static_cast<int>(p.A.rows());
  int na = 0;
  for (int i = 0; i < m; ++i) na += p.b(i) < 0.0 ? 1 : 0;
  Layout L{n, m, na};
  Tableau tab(m, L.cols());

  int next_art = 0;
  for (int i = 0; i < m; ++i) {
    const double sign = p.b(i) < 0.0 ? -1.0 : 1.0;
    for (int j = 0; j < n; ++j) {
      tab.at(i, L.xp(j)) = sign * p.A(i, j);
      tab.at(i, L.xm(j)) = -sign * p.A(i, j);
    }
    tab.at(i, L.slack(i)) = sign;
    tab.rhs(i) = sign * p.b(i);
    if (sign < 0.0) {
      const int a = L.art(next_art++);
      tab.at(i, a) = 1.0;
      tab.set_basis(i, a);
    } else {
      tab.set_basis(i, L.slack(i));
    }
  }

  if (na == 0) return {std::move(tab), L, true};

  Eigen::VectorXd cost = Eigen::VectorXd::Zero(L.cols());
  for (int k = 0; k < na; ++k) cost(L.art(k)) = -1.0;
  tab.load_objective(cost);
  tab.run(L.cols(), pivots);

  double scale_b = 1.0;
  for (int i = 0; i < m; ++i) scale_b = std::max(scale_b, std::abs(p.b(i)));
  const bool ok = tab.objective() >= -kFeasTol * scale_b;
  if (!ok) return {std::move(tab), L, false};

  // Drive remaining (zero-valued) artificials out of the basis.
  for (int r = 0; r < m; ++r) {
    if (tab.basis(r) < L.real_cols()) continue;
    for (int c = 0; c < L.real_cols(); ++c) {
      if (std::abs(tab.at(r, c)) > 1e-9) {
        tab.pivot(r, c);
        break;
      }
    }
  }
  return {std::move(tab), L, true};
}

}  // namespace

Result maximize(const Eigen::VectorXd& c, const Eigen::MatrixXd& A,
                const Eigen::VectorXd& b) {
  if (c.size() != A.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "objective/constraint dimension mismatch");
  }
  const Prepared p = prepare(A, b);
  Result res;
  if (p.trivially_infeasible) {
    res.status = Status::Infeasible;
    return res;
  }
  const int n = static_cast<int>(A.cols());
  int pivots = 0;
  PhaseOne ph = phase_one(p, pivots);
  if (!ph.feasible) {
    res.status = Status::Infeasible;
    return res;
  }
  const Layout& L = ph.layout;
  Eigen::VectorXd cost = Eigen::VectorXd::Zero(L.cols());
  for (int j = 0; j < n; ++j) {
    cost(L.xp(j)) = c(j);
    cost(L.xm(j)) = -c(j);
  }
  ph.tab.load_objective(cost);
  if (ph.tab.run(L.real_cols(), pivots) == Tableau::Outcome::Unbounded) {
    res.status = Status::Unbounded;
    return res;
  }
  res.status = Status::Optimal;
  res.x = Eigen::VectorXd::Zero(n);
  for (int r = 0; r < ph.tab.rows(); ++r) {
    const int v = ph.tab.basis(r);
    if (v < n) {
      res.x(v) += ph.tab.rhs(r);
    } else if (v < 2 * n) {
      res.x(v - n) -= ph.tab.rhs(r);
    }
  }
  res.value = c.dot(res.x);
  return res;
}

bool feasible(const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
  const Prepared p = prepare(A, b);
  if (p.trivially_infeasible) return false;
  int pivots = 0;
  return phase_one(p, pivots).feasible;
}

}  // namespace blockreach::lp
