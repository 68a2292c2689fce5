#pragma once

#include <Eigen/Dense>

namespace blockreach::lp {

/// Feasibility tolerance applied to row-normalized constraints.
inline constexpr double kFeasTol = 1e-9;

enum class Status { Optimal, Infeasible, Unbounded };

struct Result {
  Status status = Status::Infeasible;
  double value = 0.0;
  Eigen::VectorXd x;  // maximizer, valid only when status == Optimal
};

// maximize <c, x>  subject to  A x <= b,  x free.
//
// Dense two-phase primal simplex with Bland's rule. Rows are scaled to unit
// infinity-norm before solving; an all-zero row is feasible iff b >= -tol.
// Throws Error(NumericalFailure) if the pivot budget runs out.
Result maximize(const Eigen::VectorXd& c, const Eigen::MatrixXd& A,
                const Eigen::VectorXd& b);

/// Phase-one only.
bool feasible(const Eigen::MatrixXd& A, const Eigen::VectorXd& b);

}  // namespace blockreach::lp
