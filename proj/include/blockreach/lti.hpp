#pragma once

// Continuous dynamics x' = A x + B u, u in U: time discretization, block
// flowpipes (dense and sparse), and a reference simulator.

#include <functional>
#include <vector>

#include "blockreach/decomposition.hpp"
#include "blockreach/geometry.hpp"

namespace blockreach {

struct LTISystem {
  Matrix A;
  Matrix B;
  LazySet U = HPolyhedron(0);

  int dim() const { return static_cast<int>(A.rows()); }
  /// Throws DimensionMismatch when A, B and U do not fit together.
  void validate() const;
};

struct DiscretizedSystem {
  Matrix phi;      // e^{A delta}
  LazySet omega0;  // covers every state reachable within [0, delta]
  LazySet v;       // per-step input contribution
  double delta;
};

/// e^M by scaling and squaring of a truncated Taylor series.
Matrix mat_exp(const Matrix& m);

/// First-order bloating model. With ||.|| the infinity norm,
/// R0 = max ||x||, RU = max ||B u||, phi(z) = e^z - 1 - z:
///   alpha = phi(delta ||A||) R0,  beta = phi(delta ||A||) RU / ||A||,
///   Omega0 = CH(X0, Phi X0 + delta B U + (alpha + beta) Ball),
///   V = delta B U + beta Ball.
/// When U is a single point u, the input term is the exact point
/// v = int_0^delta e^{As} B u ds and only Omega0 is bloated, with alpha taken
/// from the augmented matrix [A Bu; 0 0] and max(R0, 1).
DiscretizedSystem discretize(const LTISystem& sys, const LazySet& x0, double delta);

/// Iterates the row strip of Phi^k belonging to a set of blocks:
/// strip(k+1) = strip(k) Phi.
class RowStripPowers {
 public:
  RowStripPowers(const Matrix& phi, const BlockStructure& s, const std::vector<int>& rows);

  int power() const { return power_; }
  /// (sum of row block sizes) x n
  const Matrix& strip() const { return strip_; }
  /// Row offset of rows[idx] inside the strip.
  int offset(int idx) const { return offsets_[idx]; }
  void advance();

 private:
  const Matrix& phi_;
  Matrix strip_;
  Matrix scratch_;
  std::vector<int> offsets_;
  int power_ = 0;
};

/// Strips for Phi^0 .. Phi^k.
std::vector<Matrix> block_row_powers(const Matrix& phi, const BlockStructure& s, int k,
                                     const std::vector<int>& rows);

struct FlowpipeStats {
  long blocks_computed = 0;
  long blocks_skipped = 0;
};

/// Step k covers the time interval [k delta, (k+1) delta].
struct Flowpipe {
  BlockStructure structure;
  TemplateKind kind = TemplateKind::Box;
  double delta = 0.0;
  std::vector<DecomposedSet> steps;
  FlowpipeStats stats;

  int size() const { return static_cast<int>(steps.size()); }
  Interval time_span(int k) const { return {k * delta, (k + 1) * delta}; }
};

/// Called after step k >= 1 has been produced; returning true discards the
/// step and ends the flowpipe.
using StopPredicate = std::function<bool(int, const DecomposedSet&)>;

Flowpipe flowpipe_sparse(const DiscretizedSystem& dsys, const BlockStructure& s, int steps,
                         const std::vector<int>& needed, TemplateKind kind = TemplateKind::Box,
                         const StopPredicate& stop = {});

Flowpipe flowpipe_dense(const DiscretizedSystem& dsys, const BlockStructure& s, int steps,
                        TemplateKind kind = TemplateKind::Box, const StopPredicate& stop = {});

/// Fills the NotComputed entries among `blocks` of step k with the same
/// recurrence as the sparse pass.
const DecomposedSet& complete_blocks(Flowpipe& fp, const DiscretizedSystem& dsys, int k,
                                     const std::vector<int>& blocks);

/// Batched form: one sweep of the Phi powers serves all requested steps.
/// `threads` > 1 splits the missing block rows across worker threads.
void complete_steps(Flowpipe& fp, const DiscretizedSystem& dsys, const std::vector<int>& steps,
                    const std::vector<int>& blocks, int threads = 1);

struct InputSignal {
  std::vector<double> switch_times;  // piece p starts at switch_times[p]; first is 0
  std::vector<Vector> values;

  static InputSignal constant(const Vector& u) { return {{0.0}, {u}}; }
  const Vector& at(double t) const;
};

struct TrajectorySample {
  std::vector<double> times;
  std::vector<Vector> states;
};

/// Classical RK4 with steps split at input switching times.
TrajectorySample simulate_trajectory(const LTISystem& sys, const Vector& x0,
                                     const InputSignal& u, double horizon, double dt);

}  // namespace blockreach
