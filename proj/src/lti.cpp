#include "blockreach/lti.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <thread>

#include "blockreach/error.hpp"

namespace blockreach {

void LTISystem::validate() const {
  if (A.rows() != A.cols()) throw Error(ErrorKind::DimensionMismatch, "A must be square");
  if (B.rows() != A.rows()) throw Error(ErrorKind::DimensionMismatch, "B must have as many rows as A");
  if (B.cols() != U.dim()) throw Error(ErrorKind::DimensionMismatch, "B columns must match the input set dimension");
}

// ---------------------------------------------------------------------------
// Matrix exponential

Matrix mat_exp(const Matrix& m) {
  if (m.rows() != m.cols()) throw Error(ErrorKind::DimensionMismatch, "mat_exp needs a square matrix");
  if (!m.allFinite()) throw Error(ErrorKind::NumericalFailure, "mat_exp of a non-finite matrix");
  const int n = static_cast<int>(m.rows());
  if (n == 0) return m;

  // Scale so that ||M / 2^s|| <= 1/4; 20 Taylor terms then leave a
  // truncation error below 1e-20 relative to the identity term.
  const double norm = m.cwiseAbs().rowwise().sum().maxCoeff();
  int squarings = 0;
  if (norm > 0.25) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.25)));
  const Matrix scaled = m / std::ldexp(1.0, squarings);

  Matrix result = Matrix::Identity(n, n);
  Matrix term = Matrix::Identity(n, n);
  for (int k = 1; k <= 20; ++k) {
    term = (term * scaled) / static_cast<double>(k);
    result += term;
    if (term.cwiseAbs().maxCoeff() == 0.0) break;
  }
  for (int i = 0; i < squarings; ++i) result = result * result;
  if (!result.allFinite()) throw Error(ErrorKind::NumericalFailure, "mat_exp overflow");
  return result;
}

// ---------------------------------------------------------------------------
// Discretization

namespace {

double inf_norm(const Matrix& a) {
  return a.size() == 0 ? 0.0 : a.cwiseAbs().rowwise().sum().maxCoeff();
}

// max over x in X of ||x||_inf
double max_inf_norm(const LazySet& x) {
  const Hyperrectangle box = box_approximation(x);
  return box.dim() == 0 ? 0.0 : (box.center().cwiseAbs() + box.radius()).maxCoeff();
}

}  // namespace

DiscretizedSystem discretize(const LTISystem& sys, const LazySet& x0, double delta) {
  sys.validate();
  if (!(delta > 0.0)) throw Error(ErrorKind::ConfigError, "time step must be positive");
  const int n = sys.dim();
  if (x0.dim() != n) throw Error(ErrorKind::DimensionMismatch, "initial set does not match system dimension");

  // A constant input u turns the dynamics affine, x' = A x + b. Its effect
  // over one step is the exact point v = int_0^delta e^{As} b ds, read off
  // the exponential of the augmented matrix [A b; 0 0]; only Omega0 is
  // bloated, using the augmented norm.
  if (const Hyperrectangle* ubox = sys.U.as_box(); ubox && sys.B.size() > 0 && ubox->radius().isZero(0.0)) {
    const Vector b = sys.B * ubox->center();
    if (!b.isZero(0.0)) {
      Matrix aug = Matrix::Zero(n + 1, n + 1);
      aug.topLeftCorner(n, n) = sys.A;
      aug.topRightCorner(n, 1) = b;
      const Matrix e = mat_exp(aug * delta);
      const Matrix phi = e.topLeftCorner(n, n);
      const Vector v = e.topRightCorner(n, 1);
      const double za = delta * inf_norm(aug);
      const double alpha = (std::expm1(za) - za) * std::max(1.0, max_inf_norm(x0));
      std::vector<LazySet> far_terms{LazySet::affine_map(phi, v, x0)};
      if (alpha > 0.0) far_terms.push_back(LazySet::ball_inf(n, alpha));
      LazySet omega0 = LazySet::convex_hull({x0, LazySet::minkowski_sum(far_terms)});
      return {phi, std::move(omega0), LazySet::singleton(v), delta};
    }
  }

  const Matrix phi = mat_exp(sys.A * delta);
  const double norm_a = inf_norm(sys.A);
  const double z = delta * norm_a;
  const double phi_z = std::expm1(z) - z;

  const bool has_input = sys.B.size() > 0 && !sys.B.isZero(0.0);
  const LazySet bu = has_input ? LazySet::linear_map(sys.B, sys.U) : LazySet::singleton(Vector::Zero(n));
  const double r0 = max_inf_norm(x0);
  const double ru = has_input ? max_inf_norm(bu) : 0.0;
  const double alpha = phi_z * r0;
  const double beta = norm_a > 0.0 ? phi_z * ru / norm_a : 0.0;

  std::vector<LazySet> v_terms;
  if (has_input) v_terms.push_back(LazySet::linear_map(delta * sys.B, sys.U));
  if (beta > 0.0) v_terms.push_back(LazySet::ball_inf(n, beta));
  if (v_terms.empty()) v_terms.push_back(LazySet::singleton(Vector::Zero(n)));
  LazySet v = LazySet::minkowski_sum(v_terms);

  std::vector<LazySet> far_terms{LazySet::linear_map(phi, x0)};
  if (has_input) far_terms.push_back(LazySet::linear_map(delta * sys.B, sys.U));
  if (alpha + beta > 0.0) far_terms.push_back(LazySet::ball_inf(n, alpha + beta));
  LazySet omega0 = LazySet::convex_hull({x0, LazySet::minkowski_sum(far_terms)});

  return {phi, std::move(omega0), std::move(v), delta};
}

// ---------------------------------------------------------------------------
// Row strips of Phi^k

RowStripPowers::RowStripPowers(const Matrix& phi, const BlockStructure& s, const std::vector<int>& rows)
    : phi_(phi) {
  int total = 0;
  for (int j : rows) {
    offsets_.push_back(total);
    total += s.block(j).size;
  }
  strip_ = Matrix::Zero(total, phi.cols());
  for (std::size_t idx = 0; idx < rows.size(); ++idx) {
    const Block& b = s.block(rows[idx]);
    for (int r = 0; r < b.size; ++r) strip_(offsets_[idx] + r, b.start + r) = 1.0;
  }
}

void RowStripPowers::advance() {
  scratch_.noalias() = strip_ * phi_;
  strip_.swap(scratch_);
  ++power_;
  if (!strip_.allFinite()) throw Error(ErrorKind::NumericalFailure, "matrix power overflow");
}

std::vector<Matrix> block_row_powers(const Matrix& phi, const BlockStructure& s, int k,
                                     const std::vector<int>& rows) {
  if (k < 0) throw Error(ErrorKind::ConfigError, "negative power");
  RowStripPowers it(phi, s, rows);
  std::vector<Matrix> out{it.strip()};
  for (int j = 0; j < k; ++j) {
    it.advance();
    out.push_back(it.strip());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Flowpipes

namespace {

// Evaluates one block row of the decomposed recurrence
//   X_i(k) = sum_j (Phi^k)_ij X_j(0)  +  sum_{l<k} [(Phi^l)_i1 ... (Phi^l)_ib] V
// through support functions along the block's template directions, always
// starting from X(0) so no re-decomposition error accumulates.
class BlockRowEvaluator {
 public:
  BlockRowEvaluator(const DiscretizedSystem& dsys, const LazySet& x0hat, const BlockStructure& s,
                    int block, TemplateKind kind)
      : dsys_(dsys), x0hat_(x0hat), x0box_(x0hat.as_box()), kind_(kind),
        size_(s.block(block).size), strips_(dsys.phi, s, {block}) {
    const auto dirs = block_template(size_, kind);
    dirs_.resize(size_, static_cast<Eigen::Index>(dirs.size()));
    for (std::size_t c = 0; c < dirs.size(); ++c) dirs_.col(static_cast<Eigen::Index>(c)) = dirs[c];
    input_acc_ = Vector::Zero(dirs_.cols());
  }

  int power() const { return strips_.power(); }

  // Produces the block at the current power if `emit`, then moves to the
  // next power.
  std::optional<BlockSet> step(bool emit, bool advance) {
    lifted_.noalias() = strips_.strip().transpose() * dirs_;
    std::optional<BlockSet> out;
    if (emit) {
      Vector values(dirs_.cols());
      for (int c = 0; c < dirs_.cols(); ++c) values(c) = state_support(lifted_.col(c)) + input_acc_(c);
      out = make_set(values);
    }
    if (advance) {
      for (int c = 0; c < dirs_.cols(); ++c) input_acc_(c) += dsys_.v.support(lifted_.col(c));
      strips_.advance();
    }
    return out;
  }

 private:
  double state_support(const Vector& y) const {
    if (x0box_ != nullptr) return y.dot(x0box_->center()) + y.cwiseAbs().dot(x0box_->radius());
    return x0hat_.support(y);
  }

  BlockSet make_set(const Vector& values) const {
    if (kind_ == TemplateKind::Octagon && size_ == 2) {
      std::vector<HalfSpace> cs;
      for (int c = 0; c < dirs_.cols(); ++c) cs.push_back({dirs_.col(c), values(c)});
      return HPolyhedron(size_, std::move(cs));
    }
    // box template: columns are (+e_0, -e_0, +e_1, -e_1, ...)
    Vector lo(size_), hi(size_);
    for (int i = 0; i < size_; ++i) {
      hi(i) = values(2 * i);
      lo(i) = -values(2 * i + 1);
      if (lo(i) > hi(i)) lo(i) = hi(i) = 0.5 * (lo(i) + hi(i));
    }
    return Hyperrectangle::from_bounds(lo, hi);
  }

  const DiscretizedSystem& dsys_;
  const LazySet& x0hat_;
  const Hyperrectangle* x0box_;
  TemplateKind kind_;
  int size_;
  RowStripPowers strips_;
  Matrix dirs_;
  Matrix lifted_;
  Vector input_acc_;
};

void check_blocks(const BlockStructure& s, const std::vector<int>& blocks) {
  for (int j : blocks) {
    if (j < 0 || j >= s.count()) throw Error(ErrorKind::ConfigError, "block index out of range: " + std::to_string(j));
  }
}

}  // namespace

Flowpipe flowpipe_sparse(const DiscretizedSystem& dsys, const BlockStructure& s, int steps,
                         const std::vector<int>& needed, TemplateKind kind, const StopPredicate& stop) {
  if (steps < 0) throw Error(ErrorKind::ConfigError, "negative step count");
  check_blocks(s, needed);
  Flowpipe fp{s, kind, dsys.delta, {}, {}};
  fp.steps.reserve(static_cast<std::size_t>(steps) + 1);
  fp.steps.push_back(decompose(dsys.omega0, s, kind));
  fp.stats.blocks_computed += s.count();
  if (steps == 0 || needed.empty()) return fp;

  std::vector<int> rows = needed;
  std::sort(rows.begin(), rows.end());
  rows.erase(std::unique(rows.begin(), rows.end()), rows.end());

  const LazySet x0hat = fp.steps.front().to_lazy();
  std::vector<BlockRowEvaluator> evals;
  evals.reserve(rows.size());
  for (int j : rows) evals.emplace_back(dsys, x0hat, s, j, kind);
  for (auto& e : evals) e.step(false, true);

  for (int k = 1; k <= steps; ++k) {
    DecomposedSet xk = DecomposedSet::not_computed(s);
    for (std::size_t idx = 0; idx < rows.size(); ++idx) {
      xk.set_block(rows[idx], *evals[idx].step(true, k < steps));
    }
    if (stop && stop(k, xk)) break;
    fp.stats.blocks_computed += static_cast<long>(rows.size());
    fp.stats.blocks_skipped += s.count() - static_cast<long>(rows.size());
    fp.steps.push_back(std::move(xk));
  }
  return fp;
}

Flowpipe flowpipe_dense(const DiscretizedSystem& dsys, const BlockStructure& s, int steps,
                        TemplateKind kind, const StopPredicate& stop) {
  return flowpipe_sparse(dsys, s, steps, s.all_blocks(), kind, stop);
}

void complete_steps(Flowpipe& fp, const DiscretizedSystem& dsys, const std::vector<int>& steps,
                    const std::vector<int>& blocks, int threads) {
  check_blocks(fp.structure, blocks);
  std::vector<int> ks = steps;
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  for (int k : ks) {
    if (k < 0 || k >= fp.size()) throw Error(ErrorKind::ConfigError, "step index out of range: " + std::to_string(k));
  }
  std::vector<int> missing;
  for (int j : blocks) {
    const bool any = std::any_of(ks.begin(), ks.end(), [&](int k) { return !fp.steps[k].is_computed(j); });
    if (any && std::find(missing.begin(), missing.end(), j) == missing.end()) missing.push_back(j);
  }
  if (missing.empty()) return;

  const LazySet x0hat = fp.steps.front().to_lazy();
  const int last = ks.back();

  auto work = [&](std::size_t begin, std::size_t end, long& filled) {
    for (std::size_t m = begin; m < end; ++m) {
      const int j = missing[m];
      BlockRowEvaluator eval(dsys, x0hat, fp.structure, j, fp.kind);
      std::size_t next = 0;
      for (int k = 0; k <= last; ++k) {
        const bool emit = next < ks.size() && ks[next] == k;
        auto set = eval.step(emit && !fp.steps[k].is_computed(j), k < last);
        if (emit) {
          if (set) {
            fp.steps[k].set_block(j, std::move(*set));
            ++filled;
          }
          ++next;
        }
      }
    }
  };

  long filled = 0;
  const int nthreads = std::max(1, std::min<int>(threads, static_cast<int>(missing.size())));
  if (nthreads == 1) {
    work(0, missing.size(), filled);
  } else {
    std::vector<long> counts(nthreads, 0);
    std::vector<std::thread> pool;
    const std::size_t chunk = (missing.size() + nthreads - 1) / nthreads;
    for (int t = 0; t < nthreads; ++t) {
      const std::size_t b = std::min(missing.size(), t * chunk);
      const std::size_t e = std::min(missing.size(), b + chunk);
      pool.emplace_back([&, t, b, e] { work(b, e, counts[t]); });
    }
    for (auto& th : pool) th.join();
    for (long c : counts) filled += c;
  }
  fp.stats.blocks_computed += filled;
  fp.stats.blocks_skipped -= filled;
}

const DecomposedSet& complete_blocks(Flowpipe& fp, const DiscretizedSystem& dsys, int k,
                                     const std::vector<int>& blocks) {
  complete_steps(fp, dsys, {k}, blocks);
  return fp.steps[k];
}

// ---------------------------------------------------------------------------
// Simulation

const Vector& InputSignal::at(double t) const {
  std::size_t p = 0;
  while (p + 1 < switch_times.size() && switch_times[p + 1] <= t) ++p;
  return values[p];
}

TrajectorySample simulate_trajectory(const LTISystem& sys, const Vector& x0, const InputSignal& u,
                                     double horizon, double dt) {
  if (!(dt > 0.0)) throw Error(ErrorKind::ConfigError, "simulation step must be positive");
  if (u.values.empty() || u.values.size() != u.switch_times.size()) {
    throw Error(ErrorKind::ConfigError, "malformed input signal");
  }
  TrajectorySample out;
  out.times.push_back(0.0);
  out.states.push_back(x0);
  Vector x = x0;
  double t = 0.0;
  std::size_t piece = 0;
  while (t < horizon) {
    while (piece + 1 < u.switch_times.size() && u.switch_times[piece + 1] <= t) ++piece;
    double limit = horizon;
    if (piece + 1 < u.switch_times.size()) limit = std::min(limit, u.switch_times[piece + 1]);
    const double h = std::min(dt, limit - t);
    const Vector bu = sys.B * u.values[piece];
    const auto f = [&](const Vector& y) -> Vector { return sys.A * y + bu; };
    const Vector k1 = f(x);
    const Vector k2 = f(x + 0.5 * h * k1);
    const Vector k3 = f(x + 0.5 * h * k2);
    const Vector k4 = f(x + h * k3);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    t = (limit - t - h <= 1e-15 * std::max(1.0, limit)) ? limit : t + h;
    out.times.push_back(t);
    out.states.push_back(x);
  }
  return out;
}

}  // namespace blockreach
