#include "blockreach/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "blockreach/error.hpp"
#include "blockreach/lp.hpp"

namespace blockreach {

// ---------------------------------------------------------------------------
// Hyperrectangle

Hyperrectangle::Hyperrectangle(Vector center, Vector radius)
    : center_(std::move(center)), radius_(std::move(radius)) {
  if (center_.size() != radius_.size()) {
    throw Error(ErrorKind::DimensionMismatch, "box center/radius size mismatch");
  }
  for (int i = 0; i < radius_.size(); ++i) {
    if (!(radius_(i) >= 0.0) || !std::isfinite(center_(i)) || !std::isfinite(radius_(i))) {
      throw Error(ErrorKind::NumericalFailure,
                  "box radius must be finite and nonnegative (coordinate " +
                      std::to_string(i) + ")");
    }
  }
}

Hyperrectangle Hyperrectangle::from_bounds(const Vector& lo, const Vector& hi) {
  if (lo.size() != hi.size()) {
    throw Error(ErrorKind::DimensionMismatch, "box bound size mismatch");
  }
  if ((hi - lo).minCoeff() < 0.0) {
    throw Error(ErrorKind::EmptySet, "box with lo > hi");
  }
  return Hyperrectangle((lo + hi) / 2.0, ((hi - lo) / 2.0).cwiseMax(0.0));
}

Hyperrectangle Hyperrectangle::from_interval(Interval iv) {
  return from_bounds(Vector::Constant(1, iv.lo), Vector::Constant(1, iv.hi));
}

bool Hyperrectangle::contains(const Vector& x, double tol) const {
  return ((x - center_).cwiseAbs() - radius_).maxCoeff() <= tol;
}

// ---------------------------------------------------------------------------
// HPolyhedron

HPolyhedron::HPolyhedron(int dim, std::vector<HalfSpace> constraints)
    : dim_(dim), constraints_(std::move(constraints)) {
  for (const auto& h : constraints_) {
    if (h.normal.size() != dim_) {
      throw Error(ErrorKind::DimensionMismatch,
                  "constraint of dimension " + std::to_string(h.normal.size()) +
                      " in polyhedron of dimension " + std::to_string(dim_));
    }
  }
}

HPolyhedron HPolyhedron::from_box(const Hyperrectangle& box) {
  const int n = box.dim();
  std::vector<HalfSpace> cs;
  cs.reserve(2 * n);
  for (int i = 0; i < n; ++i) {
    Vector e = Vector::Zero(n);
    e(i) = 1.0;
    cs.push_back({e, box.center()(i) + box.radius()(i)});
    cs.push_back({-e, -(box.center()(i) - box.radius()(i))});
  }
  return HPolyhedron(n, std::move(cs));
}

bool HPolyhedron::is_universe() const {
  return std::all_of(constraints_.begin(), constraints_.end(), [](const HalfSpace& h) {
    return h.normal.isZero(0.0) && h.offset >= 0.0;
  });
}

Matrix HPolyhedron::normals() const {
  Matrix a(static_cast<Eigen::Index>(constraints_.size()), dim_);
  for (std::size_t i = 0; i < constraints_.size(); ++i) a.row(i) = constraints_[i].normal;
  return a;
}

Vector HPolyhedron::offsets() const {
  Vector b(static_cast<Eigen::Index>(constraints_.size()));
  for (std::size_t i = 0; i < constraints_.size(); ++i) b(i) = constraints_[i].offset;
  return b;
}

double HPolyhedron::support(const Vector& d) const {
  if (d.size() != dim_) {
    throw Error(ErrorKind::DimensionMismatch, "direction does not match polyhedron");
  }
  const lp::Result r = lp::maximize(d, normals(), offsets());
  switch (r.status) {
    case lp::Status::Optimal: return r.value;
    case lp::Status::Unbounded:
      throw Error(ErrorKind::Unbounded, "polyhedron unbounded in query direction");
    case lp::Status::Infeasible: break;
  }
  throw Error(ErrorKind::EmptySet, "support query on an empty polyhedron");
}

bool HPolyhedron::contains(const Vector& x, double tol) const {
  return std::all_of(constraints_.begin(), constraints_.end(),
                     [&](const HalfSpace& h) { return h.contains(x, tol); });
}

// ---------------------------------------------------------------------------
// LazySet

namespace {

struct MapNode {
  Matrix map;
  Vector shift;  // empty for a pure linear map
  LazySet set;
};
struct SumNode { std::vector<LazySet> sets; };
struct HullNode { std::vector<LazySet> sets; };
struct CapNode { std::vector<LazySet> sets; };
struct ProductNode {
  std::vector<LazySet> sets;
  std::vector<int> offsets;
};

// M^T d, skipping zero entries of d (directions are often unit vectors).
Vector transpose_times(const Matrix& m, const Vector& d) {
  int nnz = 0;
  for (int i = 0; i < d.size(); ++i) nnz += d(i) != 0.0 ? 1 : 0;
  if (4 * nnz >= d.size()) return m.transpose() * d;
  Vector out = Vector::Zero(m.cols());
  for (int i = 0; i < d.size(); ++i) {
    if (d(i) != 0.0) out.noalias() += d(i) * m.row(i).transpose();
  }
  return out;
}

void require_same_dim(const std::vector<LazySet>& sets, const char* what) {
  if (sets.empty()) throw Error(ErrorKind::DimensionMismatch, std::string(what) + " of no sets");
  for (const auto& s : sets) {
    if (s.dim() != sets.front().dim()) {
      throw Error(ErrorKind::DimensionMismatch, std::string(what) + " of sets of different dimension");
    }
  }
}

}  // namespace

struct LazySet::Node {
  int dim;
  std::variant<Hyperrectangle, HPolyhedron, MapNode, SumNode, HullNode, CapNode, ProductNode> v;
};

LazySet::LazySet(Hyperrectangle box)
    : node_(std::make_shared<const Node>(Node{box.dim(), std::move(box)})) {}

LazySet::LazySet(HPolyhedron poly)
    : node_(std::make_shared<const Node>(Node{poly.dim(), std::move(poly)})) {}

LazySet LazySet::linear_map(Matrix map, LazySet set) {
  if (map.cols() != set.dim()) {
    throw Error(ErrorKind::DimensionMismatch, "linear map does not match set dimension");
  }
  const int rows = static_cast<int>(map.rows());
  return LazySet(std::make_shared<const Node>(Node{rows, MapNode{std::move(map), Vector(), std::move(set)}}));
}

LazySet LazySet::affine_map(Matrix map, Vector shift, LazySet set) {
  if (map.cols() != set.dim() || map.rows() != shift.size()) {
    throw Error(ErrorKind::DimensionMismatch, "affine map does not match set dimension");
  }
  const int rows = static_cast<int>(map.rows());
  return LazySet(std::make_shared<const Node>(
      Node{rows, MapNode{std::move(map), std::move(shift), std::move(set)}}));
}

LazySet LazySet::minkowski_sum(std::vector<LazySet> sets) {
  require_same_dim(sets, "Minkowski sum");
  if (sets.size() == 1) return sets.front();
  const int n = sets.front().dim();
  return LazySet(std::make_shared<const Node>(Node{n, SumNode{std::move(sets)}}));
}

LazySet LazySet::convex_hull(std::vector<LazySet> sets) {
  require_same_dim(sets, "convex hull");
  if (sets.size() == 1) return sets.front();
  const int n = sets.front().dim();
  return LazySet(std::make_shared<const Node>(Node{n, HullNode{std::move(sets)}}));
}

LazySet LazySet::intersection(std::vector<LazySet> sets) {
  require_same_dim(sets, "intersection");
  if (sets.size() == 1) return sets.front();
  const int n = sets.front().dim();
  return LazySet(std::make_shared<const Node>(Node{n, CapNode{std::move(sets)}}));
}

LazySet LazySet::cartesian_product(std::vector<LazySet> sets) {
  if (sets.empty()) throw Error(ErrorKind::DimensionMismatch, "Cartesian product of no sets");
  if (sets.size() == 1) return sets.front();
  std::vector<int> offsets;
  int n = 0;
  for (const auto& s : sets) {
    offsets.push_back(n);
    n += s.dim();
  }
  return LazySet(std::make_shared<const Node>(Node{n, ProductNode{std::move(sets), std::move(offsets)}}));
}

LazySet LazySet::ball_inf(int dim, double radius) {
  if (!(radius >= 0.0)) throw Error(ErrorKind::NumericalFailure, "negative ball radius");
  return LazySet(Hyperrectangle(Vector::Zero(dim), Vector::Constant(dim, radius)));
}

LazySet LazySet::singleton(const Vector& point) {
  return LazySet(Hyperrectangle(point, Vector::Zero(point.size())));
}

int LazySet::dim() const { return node_->dim; }

const Hyperrectangle* LazySet::as_box() const { return std::get_if<Hyperrectangle>(&node_->v); }

const HPolyhedron* LazySet::as_polyhedron() const { return std::get_if<HPolyhedron>(&node_->v); }

double LazySet::support(const Direction& d) const {
  if (d.size() != dim()) {
    throw Error(ErrorKind::DimensionMismatch,
                "direction of size " + std::to_string(d.size()) + " for set of dimension " +
                    std::to_string(dim()));
  }
  struct Visitor {
    const LazySet& self;
    const Direction& d;
    double operator()(const Hyperrectangle& b) const { return b.support(d); }
    double operator()(const HPolyhedron& p) const { return p.support(d); }
    double operator()(const MapNode& m) const {
      double s = m.set.support(transpose_times(m.map, d));
      if (m.shift.size() > 0) s += d.dot(m.shift);
      return s;
    }
    double operator()(const SumNode& s) const {
      double acc = 0.0;
      for (const auto& x : s.sets) acc += x.support(d);
      return acc;
    }
    double operator()(const HullNode& h) const {
      double best = -std::numeric_limits<double>::infinity();
      for (const auto& x : h.sets) best = std::max(best, x.support(d));
      return best;
    }
    double operator()(const CapNode&) const {
      const auto poly = self.to_hpolyhedron();
      if (!poly) {
        throw Error(ErrorKind::NumericalFailure,
                    "support of an intersection needs constraint-representable operands");
      }
      return poly->support(d);
    }
    double operator()(const ProductNode& p) const {
      double acc = 0.0;
      for (std::size_t i = 0; i < p.sets.size(); ++i) {
        const auto part = d.segment(p.offsets[i], p.sets[i].dim());
        if (part.isZero(0.0)) continue;
        acc += p.sets[i].support(part);
      }
      return acc;
    }
  };
  return std::visit(Visitor{*this, d}, node_->v);
}

std::optional<HPolyhedron> LazySet::to_hpolyhedron() const {
  const int n = dim();
  struct Visitor {
    int n;
    std::optional<HPolyhedron> operator()(const Hyperrectangle& b) const { return HPolyhedron::from_box(b); }
    std::optional<HPolyhedron> operator()(const HPolyhedron& p) const { return p; }
    std::optional<HPolyhedron> operator()(const MapNode& m) const {
      if (m.map.rows() != m.map.cols()) return std::nullopt;
      Eigen::FullPivLU<Matrix> lu(m.map);
      if (!lu.isInvertible()) return std::nullopt;
      const auto inner = m.set.to_hpolyhedron();
      if (!inner) return std::nullopt;
      // {y | <a, M^-1 (y - v)> <= b}  =  {y | <M^-T a, y> <= b + <M^-T a, v>}
      const Matrix inv_t = lu.inverse().transpose();
      std::vector<HalfSpace> cs;
      for (const auto& h : inner->constraints()) {
        Vector a = inv_t * h.normal;
        double b = h.offset;
        if (m.shift.size() > 0) b += a.dot(m.shift);
        cs.push_back({std::move(a), b});
      }
      return HPolyhedron(n, std::move(cs));
    }
    std::optional<HPolyhedron> operator()(const SumNode&) const { return std::nullopt; }
    std::optional<HPolyhedron> operator()(const HullNode&) const { return std::nullopt; }
    std::optional<HPolyhedron> operator()(const CapNode& c) const {
      std::vector<HalfSpace> cs;
      for (const auto& s : c.sets) {
        const auto p = s.to_hpolyhedron();
        if (!p) return std::nullopt;
        cs.insert(cs.end(), p->constraints().begin(), p->constraints().end());
      }
      return HPolyhedron(n, std::move(cs));
    }
    std::optional<HPolyhedron> operator()(const ProductNode& p) const {
      std::vector<HalfSpace> cs;
      for (std::size_t i = 0; i < p.sets.size(); ++i) {
        const auto part = p.sets[i].to_hpolyhedron();
        if (!part) return std::nullopt;
        for (const auto& h : part->constraints()) {
          Vector a = Vector::Zero(n);
          a.segment(p.offsets[i], part->dim()) = h.normal;
          cs.push_back({std::move(a), h.offset});
        }
      }
      return HPolyhedron(n, std::move(cs));
    }
  };
  return std::visit(Visitor{n}, node_->v);
}

// ---------------------------------------------------------------------------
// Operations

double support_function(const LazySet& set, const Direction& d) { return set.support(d); }

bool is_empty(const HPolyhedron& p) {
  for (const auto& h : p.constraints()) {
    if (h.normal.isZero(0.0) && h.offset < -lp::kFeasTol) return true;
  }
  if (p.is_universe()) return false;
  return !lp::feasible(p.normals(), p.offsets());
}

bool is_subset(const LazySet& x, const HPolyhedron& p) {
  if (x.dim() != p.dim()) throw Error(ErrorKind::DimensionMismatch, "is_subset dimension mismatch");
  for (const auto& h : p.constraints()) {
    if (h.normal.isZero(0.0)) {
      if (h.offset < -kInclTol) return false;
      continue;
    }
    if (x.support(h.normal) > h.offset + kInclTol) return false;
  }
  return true;
}

HPolyhedron intersection(const HPolyhedron& p, const HPolyhedron& q) {
  if (p.dim() != q.dim()) throw Error(ErrorKind::DimensionMismatch, "intersection dimension mismatch");
  std::vector<HalfSpace> cs = p.constraints();
  cs.insert(cs.end(), q.constraints().begin(), q.constraints().end());
  return HPolyhedron(p.dim(), std::move(cs));
}

Hyperrectangle box_approximation(const LazySet& x) {
  if (const auto* b = x.as_box()) return *b;
  const int n = x.dim();
  Vector lo(n), hi(n);
  Vector e = Vector::Zero(n);
  for (int i = 0; i < n; ++i) {
    e(i) = 1.0;
    hi(i) = x.support(e);
    e(i) = -1.0;
    lo(i) = -x.support(e);
    e(i) = 0.0;
  }
  // Round-off can produce lo marginally above hi for degenerate extents.
  for (int i = 0; i < n; ++i) {
    if (lo(i) > hi(i)) lo(i) = hi(i) = 0.5 * (lo(i) + hi(i));
  }
  return Hyperrectangle::from_bounds(lo, hi);
}

LazySet convex_hull(const LazySet& x, const LazySet& y) {
  return LazySet::convex_hull({x, y});
}

HPolyhedron template_overapprox(const LazySet& x, const std::vector<Direction>& dirs) {
  std::vector<HalfSpace> cs;
  cs.reserve(dirs.size());
  for (const auto& d : dirs) cs.push_back({d, x.support(d)});
  return HPolyhedron(x.dim(), std::move(cs));
}

double hausdorff_distance_upper(const LazySet& x, const LazySet& y,
                                const std::vector<Direction>& dirs) {
  double best = 0.0;
  for (const auto& d : dirs) {
    const double norm = d.lpNorm<1>();
    if (norm == 0.0) continue;
    const Direction u = d / norm;
    best = std::max(best, y.support(u) - x.support(u));
  }
  return best;
}

std::vector<Direction> box_directions(int dim) {
  std::vector<Direction> out;
  out.reserve(2 * dim);
  for (int i = 0; i < dim; ++i) {
    Direction e = Direction::Zero(dim);
    e(i) = 1.0;
    out.push_back(e);
    out.push_back(-e);
  }
  return out;
}

std::vector<Direction> octagon_directions(int dim) {
  std::vector<Direction> out = box_directions(dim);
  for (int i = 0; i < dim; ++i) {
    for (int j = i + 1; j < dim; ++j) {
      for (double si : {1.0, -1.0}) {
        for (double sj : {1.0, -1.0}) {
          Direction d = Direction::Zero(dim);
          d(i) = si;
          d(j) = sj;
          out.push_back(d);
        }
      }
    }
  }
  return out;
}

}  // namespace blockreach
