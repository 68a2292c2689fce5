#pragma once

// Convex sets described by their support function: intervals, boxes,
// H-polyhedra, and lazy operation trees over them.

#include <Eigen/Dense>

#include <memory>
#include <optional>
#include <variant>
#include <vector>

namespace blockreach {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Direction = Eigen::VectorXd;

/// Tolerance for inclusion checks (`is_subset`).
inline constexpr double kInclTol = 1e-9;

struct HalfSpace {
  Vector normal;  // a
  double offset;  // b, the set is {x | <a, x> <= b}

  bool contains(const Vector& x, double tol = kInclTol) const {
    return normal.dot(x) <= offset + tol;
  }
};

struct Interval {
  double lo;
  double hi;
};

class Hyperrectangle {
 public:
  Hyperrectangle(Vector center, Vector radius);
  static Hyperrectangle from_bounds(const Vector& lo, const Vector& hi);
  static Hyperrectangle from_interval(Interval iv);

  int dim() const { return static_cast<int>(center_.size()); }
  const Vector& center() const { return center_; }
  const Vector& radius() const { return radius_; }
  Vector low() const { return center_ - radius_; }
  Vector high() const { return center_ + radius_; }
  Interval interval(int i) const { return {center_(i) - radius_(i), center_(i) + radius_(i)}; }

  double support(const Vector& d) const {
    return d.dot(center_) + d.cwiseAbs().dot(radius_);
  }
  bool contains(const Vector& x, double tol = kInclTol) const;

 private:
  Vector center_;
  Vector radius_;
};

/// Finite intersection of half-spaces. No constraints means the universe.
/// A constraint with an all-zero normal and negative offset is kept as-is;
/// it makes the polyhedron empty.
class HPolyhedron {
 public:
  explicit HPolyhedron(int dim) : dim_(dim) {}
  HPolyhedron(int dim, std::vector<HalfSpace> constraints);
  static HPolyhedron universe(int dim) { return HPolyhedron(dim); }
  static HPolyhedron from_box(const Hyperrectangle& box);

  int dim() const { return dim_; }
  const std::vector<HalfSpace>& constraints() const { return constraints_; }
  std::size_t size() const { return constraints_.size(); }
  bool is_universe() const;

  Matrix normals() const;
  Vector offsets() const;

  /// Throws Unbounded or EmptySet.
  double support(const Vector& d) const;
  bool contains(const Vector& x, double tol = kInclTol) const;

 private:
  int dim_;
  std::vector<HalfSpace> constraints_;
};

/// Immutable expression tree whose leaves are boxes or polyhedra. Copies
/// share structure.
class LazySet {
 public:
  LazySet(Hyperrectangle box);    // NOLINT(google-explicit-constructor)
  LazySet(HPolyhedron poly);      // NOLINT(google-explicit-constructor)

  static LazySet linear_map(Matrix map, LazySet set);
  static LazySet affine_map(Matrix map, Vector shift, LazySet set);
  static LazySet minkowski_sum(std::vector<LazySet> sets);
  static LazySet convex_hull(std::vector<LazySet> sets);
  static LazySet intersection(std::vector<LazySet> sets);
  static LazySet cartesian_product(std::vector<LazySet> sets);

  /// Centered infinity-norm ball.
  static LazySet ball_inf(int dim, double radius);
  static LazySet singleton(const Vector& point);

  int dim() const;
  double support(const Direction& d) const;

  /// Exact constraint representation when one exists without vertex
  /// enumeration (boxes, polyhedra, intersections, products, invertible maps).
  std::optional<HPolyhedron> to_hpolyhedron() const;

  /// Leaf access for fast paths.
  const Hyperrectangle* as_box() const;
  const HPolyhedron* as_polyhedron() const;

  struct Node;

 private:
  explicit LazySet(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

double support_function(const LazySet& set, const Direction& d);

bool is_empty(const HPolyhedron& p);

/// X is a subset of P iff the support of X along each normal of P stays
/// below the offset (plus kInclTol).
bool is_subset(const LazySet& x, const HPolyhedron& p);

HPolyhedron intersection(const HPolyhedron& p, const HPolyhedron& q);

/// Tightest enclosing box.
Hyperrectangle box_approximation(const LazySet& x);

LazySet convex_hull(const LazySet& x, const LazySet& y);

HPolyhedron template_overapprox(const LazySet& x, const std::vector<Direction>& dirs);

/// max over d in dirs (rescaled to unit 1-norm) of rho_Y(d) - rho_X(d).
/// For X subset of Y this is a lower estimate of the infinity-norm Hausdorff
/// distance that becomes exact as the directions densify.
double hausdorff_distance_upper(const LazySet& x, const LazySet& y,
                                const std::vector<Direction>& dirs);

std::vector<Direction> box_directions(int dim);
/// +-e_i and +-e_i +- e_j for i < j.
std::vector<Direction> octagon_directions(int dim);

}  // namespace blockreach
