#pragma once

// Cartesian block decomposition of sets and the low-dimensional versions of
// intersection, affine map, inclusion and convex hull, together with bounds
// on the Hausdorff error each of them introduces.

#include <variant>
#include <vector>

#include "blockreach/geometry.hpp"

namespace blockreach {

struct Block {
  int start;
  int size;
  int end() const { return start + size; }
};

/// Contiguous, sorted partition of the coordinates 0..n-1.
class BlockStructure {
 public:
  explicit BlockStructure(const std::vector<int>& sizes);
  /// Blocks of `width` coordinates; the last block takes the remainder.
  static BlockStructure uniform(int dim, int width);

  int dim() const { return dim_; }
  int count() const { return static_cast<int>(blocks_.size()); }
  const Block& block(int j) const { return blocks_[j]; }
  const std::vector<Block>& blocks() const { return blocks_; }
  int block_of(int coord) const { return owner_[coord]; }

  /// Coordinates covered by the given blocks, in block order.
  std::vector<int> coordinates(const std::vector<int>& block_ids) const;
  std::vector<int> all_blocks() const;

  bool operator==(const BlockStructure& other) const { return owner_ == other.owner_; }

 private:
  int dim_ = 0;
  std::vector<Block> blocks_;
  std::vector<int> owner_;
};

enum class TemplateKind { Box, Octagon };

struct NotComputed {};
struct Universe {};

using BlockSet = std::variant<NotComputed, Universe, Hyperrectangle, HPolyhedron>;

/// Product of per-block sets. NotComputed entries belong to sparse flowpipes
/// and must be filled before the set can be used as a whole.
class DecomposedSet {
 public:
  DecomposedSet(BlockStructure structure, std::vector<BlockSet> blocks);
  static DecomposedSet not_computed(BlockStructure structure);

  const BlockStructure& structure() const { return structure_; }
  int count() const { return structure_.count(); }
  const BlockSet& block(int j) const { return blocks_[j]; }
  void set_block(int j, BlockSet set);

  bool is_computed(int j) const { return !std::holds_alternative<NotComputed>(blocks_[j]); }
  bool is_universe(int j) const { return std::holds_alternative<Universe>(blocks_[j]); }
  bool fully_computed() const;
  int computed_count() const;

  /// Block j as a set in its own coordinates; Universe becomes a polyhedron
  /// without constraints. Throws MissingBlock for NotComputed.
  LazySet block_set(int j) const;
  /// Whole product; throws MissingBlock if any block is NotComputed.
  LazySet to_lazy() const;
  /// Membership test on computed blocks only.
  bool contains(const Vector& x, double tol = kInclTol) const;

 private:
  BlockStructure structure_;
  std::vector<BlockSet> blocks_;
};

/// Template directions used to concretize a block of dimension `dim`.
/// Octagon applies to 2-D blocks; other sizes fall back to box.
std::vector<Direction> block_template(int dim, TemplateKind kind);

/// Concretize a low-dimensional set: Hyperrectangle for box templates,
/// HPolyhedron for octagons.
BlockSet concretize_block(const LazySet& set, TemplateKind kind);

/// Re-concretize every computed, non-universe block.
DecomposedSet concretize(const DecomposedSet& x, TemplateKind kind);

/// Nonempty iff every computed block is nonempty.
bool is_empty(const DecomposedSet& x);

/// Cartesian decomposition of X: block j = template of pi_j X.
DecomposedSet decompose(const LazySet& x, const BlockStructure& s,
                        TemplateKind kind = TemplateKind::Box);

/// Block j receives the constraints of P supported inside block j, in block
/// coordinates. Constraints spanning several blocks are dropped here.
std::vector<HPolyhedron> project_constraints(const HPolyhedron& p, const BlockStructure& s);

/// Constraints of P whose normal touches more than one block.
std::vector<HalfSpace> cross_block_constraints(const HPolyhedron& p, const BlockStructure& s);

/// Blocks touched by a nonzero coefficient of some constraint, ascending.
std::vector<int> constrained_blocks(const HPolyhedron& p, const BlockStructure& s);

/// Block-wise intersection; Universe on either side is neutral.
/// Throws MissingBlock if a NotComputed block meets a constrained block.
DecomposedSet intersect_decomposed(const DecomposedSet& x, const std::vector<HPolyhedron>& y);

struct EmptinessWitness {
  bool empty = false;
  int block = -1;  // first block whose intersection is empty
};

/// Sufficient emptiness test that skips NotComputed blocks.
EmptinessWitness emptiness_witness(const DecomposedSet& x, const std::vector<HPolyhedron>& y);

/// (x_{j in J} X_j) intersected with P, over the coordinates of J in block
/// order. P (full dimension) must only constrain those coordinates.
HPolyhedron cross_block_refine(const DecomposedSet& x, const HPolyhedron& p,
                               const std::vector<int>& blocks);

/// Embeds `set` (over the coordinates of `blocks`) back into the blocks.
void write_back_blocks(DecomposedSet& x, const LazySet& set, const std::vector<int>& blocks,
                       TemplateKind kind);

struct ErrorBound {
  double value = 0.0;
};

/// Infinity-norm diameter (max coordinate width).
double diameter_inf(const LazySet& x);

/// max_j min(diam(X_j), diam(pi_j Y)); Y must be compact.
ErrorBound intersection_error_bound(const DecomposedSet& x, const HPolyhedron& y);

/// Block i = (sum_j M_ij X_j) + v_i, concretized with `kind`.
DecomposedSet affine_map_decomposed(const Matrix& m, const Vector& v, const DecomposedSet& x,
                                    TemplateKind kind = TemplateKind::Box);

/// min((b-1) sum_j alpha_j diam(X_j), (n/2) alpha_max sum_j diam(X_j)) where
/// alpha_j is the second largest block norm in block column j.
ErrorBound affine_map_error_bound(const Matrix& m, const BlockStructure& s, const DecomposedSet& x);

/// Exact: X subset of Y iff X_j subset of Y_j for every block.
bool is_subset_decomposed(const DecomposedSet& x, const DecomposedSet& y);

/// Block-wise convex hull, concretized with `kind`.
DecomposedSet convex_hull_decomposed(const DecomposedSet& x, const DecomposedSet& y,
                                     TemplateKind kind = TemplateKind::Box);

/// min(||r||_inf of the hull's box radius, sum over blocks of the largest
/// support gap over unit 1-norm directions). The gap is taken over +-e_i for
/// boxes and additionally over the facet normals of polyhedral blocks of up
/// to two dimensions; wider polyhedral blocks leave only the radius term.
ErrorBound convex_hull_error_bound(const DecomposedSet& x, const DecomposedSet& y);

}  // namespace blockreach
