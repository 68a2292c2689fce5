#pragma once

// Linear hybrid automata and the decomposed reachability loop: guard sets
// folded with invariants, low-dimensional guard tests, on-demand completion
// of the flowpipe, block-wise assignment, clustering and fixpoint checks.

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "blockreach/decomposition.hpp"
#include "blockreach/geometry.hpp"
#include "blockreach/lti.hpp"

namespace blockreach {

struct Location {
  std::string name;
  LTISystem flow;
  HPolyhedron invariant;
};

/// Deterministic affine reset x' = map * x + offset.
struct Assignment {
  Matrix map;
  Vector offset;

  static Assignment identity(int dim) { return {Matrix::Identity(dim, dim), Vector::Zero(dim)}; }
};

struct Transition {
  int source = 0;
  int target = 0;
  HPolyhedron guard{0};
  Assignment assignment;
};

struct HybridAutomaton {
  int dim = 0;
  std::vector<std::string> variables;
  std::vector<Location> locations;
  std::vector<Transition> transitions;

  /// Throws DimensionMismatch / ConfigError on malformed automata.
  void validate() const;
  int location_index(const std::string& name) const;
};

struct SymbolicState {
  int location = 0;
  std::variant<LazySet, DecomposedSet> set;
  Interval time{0.0, 0.0};  // window of absolute times at which the set is entered
  int depth = 0;            // jumps taken so far

  LazySet lazy() const;
};

/// A constraint set split along a block structure: single-block constraints
/// go to their block, the rest are grouped into connected components of
/// blocks that they couple.
struct SplitConstraints {
  std::vector<HPolyhedron> by_block;
  std::vector<HalfSpace> cross;
  struct Component {
    std::vector<int> blocks;
    HPolyhedron constraints;  // full-dimensional: coupled constraints plus the
                              // single-block constraints of `blocks`
  };
  std::vector<Component> components;
  std::vector<int> touched_blocks;
};

SplitConstraints split_constraints(const HPolyhedron& p, const BlockStructure& s);

struct TransitionPlan {
  int transition = -1;
  int source = 0;
  int target = 0;
  Assignment assignment;
  HPolyhedron gstar{0};
  std::vector<int> guard_blocks;
  std::vector<HPolyhedron> gstar_by_block;
  std::vector<HalfSpace> cross_constraints;
  SplitConstraints split;
  bool never_enabled = false;  // G* contains 0 <= d with d < 0
};

/// G* = Inv(source) & Grd & {x | M x + v in Inv(target)}.
TransitionPlan precompute_gstar(const HybridAutomaton& h, int transition, const BlockStructure& s);

enum class Clustering { Hull, None };

/// What to do with a coupled constraint group wider than
/// ReachConfig::max_refine_dims.
enum class CrossBlockFallback { AssumeNonempty, Exact };

struct ReachConfig {
  double delta = 0.01;
  double horizon = 1.0;  // per flowpipe
  int jump_bound = 5;
  int block_width = 1;
  std::optional<BlockStructure> structure;  // overrides block_width
  TemplateKind kind = TemplateKind::Box;
  Clustering clustering = Clustering::Hull;
  std::optional<HPolyhedron> safe;
  CrossBlockFallback fallback = CrossBlockFallback::AssumeNonempty;
  int max_refine_dims = 10;
  bool unbounded = false;  // stop flowpipes once a step repeats an earlier one
  int threads = 1;

  void validate(int dim) const;
  BlockStructure structure_for(int dim) const;
  /// Index of the last flowpipe step: ceil(horizon / delta) - 1.
  int last_step() const;
};

struct DiscreteStats {
  long steps_tested = 0;
  long steps_intersecting = 0;
};

/// Whether step set `x` meets the constraints, using block tests first and
/// exact subspace tests for coupled constraints.
bool may_intersect(const DecomposedSet& x, const SplitConstraints& c, const ReachConfig& config);

/// Successor states for every flowpipe step that meets G*, before clustering.
/// Completes the missing blocks of those steps (and only those).
std::vector<SymbolicState> discrete_post(const TransitionPlan& plan, Flowpipe& fp,
                                         const DiscretizedSystem& dsys, const ReachConfig& config,
                                         Interval time_offset = {0.0, 0.0}, int depth = 0,
                                         DiscreteStats* stats = nullptr);

std::vector<SymbolicState> cluster(const std::vector<SymbolicState>& states, Clustering strategy,
                                   TemplateKind kind = TemplateKind::Box);

/// passed[location] holds previously seen sets of that location.
bool fixpoint_check(const SymbolicState& candidate,
                    const std::vector<std::vector<DecomposedSet>>& passed);

enum class SafetyVerdict { Safe, Violation };

/// Inclusion of the step set in the safe set, constraint by constraint via
/// the block-wise support sum. Blocks touched by `safe` must be computed.
SafetyVerdict check_safety(const DecomposedSet& step, const HPolyhedron& safe);

/// Like check_safety, but only over the part of the step inside `inv`: the
/// coupled invariant constraints and the safe constraint are solved jointly
/// on the blocks they touch. Falls back to block-wise invariant constraints
/// when that subspace exceeds config.max_refine_dims (unless fallback is
/// Exact).
SafetyVerdict check_safety_within(const DecomposedSet& step, const HPolyhedron& safe,
                                  const HPolyhedron& inv, const ReachConfig& config);

enum class Verdict { Safe, Unsafe, BoundExhausted };
const char* to_string(Verdict v);

struct FlowpipeRecord {
  int location = 0;
  int depth = 0;
  Interval time_offset{0.0, 0.0};
  Flowpipe flowpipe;
  DiscretizedSystem dsys;
};

struct ViolationInfo {
  int flowpipe = 0;
  int location = 0;
  int step = 0;
};

struct ReachStats {
  long sets_total = 0;
  long sets_completed_highdim = 0;
  long jumps_taken = 0;
  long fixpoints_hit = 0;
  long flowpipes = 0;
};

struct ReachResult {
  std::vector<FlowpipeRecord> flowpipes;
  Verdict verdict = Verdict::Safe;
  std::optional<ViolationInfo> violation;
  ReachStats stats;
};

ReachResult reach(const HybridAutomaton& h, const std::vector<SymbolicState>& init,
                  const ReachConfig& config);

}  // namespace blockreach
