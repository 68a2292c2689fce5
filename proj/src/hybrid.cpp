#include "blockreach/hybrid.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

#include "blockreach/error.hpp"

namespace blockreach {

// ---------------------------------------------------------------------------
// Automaton

void HybridAutomaton::validate() const {
  if (dim <= 0) throw Error(ErrorKind::ConfigError, "automaton dimension must be positive");
  if (!variables.empty() && static_cast<int>(variables.size()) != dim) {
    throw Error(ErrorKind::DimensionMismatch, "variable count differs from dimension");
  }
  if (locations.empty()) throw Error(ErrorKind::ConfigError, "automaton has no location");
  for (const auto& loc : locations) {
    loc.flow.validate();
    if (loc.flow.dim() != dim || loc.invariant.dim() != dim) {
      throw Error(ErrorKind::DimensionMismatch, "location " + loc.name + ": dimension mismatch");
    }
  }
  const int nloc = static_cast<int>(locations.size());
  for (std::size_t t = 0; t < transitions.size(); ++t) {
    const auto& tr = transitions[t];
    const std::string tag = "transition " + std::to_string(t);
    if (tr.source < 0 || tr.source >= nloc || tr.target < 0 || tr.target >= nloc) {
      throw Error(ErrorKind::ConfigError, tag + ": location index out of range");
    }
    if (tr.guard.dim() != dim || tr.assignment.map.rows() != dim || tr.assignment.map.cols() != dim ||
        tr.assignment.offset.size() != dim) {
      throw Error(ErrorKind::DimensionMismatch, tag + ": dimension mismatch");
    }
    if (!tr.assignment.map.allFinite() || !tr.assignment.offset.allFinite()) {
      throw Error(ErrorKind::ConfigError, tag + ": assignment is not finite");
    }
  }
}

int HybridAutomaton::location_index(const std::string& name) const {
  for (std::size_t i = 0; i < locations.size(); ++i) {
    if (locations[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

LazySet SymbolicState::lazy() const {
  if (const auto* d = std::get_if<DecomposedSet>(&set)) return d->to_lazy();
  return std::get<LazySet>(set);
}

// ---------------------------------------------------------------------------
// Constraint splitting

namespace {

std::vector<int> blocks_of(const HalfSpace& h, const BlockStructure& s) {
  std::vector<int> out;
  for (int i = 0; i < h.normal.size(); ++i) {
    if (h.normal(i) == 0.0) continue;
    const int j = s.block_of(i);
    if (std::find(out.begin(), out.end(), j) == out.end()) out.push_back(j);
  }
  std::sort(out.begin(), out.end());
  return out;
}

int find_root(std::vector<int>& parent, int j) {
  while (parent[j] != j) j = parent[j] = parent[parent[j]];
  return j;
}

void merge_blocks(std::vector<int>& acc, const std::vector<int>& more) {
  acc.insert(acc.end(), more.begin(), more.end());
  std::sort(acc.begin(), acc.end());
  acc.erase(std::unique(acc.begin(), acc.end()), acc.end());
}

int component_dims(const SplitConstraints::Component& c, const BlockStructure& s) {
  int d = 0;
  for (int j : c.blocks) d += s.block(j).size;
  return d;
}

bool refinable(const SplitConstraints::Component& c, const BlockStructure& s, const ReachConfig& config) {
  return config.fallback == CrossBlockFallback::Exact || component_dims(c, s) <= config.max_refine_dims;
}

bool has_contradiction(const HPolyhedron& p) {
  return std::any_of(p.constraints().begin(), p.constraints().end(), [](const HalfSpace& h) {
    return h.normal.isZero(0.0) && h.offset < 0.0;
  });
}

}  // namespace

SplitConstraints split_constraints(const HPolyhedron& p, const BlockStructure& s) {
  SplitConstraints out;
  out.by_block = project_constraints(p, s);
  out.cross = cross_block_constraints(p, s);
  out.touched_blocks = constrained_blocks(p, s);

  std::vector<int> parent(s.count());
  std::iota(parent.begin(), parent.end(), 0);
  std::vector<std::vector<int>> touched;
  touched.reserve(p.size());
  for (const auto& h : p.constraints()) touched.push_back(blocks_of(h, s));
  for (const auto& t : touched) {
    for (std::size_t i = 1; i < t.size(); ++i) {
      parent[find_root(parent, t[i])] = find_root(parent, t[0]);
    }
  }

  std::vector<int> root_to_comp(s.count(), -1);
  std::vector<std::vector<HalfSpace>> comp_constraints;
  for (const auto& t : touched) {
    if (t.size() < 2) continue;
    const int r = find_root(parent, t[0]);
    if (root_to_comp[r] < 0) {
      root_to_comp[r] = static_cast<int>(out.components.size());
      out.components.push_back({{}, HPolyhedron(s.dim())});
      comp_constraints.emplace_back();
    }
  }
  for (int j = 0; j < s.count(); ++j) {
    const int c = root_to_comp[find_root(parent, j)];
    if (c >= 0) out.components[c].blocks.push_back(j);
  }
  for (std::size_t i = 0; i < touched.size(); ++i) {
    if (touched[i].empty()) continue;
    const int c = root_to_comp[find_root(parent, touched[i][0])];
    if (c >= 0) comp_constraints[c].push_back(p.constraints()[i]);
  }
  for (std::size_t c = 0; c < out.components.size(); ++c) {
    out.components[c].constraints = HPolyhedron(s.dim(), std::move(comp_constraints[c]));
  }
  return out;
}

TransitionPlan precompute_gstar(const HybridAutomaton& h, int transition, const BlockStructure& s) {
  if (transition < 0 || transition >= static_cast<int>(h.transitions.size())) {
    throw Error(ErrorKind::ConfigError, "transition index out of range");
  }
  const Transition& tr = h.transitions[transition];
  std::vector<HalfSpace> cs = h.locations[tr.source].invariant.constraints();
  cs.insert(cs.end(), tr.guard.constraints().begin(), tr.guard.constraints().end());
  for (const auto& c : h.locations[tr.target].invariant.constraints()) {
    // <c, M x + v> <= d  <=>  <M^T c, x> <= d - <c, v>
    Vector a = tr.assignment.map.transpose() * c.normal;
    const double b = c.offset - c.normal.dot(tr.assignment.offset);
    if (a.isZero(0.0) && b >= 0.0) continue;
    cs.push_back({std::move(a), b});
  }

  TransitionPlan plan;
  plan.transition = transition;
  plan.source = tr.source;
  plan.target = tr.target;
  plan.assignment = tr.assignment;
  plan.gstar = HPolyhedron(h.dim, std::move(cs));
  plan.never_enabled = has_contradiction(plan.gstar);
  plan.split = split_constraints(plan.gstar, s);
  plan.guard_blocks = plan.split.touched_blocks;
  plan.gstar_by_block = plan.split.by_block;
  plan.cross_constraints = plan.split.cross;
  return plan;
}

// ---------------------------------------------------------------------------
// Configuration

void ReachConfig::validate(int dim) const {
  if (!(delta > 0.0) || !std::isfinite(delta)) throw Error(ErrorKind::ConfigError, "delta must be positive");
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw Error(ErrorKind::ConfigError, "horizon must be positive");
  if (jump_bound < 0) throw Error(ErrorKind::ConfigError, "jump bound must be non-negative");
  if (max_refine_dims < 1) throw Error(ErrorKind::ConfigError, "max_refine_dims must be positive");
  if (threads < 1) throw Error(ErrorKind::ConfigError, "thread count must be positive");
  if (structure) {
    if (structure->dim() != dim) throw Error(ErrorKind::ConfigError, "block structure dimension mismatch");
  } else {
    if (block_width < 1) throw Error(ErrorKind::ConfigError, "block width must be positive");
    if (kind == TemplateKind::Octagon && block_width != 2) {
      throw Error(ErrorKind::ConfigError, "octagon template requires block width 2");
    }
  }
  if (safe && safe->dim() != dim) throw Error(ErrorKind::ConfigError, "safe set dimension mismatch");
}

BlockStructure ReachConfig::structure_for(int dim) const {
  return structure ? *structure : BlockStructure::uniform(dim, block_width);
}

int ReachConfig::last_step() const {
  const int n = static_cast<int>(std::ceil(horizon / delta - 1e-9));
  return std::max(0, n - 1);
}

// ---------------------------------------------------------------------------
// Discrete post

bool may_intersect(const DecomposedSet& x, const SplitConstraints& c, const ReachConfig& config) {
  if (emptiness_witness(x, c.by_block).empty) return false;
  for (const auto& comp : c.components) {
    if (!refinable(comp, x.structure(), config)) continue;
    if (is_empty(cross_block_refine(x, comp.constraints, comp.blocks))) return false;
  }
  return true;
}

std::vector<SymbolicState> discrete_post(const TransitionPlan& plan, Flowpipe& fp,
                                         const DiscretizedSystem& dsys, const ReachConfig& config,
                                         Interval time_offset, int depth, DiscreteStats* stats) {
  std::vector<SymbolicState> out;
  if (plan.never_enabled) return out;
  const BlockStructure& s = fp.structure;

  std::vector<int> candidates;
  for (int k = 0; k < fp.size(); ++k) {
    if (stats) ++stats->steps_tested;
    if (may_intersect(fp.steps[k], plan.split, config)) candidates.push_back(k);
  }
  if (stats) stats->steps_intersecting += static_cast<long>(candidates.size());
  if (candidates.empty()) return out;

  complete_steps(fp, dsys, candidates, s.all_blocks(), config.threads);

  for (int k : candidates) {
    const DecomposedSet& xk = fp.steps[k];
    DecomposedSet y = intersect_decomposed(xk, plan.gstar_by_block);
    bool empty = false;
    for (const auto& comp : plan.split.components) {
      if (!refinable(comp, s, config)) continue;
      const HPolyhedron r = cross_block_refine(xk, comp.constraints, comp.blocks);
      if (is_empty(r)) {
        empty = true;
        break;
      }
      write_back_blocks(y, r, comp.blocks, fp.kind);
    }
    if (empty || is_empty(y)) continue;
    y = concretize(y, fp.kind);
    DecomposedSet z = affine_map_decomposed(plan.assignment.map, plan.assignment.offset, y, fp.kind);
    const Interval span = fp.time_span(k);
    out.push_back({plan.target, std::move(z),
                   {time_offset.lo + span.lo, time_offset.hi + span.hi}, depth + 1});
  }
  return out;
}

std::vector<SymbolicState> cluster(const std::vector<SymbolicState>& states, Clustering strategy,
                                   TemplateKind kind) {
  if (strategy == Clustering::None || states.size() <= 1) return states;
  const auto* first = std::get_if<DecomposedSet>(&states.front().set);
  if (!first) throw Error(ErrorKind::StructureMismatch, "cluster: states must be decomposed");
  SymbolicState acc = states.front();
  DecomposedSet hull = *first;
  for (std::size_t i = 1; i < states.size(); ++i) {
    const auto* d = std::get_if<DecomposedSet>(&states[i].set);
    if (!d || states[i].location != acc.location || !(d->structure() == hull.structure())) {
      throw Error(ErrorKind::StructureMismatch, "cluster: states differ in location or structure");
    }
    hull = convex_hull_decomposed(hull, *d, kind);
    acc.time.lo = std::min(acc.time.lo, states[i].time.lo);
    acc.time.hi = std::max(acc.time.hi, states[i].time.hi);
    acc.depth = std::max(acc.depth, states[i].depth);
  }
  acc.set = std::move(hull);
  return {acc};
}

bool fixpoint_check(const SymbolicState& candidate,
                    const std::vector<std::vector<DecomposedSet>>& passed) {
  const auto* x = std::get_if<DecomposedSet>(&candidate.set);
  if (!x) throw Error(ErrorKind::StructureMismatch, "fixpoint_check: candidate must be decomposed");
  if (candidate.location < 0 || candidate.location >= static_cast<int>(passed.size())) return false;
  for (const auto& y : passed[candidate.location]) {
    if (!(y.structure() == x->structure())) {
      throw Error(ErrorKind::StructureMismatch, "fixpoint_check: block structures differ");
    }
    if (is_subset_decomposed(*x, y)) return true;
  }
  return false;
}

SafetyVerdict check_safety(const DecomposedSet& step, const HPolyhedron& safe) {
  const BlockStructure& s = step.structure();
  if (safe.dim() != s.dim()) throw Error(ErrorKind::DimensionMismatch, "check_safety: dimension mismatch");
  for (const auto& h : safe.constraints()) {
    // the support of a product is the sum of the block supports
    double rho = 0.0;
    for (int j : blocks_of(h, s)) {
      if (!step.is_computed(j)) {
        throw Error(ErrorKind::MissingBlock, "check_safety: block " + std::to_string(j) + " is not computed");
      }
      if (step.is_universe(j)) return SafetyVerdict::Violation;
      const Block& b = s.block(j);
      try {
        rho += step.block_set(j).support(h.normal.segment(b.start, b.size));
      } catch (const Error& e) {
        if (e.kind() == ErrorKind::Unbounded) return SafetyVerdict::Violation;
        throw;
      }
    }
    if (rho > h.offset + kInclTol) return SafetyVerdict::Violation;
  }
  return SafetyVerdict::Safe;
}

SafetyVerdict check_safety_within(const DecomposedSet& step, const HPolyhedron& safe,
                                  const HPolyhedron& inv, const ReachConfig& config) {
  const BlockStructure& s = step.structure();
  if (inv.is_universe()) return check_safety(step, safe);
  std::vector<int> blocks = constrained_blocks(safe, s);
  merge_blocks(blocks, constrained_blocks(inv, s));
  int dims = 0;
  for (int j : blocks) dims += s.block(j).size;

  if (dims > config.max_refine_dims && config.fallback != CrossBlockFallback::Exact) {
    const DecomposedSet y = intersect_decomposed(step, project_constraints(inv, s));
    if (is_empty(y)) return SafetyVerdict::Safe;
    return check_safety(y, safe);
  }
  for (int j : blocks) {
    if (!step.is_computed(j)) {
      throw Error(ErrorKind::MissingBlock, "check_safety: block " + std::to_string(j) + " is not computed");
    }
  }
  const HPolyhedron p = cross_block_refine(step, inv, blocks);
  if (is_empty(p)) return SafetyVerdict::Safe;
  const std::vector<int> coords = s.coordinates(blocks);
  for (const auto& h : safe.constraints()) {
    Vector local(static_cast<Eigen::Index>(coords.size()));
    for (std::size_t i = 0; i < coords.size(); ++i) local(i) = h.normal(coords[i]);
    try {
      if (p.support(local) > h.offset + kInclTol) return SafetyVerdict::Violation;
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::Unbounded) return SafetyVerdict::Violation;
      throw;
    }
  }
  return SafetyVerdict::Safe;
}

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Safe: return "Safe";
    case Verdict::Unsafe: return "Unsafe";
    case Verdict::BoundExhausted: return "BoundExhausted";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Reachability loop

namespace {

void fill_stats(ReachResult& r) {
  r.stats.sets_total = 0;
  r.stats.sets_completed_highdim = 0;
  for (const auto& rec : r.flowpipes) {
    r.stats.sets_total += rec.flowpipe.size();
    for (const auto& step : rec.flowpipe.steps) {
      if (step.fully_computed()) ++r.stats.sets_completed_highdim;
    }
  }
  r.stats.flowpipes = static_cast<long>(r.flowpipes.size());
}

}  // namespace

ReachResult reach(const HybridAutomaton& h, const std::vector<SymbolicState>& init,
                  const ReachConfig& config) {
  h.validate();
  config.validate(h.dim);
  const BlockStructure s = config.structure_for(h.dim);
  const int nloc = static_cast<int>(h.locations.size());

  std::vector<TransitionPlan> plans;
  std::vector<std::vector<int>> outgoing(nloc);
  for (int t = 0; t < static_cast<int>(h.transitions.size()); ++t) {
    plans.push_back(precompute_gstar(h, t, s));
    outgoing[h.transitions[t].source].push_back(t);
  }

  std::optional<SplitConstraints> safe_split;
  if (config.safe) safe_split = split_constraints(*config.safe, s);

  std::vector<SplitConstraints> inv_split;
  std::vector<std::vector<int>> needed(nloc);
  for (int l = 0; l < nloc; ++l) {
    inv_split.push_back(split_constraints(h.locations[l].invariant, s));
    if (config.unbounded) {
      needed[l] = s.all_blocks();
      continue;
    }
    merge_blocks(needed[l], inv_split[l].touched_blocks);
    for (int t : outgoing[l]) merge_blocks(needed[l], plans[t].guard_blocks);
    if (safe_split) merge_blocks(needed[l], safe_split->touched_blocks);
  }

  ReachResult result;
  std::vector<std::vector<DecomposedSet>> passed(nloc);
  std::deque<SymbolicState> waiting(init.begin(), init.end());
  bool exhausted = false;
  const int last = config.last_step();

  while (!waiting.empty()) {
    SymbolicState st = std::move(waiting.front());
    waiting.pop_front();
    if (st.location < 0 || st.location >= nloc) throw Error(ErrorKind::ConfigError, "state location out of range");
    const Location& loc = h.locations[st.location];
    DiscretizedSystem dsys = discretize(loc.flow, st.lazy(), config.delta);

    // A step disjoint from the invariant cannot hold reachable states, and
    // neither can any later one: the run would have had to leave the location.
    const bool check_inv = !loc.invariant.is_universe();
    std::vector<DecomposedSet> seen;
    auto stop = [&](int, const DecomposedSet& xk) {
      if (check_inv && !may_intersect(xk, inv_split[st.location], config)) return true;
      if (config.unbounded) {
        for (const auto& prev : seen) {
          if (is_subset_decomposed(xk, prev)) return true;
        }
        seen.push_back(xk);
      }
      return false;
    };
    if (config.unbounded) {
      // step 0 is compared too; it is produced before the predicate runs
      seen.push_back(decompose(dsys.omega0, s, config.kind));
    }
    Flowpipe fp = flowpipe_sparse(dsys, s, last, needed[st.location], config.kind, stop);
    passed[st.location].push_back(fp.steps.front());

    const int index = static_cast<int>(result.flowpipes.size());
    if (config.safe) {
      for (int k = 0; k < fp.size(); ++k) {
        if (check_safety_within(fp.steps[k], *config.safe, loc.invariant, config) == SafetyVerdict::Violation) {
          result.flowpipes.push_back({st.location, st.depth, st.time, std::move(fp), std::move(dsys)});
          result.verdict = Verdict::Unsafe;
          result.violation = ViolationInfo{index, st.location, k};
          fill_stats(result);
          return result;
        }
      }
    }

    if (st.depth >= config.jump_bound) {
      for (int t : outgoing[st.location]) {
        if (plans[t].never_enabled) continue;
        for (const auto& xk : fp.steps) {
          if (may_intersect(xk, plans[t].split, config)) {
            exhausted = true;
            break;
          }
        }
        if (exhausted) break;
      }
    } else {
      for (int t : outgoing[st.location]) {
        auto succ = discrete_post(plans[t], fp, dsys, config, st.time, st.depth);
        if (succ.empty()) continue;
        for (auto& c : cluster(succ, config.clustering, config.kind)) {
          ++result.stats.jumps_taken;
          if (fixpoint_check(c, passed)) {
            ++result.stats.fixpoints_hit;
            continue;
          }
          passed[c.location].push_back(std::get<DecomposedSet>(c.set));
          waiting.push_back(std::move(c));
        }
      }
    }
    result.flowpipes.push_back({st.location, st.depth, st.time, std::move(fp), std::move(dsys)});
  }

  result.verdict = exhausted ? Verdict::BoundExhausted : Verdict::Safe;
  fill_stats(result);
  return result;
}

}  // namespace blockreach
