#include "blockreach/decomposition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "blockreach/error.hpp"

namespace blockreach {

// ---------------------------------------------------------------------------
// BlockStructure

BlockStructure::BlockStructure(const std::vector<int>& sizes) {
  for (int sz : sizes) {
    if (sz <= 0) throw Error(ErrorKind::ConfigError, "block sizes must be positive");
    blocks_.push_back({dim_, sz});
    for (int i = 0; i < sz; ++i) owner_.push_back(static_cast<int>(blocks_.size()) - 1);
    dim_ += sz;
  }
}

BlockStructure BlockStructure::uniform(int dim, int width) {
  if (dim <= 0 || width <= 0) throw Error(ErrorKind::ConfigError, "invalid uniform block structure");
  std::vector<int> sizes;
  for (int start = 0; start < dim; start += width) sizes.push_back(std::min(width, dim - start));
  return BlockStructure(sizes);
}

std::vector<int> BlockStructure::coordinates(const std::vector<int>& block_ids) const {
  std::vector<int> out;
  for (int j : block_ids) {
    for (int i = blocks_[j].start; i < blocks_[j].end(); ++i) out.push_back(i);
  }
  return out;
}

std::vector<int> BlockStructure::all_blocks() const {
  std::vector<int> out(blocks_.size());
  std::iota(out.begin(), out.end(), 0);
  return out;
}

// ---------------------------------------------------------------------------
// DecomposedSet

namespace {

void check_block_dim(const BlockSet& set, int expected, int j) {
  int d = expected;
  if (const auto* b = std::get_if<Hyperrectangle>(&set)) d = b->dim();
  if (const auto* p = std::get_if<HPolyhedron>(&set)) d = p->dim();
  if (d != expected) {
    throw Error(ErrorKind::DimensionMismatch,
                "block " + std::to_string(j) + " has dimension " + std::to_string(d) +
                    ", expected " + std::to_string(expected));
  }
}

Matrix selection(int dim, const std::vector<int>& coords) {
  Matrix s = Matrix::Zero(static_cast<Eigen::Index>(coords.size()), dim);
  for (std::size_t k = 0; k < coords.size(); ++k) s(static_cast<Eigen::Index>(k), coords[k]) = 1.0;
  return s;
}

LazySet project(const LazySet& x, const Block& b) {
  std::vector<int> coords(b.size);
  std::iota(coords.begin(), coords.end(), b.start);
  return LazySet::linear_map(selection(x.dim(), coords), x);
}

std::vector<HalfSpace> constraints_of(const BlockSet& set, int j) {
  if (std::holds_alternative<NotComputed>(set)) {
    throw Error(ErrorKind::MissingBlock, "block " + std::to_string(j) + " is not computed");
  }
  if (const auto* b = std::get_if<Hyperrectangle>(&set)) return HPolyhedron::from_box(*b).constraints();
  if (const auto* p = std::get_if<HPolyhedron>(&set)) return p->constraints();
  return {};
}

void require_same_structure(const DecomposedSet& x, const DecomposedSet& y) {
  if (!(x.structure() == y.structure())) {
    throw Error(ErrorKind::StructureMismatch, "decomposed sets have different block structures");
  }
}

}  // namespace

DecomposedSet::DecomposedSet(BlockStructure structure, std::vector<BlockSet> blocks)
    : structure_(std::move(structure)), blocks_(std::move(blocks)) {
  if (static_cast<int>(blocks_.size()) != structure_.count()) {
    throw Error(ErrorKind::StructureMismatch, "block count does not match structure");
  }
  for (int j = 0; j < structure_.count(); ++j) check_block_dim(blocks_[j], structure_.block(j).size, j);
}

DecomposedSet DecomposedSet::not_computed(BlockStructure structure) {
  const int b = structure.count();
  return DecomposedSet(std::move(structure), std::vector<BlockSet>(b, NotComputed{}));
}

void DecomposedSet::set_block(int j, BlockSet set) {
  check_block_dim(set, structure_.block(j).size, j);
  blocks_[j] = std::move(set);
}

bool DecomposedSet::fully_computed() const {
  return std::none_of(blocks_.begin(), blocks_.end(),
                      [](const BlockSet& b) { return std::holds_alternative<NotComputed>(b); });
}

int DecomposedSet::computed_count() const {
  return static_cast<int>(std::count_if(blocks_.begin(), blocks_.end(), [](const BlockSet& b) {
    return !std::holds_alternative<NotComputed>(b);
  }));
}

LazySet DecomposedSet::block_set(int j) const {
  const BlockSet& b = blocks_[j];
  if (const auto* box = std::get_if<Hyperrectangle>(&b)) return *box;
  if (const auto* p = std::get_if<HPolyhedron>(&b)) return *p;
  if (std::holds_alternative<Universe>(b)) return HPolyhedron::universe(structure_.block(j).size);
  throw Error(ErrorKind::MissingBlock, "block " + std::to_string(j) + " is not computed");
}

LazySet DecomposedSet::to_lazy() const {
  // A product of boxes stays a box so that downstream support queries are cheap.
  bool all_boxes = true;
  for (const auto& b : blocks_) all_boxes = all_boxes && std::holds_alternative<Hyperrectangle>(b);
  if (all_boxes) {
    Vector c(structure_.dim()), r(structure_.dim());
    for (int j = 0; j < count(); ++j) {
      const auto& box = std::get<Hyperrectangle>(blocks_[j]);
      c.segment(structure_.block(j).start, box.dim()) = box.center();
      r.segment(structure_.block(j).start, box.dim()) = box.radius();
    }
    return Hyperrectangle(c, r);
  }
  std::vector<LazySet> parts;
  parts.reserve(blocks_.size());
  for (int j = 0; j < count(); ++j) parts.push_back(block_set(j));
  return LazySet::cartesian_product(std::move(parts));
}

bool DecomposedSet::contains(const Vector& x, double tol) const {
  for (int j = 0; j < count(); ++j) {
    const Block& blk = structure_.block(j);
    const Vector part = x.segment(blk.start, blk.size);
    if (const auto* b = std::get_if<Hyperrectangle>(&blocks_[j])) {
      if (!b->contains(part, tol)) return false;
    } else if (const auto* p = std::get_if<HPolyhedron>(&blocks_[j])) {
      if (!p->contains(part, tol)) return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Concretization

std::vector<Direction> block_template(int dim, TemplateKind kind) {
  if (kind == TemplateKind::Octagon && dim == 2) return octagon_directions(2);
  return box_directions(dim);
}

BlockSet concretize_block(const LazySet& set, TemplateKind kind) {
  if (kind == TemplateKind::Octagon && set.dim() == 2) {
    return template_overapprox(set, octagon_directions(2));
  }
  return box_approximation(set);
}

DecomposedSet concretize(const DecomposedSet& x, TemplateKind kind) {
  DecomposedSet out = x;
  for (int j = 0; j < x.count(); ++j) {
    if (!x.is_computed(j) || x.is_universe(j)) continue;
    if (kind == TemplateKind::Box && std::holds_alternative<Hyperrectangle>(x.block(j))) continue;
    if (const auto* p = std::get_if<HPolyhedron>(&x.block(j)); p && p->is_universe()) {
      out.set_block(j, Universe{});
      continue;
    }
    out.set_block(j, concretize_block(x.block_set(j), kind));
  }
  return out;
}

bool is_empty(const DecomposedSet& x) {
  for (int j = 0; j < x.count(); ++j) {
    if (const auto* p = std::get_if<HPolyhedron>(&x.block(j))) {
      if (is_empty(*p)) return true;
    }
  }
  return false;
}

DecomposedSet decompose(const LazySet& x, const BlockStructure& s, TemplateKind kind) {
  if (x.dim() != s.dim()) throw Error(ErrorKind::DimensionMismatch, "decompose: dimension mismatch");
  std::vector<BlockSet> blocks;
  blocks.reserve(s.count());
  if (const auto* box = x.as_box()) {
    for (const Block& b : s.blocks()) {
      blocks.emplace_back(Hyperrectangle(box->center().segment(b.start, b.size),
                                         box->radius().segment(b.start, b.size)));
    }
    return DecomposedSet(s, std::move(blocks));
  }
  for (const Block& b : s.blocks()) blocks.push_back(concretize_block(project(x, b), kind));
  return DecomposedSet(s, std::move(blocks));
}

// ---------------------------------------------------------------------------
// Constraint projection

std::vector<HPolyhedron> project_constraints(const HPolyhedron& p, const BlockStructure& s) {
  if (p.dim() != s.dim()) throw Error(ErrorKind::DimensionMismatch, "project_constraints: dimension mismatch");
  std::vector<std::vector<HalfSpace>> per_block(s.count());
  for (const auto& h : p.constraints()) {
    const auto touched = constrained_blocks(HPolyhedron(p.dim(), {h}), s);
    if (touched.size() != 1) continue;
    const Block& b = s.block(touched.front());
    per_block[touched.front()].push_back({h.normal.segment(b.start, b.size), h.offset});
  }
  std::vector<HPolyhedron> out;
  out.reserve(s.count());
  for (int j = 0; j < s.count(); ++j) out.emplace_back(s.block(j).size, std::move(per_block[j]));
  return out;
}

std::vector<HalfSpace> cross_block_constraints(const HPolyhedron& p, const BlockStructure& s) {
  std::vector<HalfSpace> out;
  for (const auto& h : p.constraints()) {
    if (constrained_blocks(HPolyhedron(p.dim(), {h}), s).size() > 1) out.push_back(h);
  }
  return out;
}

std::vector<int> constrained_blocks(const HPolyhedron& p, const BlockStructure& s) {
  if (p.dim() != s.dim()) throw Error(ErrorKind::DimensionMismatch, "constrained_blocks: dimension mismatch");
  std::vector<bool> hit(s.count(), false);
  for (const auto& h : p.constraints()) {
    for (int i = 0; i < h.normal.size(); ++i) {
      if (h.normal(i) != 0.0) hit[s.block_of(i)] = true;
    }
  }
  std::vector<int> out;
  for (int j = 0; j < s.count(); ++j) {
    if (hit[j]) out.push_back(j);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Intersection

DecomposedSet intersect_decomposed(const DecomposedSet& x, const std::vector<HPolyhedron>& y) {
  if (static_cast<int>(y.size()) != x.count()) {
    throw Error(ErrorKind::StructureMismatch, "intersect_decomposed: block count mismatch");
  }
  DecomposedSet out = x;
  for (int j = 0; j < x.count(); ++j) {
    if (y[j].dim() != x.structure().block(j).size) {
      throw Error(ErrorKind::DimensionMismatch, "intersect_decomposed: block dimension mismatch");
    }
    if (y[j].is_universe()) continue;
    if (x.is_universe(j)) {
      out.set_block(j, y[j]);
      continue;
    }
    std::vector<HalfSpace> cs = constraints_of(x.block(j), j);
    cs.insert(cs.end(), y[j].constraints().begin(), y[j].constraints().end());
    out.set_block(j, HPolyhedron(y[j].dim(), std::move(cs)));
  }
  return out;
}

EmptinessWitness emptiness_witness(const DecomposedSet& x, const std::vector<HPolyhedron>& y) {
  if (static_cast<int>(y.size()) != x.count()) {
    throw Error(ErrorKind::StructureMismatch, "emptiness_witness: block count mismatch");
  }
  for (int j = 0; j < x.count(); ++j) {
    if (y[j].is_universe() || !x.is_computed(j)) continue;
    if (x.is_universe(j)) {
      if (is_empty(y[j])) return {true, j};
      continue;
    }
    std::vector<HalfSpace> cs = constraints_of(x.block(j), j);
    cs.insert(cs.end(), y[j].constraints().begin(), y[j].constraints().end());
    if (is_empty(HPolyhedron(y[j].dim(), std::move(cs)))) return {true, j};
  }
  return {};
}

HPolyhedron cross_block_refine(const DecomposedSet& x, const HPolyhedron& p,
                               const std::vector<int>& blocks) {
  const BlockStructure& s = x.structure();
  if (p.dim() != s.dim()) throw Error(ErrorKind::DimensionMismatch, "cross_block_refine: dimension mismatch");
  const std::vector<int> coords = s.coordinates(blocks);
  const int m = static_cast<int>(coords.size());
  std::vector<int> local(s.dim(), -1);
  for (int k = 0; k < m; ++k) local[coords[k]] = k;

  std::vector<HalfSpace> cs;
  int offset = 0;
  for (int j : blocks) {
    const int sz = s.block(j).size;
    for (const auto& h : constraints_of(x.block(j), j)) {
      Vector a = Vector::Zero(m);
      a.segment(offset, sz) = h.normal;
      cs.push_back({std::move(a), h.offset});
    }
    offset += sz;
  }
  for (const auto& h : p.constraints()) {
    Vector a = Vector::Zero(m);
    for (int i = 0; i < h.normal.size(); ++i) {
      if (h.normal(i) == 0.0) continue;
      if (local[i] < 0) {
        throw Error(ErrorKind::DimensionMismatch,
                    "cross_block_refine: constraint touches coordinate " + std::to_string(i) +
                        " outside the selected blocks");
      }
      a(local[i]) = h.normal(i);
    }
    cs.push_back({std::move(a), h.offset});
  }
  return HPolyhedron(m, std::move(cs));
}

void write_back_blocks(DecomposedSet& x, const LazySet& set, const std::vector<int>& blocks,
                       TemplateKind kind) {
  const BlockStructure& s = x.structure();
  int offset = 0;
  for (int j : blocks) {
    const int sz = s.block(j).size;
    std::vector<int> coords(sz);
    std::iota(coords.begin(), coords.end(), offset);
    x.set_block(j, concretize_block(LazySet::linear_map(selection(set.dim(), coords), set), kind));
    offset += sz;
  }
}

double diameter_inf(const LazySet& x) {
  const Hyperrectangle box = box_approximation(x);
  return box.dim() == 0 ? 0.0 : 2.0 * box.radius().maxCoeff();
}

ErrorBound intersection_error_bound(const DecomposedSet& x, const HPolyhedron& y) {
  const BlockStructure& s = x.structure();
  if (y.dim() != s.dim()) throw Error(ErrorKind::DimensionMismatch, "intersection_error_bound: dimension mismatch");
  const Hyperrectangle ybox = box_approximation(y);  // throws Unbounded if Y is not compact
  double bound = 0.0;
  for (int j = 0; j < s.count(); ++j) {
    const Block& b = s.block(j);
    const double dy = 2.0 * ybox.radius().segment(b.start, b.size).maxCoeff();
    double dx = dy;
    if (!x.is_universe(j)) dx = diameter_inf(x.block_set(j));
    bound = std::max(bound, std::min(dx, dy));
  }
  return {bound};
}

// ---------------------------------------------------------------------------
// Affine map

DecomposedSet affine_map_decomposed(const Matrix& m, const Vector& v, const DecomposedSet& x,
                                    TemplateKind kind) {
  const BlockStructure& s = x.structure();
  if (m.rows() != s.dim() || m.cols() != s.dim() || v.size() != s.dim()) {
    throw Error(ErrorKind::DimensionMismatch, "affine_map_decomposed: dimension mismatch");
  }
  const int nb = s.count();
  // nonzero[i][j]: block M_ij has a nonzero entry
  std::vector<std::vector<bool>> nonzero(nb, std::vector<bool>(nb, false));
  for (int i = 0; i < nb; ++i) {
    for (int j = 0; j < nb; ++j) {
      const Block& bi = s.block(i);
      const Block& bj = s.block(j);
      nonzero[i][j] = !m.block(bi.start, bj.start, bi.size, bj.size).isZero(0.0);
    }
  }
  for (int j = 0; j < nb; ++j) {
    if (x.is_computed(j)) continue;
    for (int i = 0; i < nb; ++i) {
      if (i != j && nonzero[i][j]) {
        throw Error(ErrorKind::MissingBlock,
                    "affine map mixes block " + std::to_string(j) + ", which is not computed");
      }
    }
  }

  std::vector<BlockSet> out;
  out.reserve(nb);
  for (int i = 0; i < nb; ++i) {
    const Block& bi = s.block(i);
    const Vector vi = v.segment(bi.start, bi.size);
    bool missing = false;
    bool universe = false;
    bool all_boxes = true;
    for (int j = 0; j < nb; ++j) {
      if (!nonzero[i][j]) continue;
      missing = missing || !x.is_computed(j);
      universe = universe || x.is_universe(j);
      all_boxes = all_boxes && std::holds_alternative<Hyperrectangle>(x.block(j));
    }
    if (missing) {
      out.emplace_back(NotComputed{});
      continue;
    }
    if (universe) {
      out.emplace_back(Universe{});
      continue;
    }
    if (kind == TemplateKind::Box && all_boxes) {
      // Interval arithmetic is the exact box of a sum of mapped boxes.
      Vector c = vi;
      Vector r = Vector::Zero(bi.size);
      for (int j = 0; j < nb; ++j) {
        if (!nonzero[i][j]) continue;
        const Block& bj = s.block(j);
        const auto& box = std::get<Hyperrectangle>(x.block(j));
        const auto mij = m.block(bi.start, bj.start, bi.size, bj.size);
        c.noalias() += mij * box.center();
        r.noalias() += mij.cwiseAbs() * box.radius();
      }
      out.emplace_back(Hyperrectangle(c, r));
      continue;
    }
    std::vector<LazySet> terms;
    for (int j = 0; j < nb; ++j) {
      if (!nonzero[i][j]) continue;
      const Block& bj = s.block(j);
      terms.push_back(LazySet::linear_map(m.block(bi.start, bj.start, bi.size, bj.size), x.block_set(j)));
    }
    terms.push_back(LazySet::singleton(vi));
    out.push_back(concretize_block(LazySet::minkowski_sum(std::move(terms)), kind));
  }
  return DecomposedSet(s, std::move(out));
}

ErrorBound affine_map_error_bound(const Matrix& m, const BlockStructure& s, const DecomposedSet& x) {
  if (!(x.structure() == s)) throw Error(ErrorKind::StructureMismatch, "affine_map_error_bound: structure mismatch");
  const int nb = s.count();
  if (nb <= 1) return {0.0};
  double sum_weighted = 0.0;
  double alpha_max = 0.0;
  double diam_sum = 0.0;
  for (int j = 0; j < nb; ++j) {
    const Block& bj = s.block(j);
    std::vector<double> norms;
    for (int i = 0; i < nb; ++i) {
      const Block& bi = s.block(i);
      norms.push_back(m.block(bi.start, bj.start, bi.size, bj.size).cwiseAbs().rowwise().sum().maxCoeff());
    }
    std::sort(norms.begin(), norms.end(), std::greater<>());
    const double alpha = norms[1];
    const double diam = diameter_inf(x.block_set(j));
    sum_weighted += alpha * diam;
    alpha_max = std::max(alpha_max, alpha);
    diam_sum += diam;
  }
  const double first = static_cast<double>(nb - 1) * sum_weighted;
  const double second = 0.5 * static_cast<double>(s.dim()) * alpha_max * diam_sum;
  return {std::min(first, second)};
}

// ---------------------------------------------------------------------------
// Inclusion and convex hull

bool is_subset_decomposed(const DecomposedSet& x, const DecomposedSet& y) {
  require_same_structure(x, y);
  for (int j = 0; j < x.count(); ++j) {
    if (!x.is_computed(j) || !y.is_computed(j)) {
      throw Error(ErrorKind::MissingBlock, "is_subset_decomposed: block " + std::to_string(j) + " is not computed");
    }
    if (y.is_universe(j)) continue;
    if (x.is_universe(j)) return false;
    const auto* yb = std::get_if<Hyperrectangle>(&y.block(j));
    const auto* xb = std::get_if<Hyperrectangle>(&x.block(j));
    if (xb && yb) {
      if (((xb->center() - yb->center()).cwiseAbs() + xb->radius() - yb->radius()).maxCoeff() > kInclTol) {
        return false;
      }
      continue;
    }
    const HPolyhedron yp = yb ? HPolyhedron::from_box(*yb) : std::get<HPolyhedron>(y.block(j));
    if (!is_subset(x.block_set(j), yp)) return false;
  }
  return true;
}

DecomposedSet convex_hull_decomposed(const DecomposedSet& x, const DecomposedSet& y, TemplateKind kind) {
  require_same_structure(x, y);
  std::vector<BlockSet> out;
  out.reserve(x.count());
  for (int j = 0; j < x.count(); ++j) {
    if (!x.is_computed(j) || !y.is_computed(j)) {
      throw Error(ErrorKind::MissingBlock, "convex_hull_decomposed: block " + std::to_string(j) + " is not computed");
    }
    if (x.is_universe(j) || y.is_universe(j)) {
      out.emplace_back(Universe{});
      continue;
    }
    const auto* xb = std::get_if<Hyperrectangle>(&x.block(j));
    const auto* yb = std::get_if<Hyperrectangle>(&y.block(j));
    if (kind == TemplateKind::Box && xb && yb) {
      out.emplace_back(Hyperrectangle::from_bounds(xb->low().cwiseMin(yb->low()),
                                                   xb->high().cwiseMax(yb->high())));
      continue;
    }
    out.push_back(concretize_block(convex_hull(x.block_set(j), y.block_set(j)), kind));
  }
  return DecomposedSet(x.structure(), std::move(out));
}

ErrorBound convex_hull_error_bound(const DecomposedSet& x, const DecomposedSet& y) {
  require_same_structure(x, y);
  double radius = 0.0;
  double gap_sum = 0.0;
  for (int j = 0; j < x.count(); ++j) {
    const LazySet xj = x.block_set(j);
    const LazySet yj = y.block_set(j);
    const Hyperrectangle hull_box = box_approximation(convex_hull(xj, yj));
    radius = std::max(radius, hull_box.radius().maxCoeff());
    // The support gap is linear on each cell of the common normal fan cut by
    // the orthants; in at most two dimensions the cell rays are the axes and
    // the facet normals.
    std::vector<Direction> dirs = box_directions(xj.dim());
    bool polyhedral = false;
    for (const BlockSet* b : {&x.block(j), &y.block(j)}) {
      if (const auto* p = std::get_if<HPolyhedron>(b)) {
        polyhedral = true;
        for (const auto& c : p->constraints()) {
          if (!c.normal.isZero()) dirs.push_back(c.normal / c.normal.lpNorm<1>());
        }
      }
    }
    if (polyhedral && xj.dim() > 2) {
      gap_sum = std::numeric_limits<double>::infinity();
      continue;
    }
    double gap = 0.0;
    for (const auto& d : dirs) gap = std::max(gap, std::abs(xj.support(d) - yj.support(d)));
    gap_sum += gap;
  }
  return {std::min(radius, gap_sum)};
}

}  // namespace blockreach
