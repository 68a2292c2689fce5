#include <doctest.h>

#include "blockreach/decomposition.hpp"
#include "blockreach/error.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace blockreach;
using th::box;
using th::hs;
using th::mat;
using th::vec;

namespace {

const BlockStructure kOnes2 = BlockStructure::uniform(2, 1);

DecomposedSet boxes(const BlockStructure& s, const Hyperrectangle& b) { return decompose(b, s); }

Hyperrectangle block_box(const DecomposedSet& x, int j) { return box_approximation(x.block_set(j)); }

void check_interval(const DecomposedSet& x, int j, double lo, double hi) {
  const Hyperrectangle b = block_box(x, j);
  CHECK(b.low()(0) == doctest::Approx(lo));
  CHECK(b.high()(0) == doctest::Approx(hi));
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error thrown");
  return ErrorKind::IOError;
}

}  // namespace

TEST_CASE("block structures") {
  const BlockStructure s({2, 1, 3});
  CHECK(s.dim() == 6);
  CHECK(s.count() == 3);
  CHECK(s.block(2).start == 3);
  CHECK(s.block_of(4) == 2);
  CHECK(s.coordinates({0, 2}) == std::vector<int>{0, 1, 3, 4, 5});
  const BlockStructure u = BlockStructure::uniform(5, 2);
  CHECK(u.count() == 3);
  CHECK(u.block(2).size == 1);
  CHECK_THROWS_AS(BlockStructure({0, 2}), Error);
}

TEST_CASE("decompose") {
  const HPolyhedron tri(2, {hs({-1, 0}, 0), hs({0, -1}, 0), hs({1, 1}, 1)});
  const DecomposedSet d = decompose(tri, kOnes2);
  check_interval(d, 0, 0, 1);
  check_interval(d, 1, 0, 1);

  const Hyperrectangle b = box({0, 1, 2}, {1, 3, 4});
  const DecomposedSet db = decompose(b, BlockStructure({2, 1}));
  const auto* b0 = std::get_if<Hyperrectangle>(&db.block(0));
  REQUIRE(b0 != nullptr);
  CHECK((b0->low() - vec({0, 1})).norm() < 1e-12);
  CHECK((b0->high() - vec({1, 3})).norm() < 1e-12);
  CHECK(d.contains(vec({0.9, 0.9})));

  const DecomposedSet oct = decompose(tri, BlockStructure({2}), TemplateKind::Octagon);
  CHECK(std::holds_alternative<HPolyhedron>(oct.block(0)));
  CHECK_FALSE(oct.contains(vec({0.9, 0.9})));
}

TEST_CASE("decomposition error stays below the box radius") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 40; ++trial) {
    const HPolyhedron p = oracle::random_polytope(4, 3, rng);
    const auto verts = oracle::vertices(p);
    const BlockStructure s = th::random_structure(4, 2, rng);
    const DecomposedSet d = decompose(p, s);
    const LazySet dl = d.to_lazy();
    const Hyperrectangle bb = box_approximation(p);
    const auto dirs = oracle::dense_directions(4, 16, 50, rng);
    const double h = oracle::hausdorff([&](const Vector& v) { return oracle::support(verts, v); },
                                       [&](const Vector& v) { return dl.support(v); }, dirs);
    CHECK(h <= bb.radius().maxCoeff() + 1e-7);
    for (const auto& v : verts) CHECK(d.contains(v, 1e-9));
  }
}

TEST_CASE("project constraints and constrained blocks") {
  const HPolyhedron g(2, {hs({1, 0}, 0.5)});
  const auto pc = project_constraints(g, kOnes2);
  CHECK(pc[0].size() == 1);
  CHECK(pc[1].is_universe());
  CHECK(constrained_blocks(g, kOnes2) == std::vector<int>{0});

  const HPolyhedron diag(2, {hs({1, -1}, 0), hs({-1, 1}, 0)});
  const auto pd = project_constraints(diag, kOnes2);
  CHECK(pd[0].is_universe());
  CHECK(pd[1].is_universe());
  CHECK(constrained_blocks(diag, kOnes2) == std::vector<int>{0, 1});
  CHECK(cross_block_constraints(diag, kOnes2).size() == 2);

  const auto pu = project_constraints(HPolyhedron::universe(2), kOnes2);
  CHECK(pu[0].is_universe());
  CHECK(pu[1].is_universe());
  CHECK(constrained_blocks(HPolyhedron::universe(2), kOnes2).empty());
}

TEST_CASE("block-wise intersection") {
  const DecomposedSet x = boxes(kOnes2, box({0, 0}, {2, 1}));
  const DecomposedSet r = intersect_decomposed(x, {HPolyhedron(1, {hs({-1}, -1.5)}), HPolyhedron(1)});
  check_interval(r, 0, 1.5, 2);
  check_interval(r, 1, 0, 1);
  CHECK_FALSE(is_empty(r));

  const std::vector<HPolyhedron> far{HPolyhedron(1, {hs({-1}, -3)}), HPolyhedron(1)};
  CHECK(is_empty(intersect_decomposed(x, far)));
  const EmptinessWitness w = emptiness_witness(x, far);
  CHECK(w.empty);
  CHECK(w.block == 0);
}

TEST_CASE("intersection with a NotComputed block") {
  DecomposedSet x = DecomposedSet::not_computed(kOnes2);
  x.set_block(0, Hyperrectangle::from_interval({0, 2}));
  // the witness never needs the missing block
  const EmptinessWitness w = emptiness_witness(x, {HPolyhedron(1, {hs({-1}, -3)}), HPolyhedron(1, {hs({1}, 0)})});
  CHECK(w.empty);
  CHECK(w.block == 0);
  // the full intersection does
  CHECK(kind_of([&] { intersect_decomposed(x, {HPolyhedron(1), HPolyhedron(1, {hs({1}, 0)})}); }) ==
        ErrorKind::MissingBlock);
  // unconstrained missing blocks are left alone
  const DecomposedSet r = intersect_decomposed(x, {HPolyhedron(1, {hs({1}, 1)}), HPolyhedron(1)});
  CHECK_FALSE(r.is_computed(1));
}

TEST_CASE("emptiness witness is one-sided") {
  const DecomposedSet x = boxes(kOnes2, box({0, 0}, {1, 1}));
  const HPolyhedron y(2, {hs({1, 1}, -1)});
  CHECK_FALSE(emptiness_witness(x, project_constraints(y, kOnes2)).empty);
  CHECK_FALSE(emptiness_witness(x, {HPolyhedron(1), HPolyhedron(1)}).empty);
}

TEST_CASE("random decomposed intersections match the exact oracle") {
  std::mt19937_64 rng(32);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + trial % 3;
    const BlockStructure s = th::random_structure(n, 2, rng);
    const DecomposedSet x = boxes(s, th::random_box(n, rng));
    std::vector<HPolyhedron> yb;
    std::vector<HalfSpace> full;
    for (int j = 0; j < s.count(); ++j) {
      const int sz = s.block(j).size;
      std::vector<HalfSpace> cs;
      std::uniform_real_distribution<double> u(-1.0, 1.0);
      for (int k = 0; k < 2; ++k) {
        HalfSpace h{th::random_direction(sz, rng), u(rng)};
        cs.push_back(h);
        Vector a = Vector::Zero(n);
        a.segment(s.block(j).start, sz) = h.normal;
        full.push_back({a, h.offset});
      }
      yb.emplace_back(sz, cs);
    }
    const HPolyhedron whole = intersection(HPolyhedron::from_box(box_approximation(x.to_lazy())), HPolyhedron(n, full));
    const bool empty = !oracle::feasible_exact(whole);
    CHECK(is_empty(intersect_decomposed(x, yb)) == empty);
    CHECK(emptiness_witness(x, yb).empty == empty);
  }
}

TEST_CASE("cross-block refinement is exact on the touched blocks") {
  // 10-D set, guard x1 = x2 touching two 1-D blocks
  const BlockStructure s = BlockStructure::uniform(10, 1);
  Vector lo = Vector::Zero(10), hi = Vector::Ones(10);
  lo(1) = 0.5;
  hi(1) = 2.0;
  const DecomposedSet x = decompose(Hyperrectangle::from_bounds(lo, hi), s);
  Vector a = Vector::Zero(10);
  a(0) = 1.0;
  a(1) = -1.0;
  const HPolyhedron g(10, {{a, 0.0}, {-a, 0.0}});
  const HPolyhedron r = cross_block_refine(x, g, {0, 1});
  CHECK(r.dim() == 2);
  // exact 2-D intersection is the segment from (0.5, 0.5) to (1, 1)
  CHECK(r.support(vec({1, 0})) == doctest::Approx(1.0));
  CHECK(r.support(vec({-1, 0})) == doctest::Approx(-0.5));
  CHECK(r.support(vec({1, -1})) == doctest::Approx(0.0));

  const HPolyhedron prod = cross_block_refine(x, HPolyhedron::universe(10), {0, 1});
  CHECK(prod.support(vec({0, 1})) == doctest::Approx(2.0));

  DecomposedSet partial = x;
  partial.set_block(1, NotComputed{});
  CHECK(kind_of([&] { cross_block_refine(partial, g, {0, 1}); }) == ErrorKind::MissingBlock);
}

TEST_CASE("random two-block refinements match the vertex oracle") {
  std::mt19937_64 rng(33);
  for (int trial = 0; trial < 40; ++trial) {
    const BlockStructure s({1, 2, 1});
    const Hyperrectangle b = th::random_box(4, rng);
    const DecomposedSet x = decompose(b, s);
    // a constraint coupling blocks 0 and 1 through the center of the box
    Vector a = Vector::Zero(4);
    a.head(3) = th::random_direction(3, rng);
    const HPolyhedron p(4, {{a, a.dot(b.center())}});
    const HPolyhedron r = cross_block_refine(x, p, {0, 1});
    std::vector<HalfSpace> cs = HPolyhedron::from_box(Hyperrectangle(b.center().head(3), b.radius().head(3))).constraints();
    cs.push_back({a.head(3), a.dot(b.center())});
    const auto verts = oracle::vertices(HPolyhedron(3, cs));
    for (int k = 0; k < 10; ++k) {
      const Vector d = th::random_direction(3, rng);
      CHECK(r.support(d) == doctest::Approx(oracle::support(verts, d)).epsilon(1e-9));
    }
  }
}

TEST_CASE("write-back keeps the projection") {
  DecomposedSet x = boxes(kOnes2, box({0, 0}, {2, 2}));
  const HPolyhedron seg(2, {hs({1, -1}, 0), hs({-1, 1}, 0), hs({1, 0}, 1), hs({-1, 0}, 0)});
  write_back_blocks(x, seg, {0, 1}, TemplateKind::Box);
  check_interval(x, 0, 0, 1);
  check_interval(x, 1, 0, 1);
}

TEST_CASE("intersection error bound") {
  const DecomposedSet x = boxes(kOnes2, box({0, 0}, {1, 0.5}));
  const HPolyhedron seg(2, {hs({-2, 1}, 0.5), hs({2, -1}, -0.5), hs({1, 0}, 1), hs({-1, 0}, 0)});
  CHECK(intersection_error_bound(x, seg).value == doctest::Approx(1.0));
  const HPolyhedron point(2, {hs({1, 0}, 0.5), hs({-1, 0}, -0.5), hs({0, 1}, 0.25), hs({0, -1}, -0.25)});
  CHECK(intersection_error_bound(x, point).value == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(kind_of([&] { intersection_error_bound(x, HPolyhedron(2, {hs({1, 0}, 0.5)})); }) == ErrorKind::Unbounded);
}

TEST_CASE("affine map examples") {
  const DecomposedSet x = boxes(kOnes2, box({0, 0}, {1, 1}));
  const DecomposedSet d = affine_map_decomposed(mat({{2, 0}, {0, 3}}), vec({1, -1}), x);
  check_interval(d, 0, 1, 3);
  check_interval(d, 1, -1, 2);

  const DecomposedSet y = boxes(kOnes2, box({0, 2}, {1, 3}));
  const DecomposedSet sw = affine_map_decomposed(mat({{0, 1}, {1, 0}}), vec({0, 0}), y);
  check_interval(sw, 0, 2, 3);
  check_interval(sw, 1, 0, 1);

  CHECK(kind_of([&] { affine_map_decomposed(Matrix::Identity(3, 3), Vector::Zero(3), x); }) ==
        ErrorKind::DimensionMismatch);
}

TEST_CASE("affine map with missing blocks") {
  DecomposedSet x = DecomposedSet::not_computed(kOnes2);
  x.set_block(0, Hyperrectangle::from_interval({0, 1}));
  // identity leaves block 1 missing
  const DecomposedSet id = affine_map_decomposed(Matrix::Identity(2, 2), vec({1, 0}), x);
  check_interval(id, 0, 1, 2);
  CHECK_FALSE(id.is_computed(1));
  // mixing the missing block into block 0 is an error
  CHECK(kind_of([&] { affine_map_decomposed(mat({{1, 1}, {0, 1}}), vec({0, 0}), x); }) == ErrorKind::MissingBlock);
}

TEST_CASE("affine map error bound") {
  const BlockStructure s = BlockStructure::uniform(4, 2);
  std::mt19937_64 rng(34);
  const DecomposedSet x = decompose(th::random_box(4, rng), s);
  Matrix bd = Matrix::Zero(4, 4);
  bd.topLeftCorner(2, 2) = th::random_matrix(2, 2, rng);
  bd.bottomRightCorner(2, 2) = th::random_matrix(2, 2, rng);
  CHECK(affine_map_error_bound(bd, s, x).value == doctest::Approx(0.0));
  const BlockStructure one({4});
  CHECK(affine_map_error_bound(th::random_matrix(4, 4, rng), one, decompose(th::random_box(4, rng), one)).value ==
        doctest::Approx(0.0));
}

TEST_CASE("random affine maps contain the exact image within the bound") {
  std::mt19937_64 rng(35);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 2 + trial % 4;
    const BlockStructure s = th::random_structure(n, 1 + trial % 2, rng);
    const Hyperrectangle b = th::random_box(n, rng);
    const DecomposedSet x = decompose(b, s);
    const Matrix m = th::random_matrix(n, n, rng);
    const Vector v = th::random_direction(n, rng);
    const LazySet exact = LazySet::affine_map(m, v, b);
    const DecomposedSet approx = affine_map_decomposed(m, v, x);
    const LazySet al = approx.to_lazy();
    for (int k = 0; k < 100; ++k) {
      const Vector d = th::random_direction(n, rng);
      CHECK(exact.support(d) <= al.support(d) + 1e-9);
    }
    if (s.count() == n) {
      // interval blocks: the concretized map equals the decomposed formula
      const auto dirs = oracle::dense_directions(n, 16, 20, rng);
      const double h = oracle::hausdorff([&](const Vector& d) { return exact.support(d); },
                                         [&](const Vector& d) { return al.support(d); }, dirs);
      CHECK(h <= affine_map_error_bound(m, s, x).value + 1e-7);
    }
  }
}

TEST_CASE("decomposed inclusion") {
  const DecomposedSet a = boxes(kOnes2, box({0, 0}, {1, 1}));
  const DecomposedSet b = boxes(kOnes2, box({-1, -1}, {2, 2}));
  const DecomposedSet c = boxes(kOnes2, box({0, 0}, {1, 3}));
  CHECK(is_subset_decomposed(a, b));
  CHECK_FALSE(is_subset_decomposed(c, b));
  DecomposedSet u = b;
  u.set_block(1, Universe{});
  CHECK(is_subset_decomposed(c, u));
  CHECK_FALSE(is_subset_decomposed(u, c));
  CHECK(kind_of([&] { is_subset_decomposed(a, boxes(BlockStructure({2}), box({0, 0}, {1, 1}))); }) ==
        ErrorKind::StructureMismatch);
  DecomposedSet missing = a;
  missing.set_block(0, NotComputed{});
  CHECK(kind_of([&] { is_subset_decomposed(missing, b); }) == ErrorKind::MissingBlock);
}

TEST_CASE("decomposed convex hull") {
  const DecomposedSet a = boxes(kOnes2, box({0, 0}, {1, 1}));
  const DecomposedSet b = boxes(kOnes2, box({2, 2}, {3, 3}));
  const DecomposedSet h = convex_hull_decomposed(a, b);
  check_interval(h, 0, 0, 3);
  check_interval(h, 1, 0, 3);
  const DecomposedSet same = convex_hull_decomposed(a, a);
  CHECK(is_subset_decomposed(same, a));
  CHECK(is_subset_decomposed(a, same));

  CHECK(convex_hull_error_bound(a, a).value == doctest::Approx(0.0));
  CHECK(convex_hull_error_bound(a, b).value == doctest::Approx(1.5));
}

TEST_CASE("random hulls contain the exact hull within the bound") {
  std::mt19937_64 rng(36);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 2 + trial % 4;
    const BlockStructure s = th::random_structure(n, 2, rng);
    const Hyperrectangle bx = th::random_box(n, rng), by = th::random_box(n, rng);
    const DecomposedSet x = decompose(bx, s), y = decompose(by, s);
    const LazySet hull = convex_hull(bx, by);
    const LazySet approx = convex_hull_decomposed(x, y).to_lazy();
    const auto dirs = oracle::dense_directions(n, 16, 20, rng);
    for (const auto& d : dirs) CHECK(hull.support(d) <= approx.support(d) + 1e-9);
    const double h = oracle::hausdorff([&](const Vector& d) { return hull.support(d); },
                                       [&](const Vector& d) { return approx.support(d); }, dirs);
    CHECK(h <= convex_hull_error_bound(x, y).value + 1e-7);
  }
}
