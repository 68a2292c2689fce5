#include <doctest.h>

#include <fstream>
#include <map>
#include <sstream>

#include "blockreach/error.hpp"
#include "blockreach/models.hpp"
#include "blockreach/output.hpp"
#include "helpers.hpp"

using namespace blockreach;
using th::box;
using th::hs;
using th::vec;

namespace {

struct Row {
  int flowpipe, step;
  std::string location;
  double tlo, thi, a, b;
};

std::vector<Row> read_csv(const std::string& path, std::string* header) {
  std::ifstream in(path);
  std::getline(in, *header);
  std::vector<Row> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string f, loc, k, t0, t1, a, b;
    std::getline(ss, f, ',');
    std::getline(ss, loc, ',');
    std::getline(ss, k, ',');
    std::getline(ss, t0, ',');
    std::getline(ss, t1, ',');
    std::getline(ss, a, ',');
    std::getline(ss, b, ',');
    rows.push_back({std::stoi(f), std::stoi(k), loc, std::stod(t0), std::stod(t1), std::stod(a), std::stod(b)});
  }
  return rows;
}

}  // namespace

TEST_CASE("box projection has four vertices") {
  const DecomposedSet x = decompose(box({0, 1, 2}, {1, 3, 5}), BlockStructure::uniform(3, 1));
  const Polygon p = project_step(x, 0, 2);
  REQUIRE(p.size() == 4);
  double area = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const auto& u = p[i];
    const auto& v = p[(i + 1) % p.size()];
    area += u.x() * v.y() - u.y() * v.x();
  }
  CHECK(area / 2 == doctest::Approx(3.0));
}

TEST_CASE("octagon projection has at most eight vertices") {
  const HPolyhedron tri(2, {hs({-1, 0}, 0), hs({0, -1}, 0), hs({1, 1}, 1)});
  const DecomposedSet x = decompose(tri, BlockStructure({2}), TemplateKind::Octagon);
  const Polygon p = project_step(x, 0, 1);
  CHECK(p.size() >= 3);
  CHECK(p.size() <= 8);
  for (const auto& v : p) CHECK(v.x() + v.y() <= 1 + 1e-9);

  std::mt19937_64 rng(61);
  for (int t = 0; t < 20; ++t) {
    const DecomposedSet r = decompose(LazySet::linear_map(th::random_matrix(2, 2, rng), th::random_box(2, rng)),
                                      BlockStructure({2}), TemplateKind::Octagon);
    CHECK(project_step(r, 0, 1).size() <= 8);
  }
}

TEST_CASE("missing coordinates are rejected") {
  DecomposedSet x = decompose(box({0, 0}, {1, 1}), BlockStructure::uniform(2, 1));
  x.set_block(1, NotComputed{});
  CHECK_THROWS_AS(project_step(x, 0, 1), Error);
}

TEST_CASE("emitted boxes read back equal the stored steps") {
  const Model ex = running_example_model();
  ReachConfig c;
  c.delta = 0.25;
  c.horizon = 2.0;
  ReachResult r = reach(ex.automaton, ex.initial_states(), c);
  complete_for_projection(r, 0, 1);
  const std::string path = "test_output_tmp.csv";
  emit_flowpipe(r, ex.automaton, 0, 1, path);
  std::string header;
  const auto rows = read_csv(path, &header);
  std::remove(path.c_str());
  CHECK(header == "flowpipe,location,step,t_lo,t_hi,x1,x2");

  std::map<std::pair<int, int>, std::vector<Row>> by_step;
  for (const auto& row : rows) by_step[{row.flowpipe, row.step}].push_back(row);
  long steps = 0;
  for (const auto& rec : r.flowpipes) steps += rec.flowpipe.size();
  CHECK(static_cast<long>(by_step.size()) == steps);
  for (const auto& [key, vs] : by_step) {
    CHECK(vs.size() == 4);
    const auto& step = r.flowpipes[key.first].flowpipe.steps[key.second];
    const Hyperrectangle b0 = box_approximation(step.block_set(0));
    const Hyperrectangle b1 = box_approximation(step.block_set(1));
    double lo0 = 1e300, hi0 = -1e300, lo1 = 1e300, hi1 = -1e300;
    for (const auto& v : vs) {
      lo0 = std::min(lo0, v.a);
      hi0 = std::max(hi0, v.a);
      lo1 = std::min(lo1, v.b);
      hi1 = std::max(hi1, v.b);
      CHECK(v.location == "loc");
      CHECK(v.thi - v.tlo >= c.delta - 1e-12);
    }
    CHECK(lo0 == b0.low()(0));
    CHECK(hi0 == b0.high()(0));
    CHECK(lo1 == b1.low()(0));
    CHECK(hi1 == b1.high()(0));
  }
}

TEST_CASE("svg output and write errors") {
  const Model ex = running_example_model();
  ReachConfig c;
  c.delta = 0.25;
  c.horizon = 2.0;
  ReachResult r = reach(ex.automaton, ex.initial_states(), c);
  complete_for_projection(r, 0, 1);
  const std::string path = "test_output_tmp.svg";
  emit_svg(r, ex.automaton, 0, 1, path);
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  std::remove(path.c_str());
  CHECK(ss.str().find("<svg") != std::string::npos);
  CHECK(ss.str().find("<polygon") != std::string::npos);
  CHECK_THROWS_AS(emit_flowpipe(r, ex.automaton, 0, 1, "/nonexistent/dir/out.csv"), Error);
}
