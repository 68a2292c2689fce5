#include <doctest.h>

#include <fstream>
#include <set>
#include <sstream>

#include "blockreach/error.hpp"
#include "blockreach/models.hpp"

using namespace blockreach;

namespace {

const char* kMinimal = R"({
  "dimension": 2,
  "variables": ["a", "b"],
  "locations": [{"name": "only", "A": [[0, 0], [0, 0]]}],
  "init": [{"location": "only", "box": {"lo": [0, 0], "hi": [1, 1]}}]
})";

ErrorKind kind_of(const std::string& text, std::string* message = nullptr) {
  try {
    parse_model(text);
  } catch (const Error& e) {
    if (message) *message = e.what();
    return e.kind();
  }
  FAIL("no error thrown");
  return ErrorKind::IOError;
}

std::string replace(std::string s, const std::string& from, const std::string& to) {
  const auto pos = s.find(from);
  REQUIRE(pos != std::string::npos);
  return s.replace(pos, from.size(), to);
}

std::set<int> constrained_dims(const HybridAutomaton& h) {
  std::set<int> dims;
  auto add = [&](const HPolyhedron& p) {
    for (const auto& c : p.constraints())
      for (int i = 0; i < h.dim; ++i)
        if (c.normal(i) != 0.0) dims.insert(i);
  };
  for (const auto& l : h.locations) add(l.invariant);
  for (const auto& t : h.transitions) add(t.guard);
  return dims;
}

}  // namespace

TEST_CASE("minimal model") {
  const Model m = parse_model(kMinimal);
  CHECK(m.automaton.dim == 2);
  CHECK(m.automaton.locations.size() == 1);
  CHECK(m.automaton.transitions.empty());
  CHECK(m.automaton.locations[0].invariant.is_universe());
  CHECK_FALSE(m.safety.has_value());
  CHECK(m.init.size() == 1);
  CHECK(m.initial_states().size() == 1);
  CHECK(m.defaults.delta == 0.01);
}

TEST_CASE("constraints and resets") {
  const std::string text = R"({
  "dimension": 2,
  "variables": ["p", "q"],
  "locations": [
    {"name": "l1", "A": [[0, 1], [-1, 0]], "B": [[1], [0]], "U": {"lo": [-1], "hi": [1]},
     "invariant": [{"terms": {"p": 1, "q": 2}, "op": "<=", "rhs": 3}]},
    {"name": "l2", "A": {"rows": 2, "cols": 2, "entries": [[0, 1, 1.5]]}}
  ],
  "transitions": [
    {"source": "l1", "target": "l2", "guard": [{"terms": {"p": 1}, "op": "=", "rhs": 0.5}],
     "reset": {"M": [[1, 0], [0, 0]], "v": [0, 2]}}
  ],
  "init": [{"location": "l1", "constraints": [{"terms": {"q": 1}, "op": ">=", "rhs": -1},
           {"terms": {"q": 1}, "rhs": 1}, {"terms": {"p": 1}, "op": "=", "rhs": 0}]}],
  "safety": [{"terms": {"q": 1}, "rhs": 4}],
  "defaults": {"delta": 0.05, "horizon": 3, "jumps": 2}
})";
  const Model m = parse_model(text);
  const HybridAutomaton& h = m.automaton;
  CHECK(h.locations[1].flow.A(0, 1) == 1.5);
  CHECK(h.locations[1].flow.B.isZero());
  CHECK(h.locations[0].invariant.constraints()[0].normal(1) == 2.0);
  REQUIRE(h.transitions.size() == 1);
  CHECK(h.transitions[0].target == 1);
  CHECK(h.transitions[0].guard.constraints().size() == 2);
  CHECK(h.transitions[0].assignment.offset(1) == 2.0);
  CHECK(std::holds_alternative<HPolyhedron>(m.init[0].set));
  CHECK(m.safety->constraints().size() == 1);
  CHECK(m.defaults.jumps == 2);
  CHECK(write_model(parse_model(write_model(m))) == write_model(m));
}

TEST_CASE("round trip is byte stable") {
  for (const Model& m : {parse_model(kMinimal), running_example_model(), filtered_oscillator_model(4),
                         filtered_oscillator_model(16)}) {
    const std::string once = write_model(m);
    const Model back = parse_model(once);
    CHECK(write_model(back) == once);
    CHECK(back.automaton.dim == m.automaton.dim);
    CHECK(back.automaton.transitions.size() == m.automaton.transitions.size());
    for (std::size_t l = 0; l < m.automaton.locations.size(); ++l)
      CHECK(back.automaton.locations[l].flow.A == m.automaton.locations[l].flow.A);
  }
}

TEST_CASE("parse errors carry the field path") {
  std::string msg;
  CHECK(kind_of(replace(kMinimal, "\"dimension\": 2,", "\"dimension\": 2, \"colour\": 1,"), &msg) ==
        ErrorKind::ParseError);
  CHECK(msg.find("colour") != std::string::npos);
  CHECK(kind_of(replace(kMinimal, "\"name\": \"only\",", "\"name\": \"only\", \"flow\": 0,"), &msg) ==
        ErrorKind::ParseError);
  CHECK(msg.find("$.locations[0]") != std::string::npos);
  CHECK(kind_of("{ not json") == ErrorKind::ParseError);
  CHECK(kind_of(replace(kMinimal, "\"location\": \"only\"", "\"location\": \"nowhere\"")) == ErrorKind::ParseError);
  CHECK(kind_of(replace(kMinimal, "[[0, 0], [0, 0]]", "[[0, 0, 0], [0, 0, 0]]")) == ErrorKind::DimensionMismatch);
  CHECK(kind_of(replace(kMinimal, "\"hi\": [1, 1]", "\"hi\": [1]")) == ErrorKind::DimensionMismatch);
  CHECK(kind_of(replace(kMinimal, "\"dimension\": 2", "\"dimension\": 3")) == ErrorKind::DimensionMismatch);
}

TEST_CASE("load model from disk") {
  CHECK_THROWS_AS(load_model("/nonexistent/model.json"), Error);
  const std::string path = "test_models_tmp.json";
  {
    std::ofstream out(path);
    out << write_model(running_example_model());
  }
  CHECK(load_model(path).automaton.transitions.size() == 1);
  std::remove(path.c_str());
}

TEST_CASE("filtered oscillator dimensions") {
  const HybridAutomaton h4 = generate_filtered_oscillator(4);
  CHECK(h4.dim == 7);
  CHECK(h4.variables == std::vector<std::string>{"x", "y", "z1", "z2", "z3", "z4", "t"});
  for (int k : {1, 2, 4, 16, 64}) {
    const HybridAutomaton h = generate_filtered_oscillator(k);
    CHECK(h.dim == k + 3);
    CHECK_NOTHROW(h.validate());
    CHECK(h.locations.size() == 4);
    CHECK(constrained_dims(h) == std::set<int>{0, 1, k + 2});
    for (const auto& t : h.transitions) {
      const TransitionPlan p = precompute_gstar(h, static_cast<int>(&t - h.transitions.data()),
                                                BlockStructure::uniform(h.dim, 1));
      for (int b : p.guard_blocks) CHECK((b == 0 || b == 1 || b == k + 2));
    }
  }
  CHECK(generate_filtered_oscillator(1024).dim == 1027);
  CHECK_THROWS_AS(generate_filtered_oscillator(0), Error);
}

TEST_CASE("filter chain structure") {
  const HybridAutomaton h = generate_filtered_oscillator(1);
  const Matrix a = h.locations[0].flow.A.topLeftCorner(3, 3);
  const Eigen::RowVectorXd filter = a.row(2);
  CHECK((filter.array() != 0.0).count() == 2);
  CHECK(filter(0) == -filter(2));
  CHECK(filter(0) > 0.0);
  const HybridAutomaton h3 = generate_filtered_oscillator(3);
  for (int i = 3; i < 5; ++i) {
    const Eigen::RowVectorXd row = h3.locations[0].flow.A.row(i);
    CHECK((row.array() != 0.0).count() == 2);
    CHECK(row(i - 1) == -row(i));
  }
}

TEST_CASE("filtered oscillator model") {
  const Model m = filtered_oscillator_model(4);
  CHECK(m.init.size() == 1);
  CHECK(m.automaton.locations[m.init[0].location].name == "loc3");
  const auto& b = std::get<Hyperrectangle>(m.init[0].set);
  CHECK(b.low()(0) == 0.2);
  CHECK(b.high()(1) == 0.1);
  REQUIRE(m.safety.has_value());
  CHECK(m.safety->constraints()[0].normal(1) == 1.0);
  CHECK(m.safety->constraints()[0].offset == 0.5);
  CHECK(m.defaults.delta == 0.01);
}
