#pragma once

// Model files (JSON) and built-in model generators.

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "blockreach/hybrid.hpp"

namespace blockreach {

struct AnalysisDefaults {
  double delta = 0.01;
  double horizon = 1.0;
  int jumps = 5;
};

struct InitialRegion {
  int location = 0;
  std::variant<Hyperrectangle, HPolyhedron> set;

  LazySet lazy() const;
};

struct Model {
  std::string description;
  HybridAutomaton automaton;
  std::vector<InitialRegion> init;
  std::optional<HPolyhedron> safety;
  AnalysisDefaults defaults;

  std::vector<SymbolicState> initial_states() const;
};

/// Throws ParseError (with the offending field path) or DimensionMismatch.
Model parse_model(const std::string& text);
Model load_model(const std::string& path);
/// Canonical formatting: parse_model(write_model(m)) writes back byte-identically.
std::string write_model(const Model& m);

/// Oscillator (x, y) switching among four locations, k first-order filters
/// z1..zk in series behind x, and a jump counter t. Dimension k + 3.
HybridAutomaton generate_filtered_oscillator(int k);
/// The generated automaton with its initial set, property y <= 0.5 and
/// analysis defaults.
Model filtered_oscillator_model(int k);

/// Two dimensions, one location, constant drift along x1 and a self-loop
/// that shifts x1 back by one unit.
Model running_example_model();

}  // namespace blockreach
