// Command-line driver: load or generate a model, run the analysis, report.

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <regex>
#include <string>

#include <CLI11.hpp>

#include "blockreach/error.hpp"
#include "blockreach/hybrid.hpp"
#include "blockreach/models.hpp"
#include "blockreach/output.hpp"

using namespace blockreach;

namespace {

constexpr int kExitSafe = 0;
constexpr int kExitUnsafe = 1;
constexpr int kExitUsage = 2;
constexpr int kExitBound = 3;
constexpr int kExitInternal = 4;

Model generate(const std::string& name) {
  static const std::regex osc(R"(filtered-osc:(\d+))");
  std::smatch m;
  if (std::regex_match(name, m, osc)) return filtered_oscillator_model(std::stoi(m[1]));
  if (name == "running-example") return running_example_model();
  throw Error(ErrorKind::ConfigError, "unknown generator '" + name + "' (expected filtered-osc:K or running-example)");
}

int coordinate(const std::string& tok, const HybridAutomaton& h) {
  for (int i = 0; i < h.dim; ++i) {
    if (h.variables[i] == tok) return i;
  }
  try {
    std::size_t used = 0;
    const int i = std::stoi(tok, &used);
    if (used == tok.size() && i >= 0 && i < h.dim) return i;
  } catch (const std::exception&) {
  }
  throw Error(ErrorKind::ConfigError, "unknown coordinate '" + tok + "'");
}

// "c1*v1 + c2*v2 <= b" (or >=) as a half-space.
HalfSpace parse_halfspace(const std::string& expr, const HybridAutomaton& h) {
  std::string s;
  for (char c : expr) {
    if (!std::isspace(static_cast<unsigned char>(c))) s += c;
  }
  const bool ge = s.find(">=") != std::string::npos;
  const std::size_t op = s.find(ge ? ">=" : "<=");
  if (op == std::string::npos) throw Error(ErrorKind::ConfigError, "property needs <= or >=: " + expr);
  const std::string lhs = s.substr(0, op);
  double rhs = 0.0;
  try {
    rhs = std::stod(s.substr(op + 2));
  } catch (const std::exception&) {
    throw Error(ErrorKind::ConfigError, "bad right-hand side: " + expr);
  }
  Vector a = Vector::Zero(h.dim);
  static const std::regex term(R"(([+-]?)(?:([0-9.eE+-]+)\*)?([A-Za-z_][A-Za-z0-9_]*))");
  std::size_t pos = 0;
  for (std::sregex_iterator it(lhs.begin(), lhs.end(), term), end; it != end; ++it) {
    if (static_cast<std::size_t>(it->position()) != pos) throw Error(ErrorKind::ConfigError, "cannot parse: " + expr);
    pos += it->length();
    double c = (*it)[2].matched ? std::stod((*it)[2]) : 1.0;
    if ((*it)[1] == "-") c = -c;
    a(coordinate((*it)[3], h)) += c;
  }
  if (pos != lhs.size() || pos == 0) throw Error(ErrorKind::ConfigError, "cannot parse: " + expr);
  return ge ? HalfSpace{-a, -rhs} : HalfSpace{a, rhs};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reachability analysis of linear hybrid automata by block decomposition"};
  std::string model_path, gen_spec, template_name = "box", cluster_name = "hull", out_path, plot_dims, export_path;
  std::vector<std::string> safe_exprs;
  std::optional<double> delta, horizon;
  std::optional<int> jumps;
  int blocks = 1, parallel = 1;
  bool emit_stats = false, unbounded = false;

  auto* model_opt = app.add_option("--model", model_path, "model file (JSON)");
  auto* gen_opt = app.add_option("--gen", gen_spec, "built-in model: filtered-osc:K or running-example");
  model_opt->excludes(gen_opt);
  app.add_option("--delta", delta, "time step");
  app.add_option("--horizon", horizon, "time horizon per flowpipe");
  app.add_option("--jumps", jumps, "jump bound");
  app.add_option("--blocks", blocks, "block width")->check(CLI::IsMember({1, 2}));
  app.add_option("--template", template_name, "block template")->check(CLI::IsMember({"box", "octagon"}));
  app.add_option("--cluster", cluster_name, "clustering")->check(CLI::IsMember({"hull", "none"}));
  app.add_option("--out", out_path, "flowpipe projection output (CSV)");
  app.add_option("--plot", plot_dims, "projection coordinates d1,d2 (names or indices); also writes <out>.svg");
  app.add_option("--safe", safe_exprs, "replace the property by these half-spaces, e.g. \"y <= 0.5\"");
  app.add_flag("--emit-stats", emit_stats, "print statistics as a JSON line");
  app.add_flag("--unbounded", unbounded, "stop flowpipes once a step repeats an earlier one");
  app.add_option("--export", export_path, "write the model as JSON and exit");
  app.add_option("--parallel", parallel, "worker threads for block completion")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  if (const char* seed = std::getenv("BLOCKREACH_SEED")) {
    // no randomized choices are made; the seed is only echoed
    std::cout << "seed: " << seed << "\n";
  }

  try {
    if (model_path.empty() && gen_spec.empty()) throw Error(ErrorKind::ConfigError, "one of --model or --gen is required");
    Model model = model_path.empty() ? generate(gen_spec) : load_model(model_path);
    const HybridAutomaton& h = model.automaton;
    if (!export_path.empty()) {
      std::ofstream out(export_path);
      if (!(out << write_model(model))) throw Error(ErrorKind::IOError, "cannot write " + export_path);
      return kExitSafe;
    }

    ReachConfig config;
    config.delta = delta.value_or(model.defaults.delta);
    config.horizon = horizon.value_or(model.defaults.horizon);
    config.jump_bound = jumps.value_or(model.defaults.jumps);
    config.block_width = blocks;
    config.kind = template_name == "octagon" ? TemplateKind::Octagon : TemplateKind::Box;
    config.clustering = cluster_name == "none" ? Clustering::None : Clustering::Hull;
    config.unbounded = unbounded;
    config.threads = parallel;
    config.safe = model.safety;
    if (!safe_exprs.empty()) {
      std::vector<HalfSpace> cs;
      for (const auto& e : safe_exprs) cs.push_back(parse_halfspace(e, h));
      config.safe = HPolyhedron(h.dim, std::move(cs));
    }

    int d1 = 0, d2 = h.dim > 1 ? 1 : 0;
    if (!plot_dims.empty()) {
      const auto comma = plot_dims.find(',');
      if (comma == std::string::npos) throw Error(ErrorKind::ConfigError, "--plot expects d1,d2");
      d1 = coordinate(plot_dims.substr(0, comma), h);
      d2 = coordinate(plot_dims.substr(comma + 1), h);
    }
    if (!out_path.empty() && d1 == d2) throw Error(ErrorKind::ConfigError, "projection needs two distinct coordinates");

    std::cout << "model: " << (model.description.empty() ? model_path : model.description) << "\n";
    std::cout << "dimension: " << h.dim << ", locations: " << h.locations.size()
              << ", transitions: " << h.transitions.size() << "\n";

    const auto t0 = std::chrono::steady_clock::now();
    ReachResult result = reach(h, model.initial_states(), config);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    std::cout << "verdict: " << to_string(result.verdict) << "\n";
    if (result.violation) {
      const auto& v = *result.violation;
      std::cout << "violation: flowpipe " << v.flowpipe << ", location " << h.locations[v.location].name
                << ", step " << v.step << "\n";
    }
    std::cout << "time: " << secs << " s\n";
    const ReachStats& st = result.stats;
    std::cout << "sets_total: " << st.sets_total << "\n"
              << "sets_completed_highdim: " << st.sets_completed_highdim << "\n"
              << "jumps: " << st.jumps_taken << "\n"
              << "fixpoints: " << st.fixpoints_hit << "\n"
              << "flowpipes: " << st.flowpipes << "\n";
    if (emit_stats) {
      std::cout << "{\"verdict\":\"" << to_string(result.verdict) << "\",\"sets_total\":" << st.sets_total
                << ",\"sets_completed_highdim\":" << st.sets_completed_highdim << ",\"jumps\":" << st.jumps_taken
                << ",\"fixpoints\":" << st.fixpoints_hit << ",\"flowpipes\":" << st.flowpipes << "}\n";
    }

    if (!out_path.empty()) {
      complete_for_projection(result, d1, d2);
      emit_flowpipe(result, h, d1, d2, out_path);
      if (!plot_dims.empty()) emit_svg(result, h, d1, d2, out_path + ".svg");
    }

    switch (result.verdict) {
      case Verdict::Safe: return kExitSafe;
      case Verdict::Unsafe: return kExitUnsafe;
      case Verdict::BoundExhausted: return kExitBound;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    switch (e.kind()) {
      case ErrorKind::ParseError:
      case ErrorKind::ConfigError:
      case ErrorKind::DimensionMismatch:
      case ErrorKind::IOError: return kExitUsage;
      default: return kExitInternal;
    }
  }
  return kExitInternal;
}
