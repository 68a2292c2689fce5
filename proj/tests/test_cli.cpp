#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "blockreach/models.hpp"
#include <json.hpp>

namespace {

struct Run {
  int code;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(BLOCKREACH_CLI) + " " + args + " 2>&1";
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  std::string out;
  char buf[4096];
  while (std::size_t n = fread(buf, 1, sizeof buf, p)) out.append(buf, n);
  const int status = pclose(p);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string without_time(const std::string& s) {
  std::stringstream in(s);
  std::string line, out;
  while (std::getline(in, line))
    if (line.rfind("time:", 0) != 0) out += line + "\n";
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json stats_line(const std::string& out) {
  const auto pos = out.rfind("{\"verdict\"");
  REQUIRE(pos != std::string::npos);
  return nlohmann::json::parse(out.substr(pos, out.find('\n', pos) - pos));
}

const std::string kModels = MODELS_DIR;

}  // namespace

TEST_CASE("safe run exits with 0") {
  const Run r = run("--gen filtered-osc:4 --delta 0.01");
  CHECK(r.code == 0);
  CHECK(r.out.find("verdict: Safe") != std::string::npos);
  CHECK(r.out.find("sets_completed_highdim:") != std::string::npos);
  CHECK(run("--model " + kModels + "/running_example.json").code == 0);
}

TEST_CASE("violated property exits with 1 and names the step") {
  const Run r = run("--gen filtered-osc:4 --safe \"y <= -10\"");
  CHECK(r.code == 1);
  CHECK(r.out.find("verdict: Unsafe") != std::string::npos);
  CHECK(r.out.find("step 0") != std::string::npos);
}

TEST_CASE("usage and parse errors exit with 2") {
  CHECK(run("").code == 2);
  CHECK(run("--gen filtered-osc:4 --blocks 3").code == 2);
  CHECK(run("--gen filtered-osc:4 --template octagon").code == 2);
  CHECK(run("--gen filtered-osc:4 --delta -1").code == 2);
  CHECK(run("--gen nothing").code == 2);
  CHECK(run("--model /nonexistent.json").code == 2);
  CHECK(run("--gen filtered-osc:4 --safe \"w <= 1\"").code == 2);
  const std::string bad = "test_cli_bad.json";
  std::ofstream(bad) << R"({"dimension": 1, "variables": ["x"], "bogus": 0})";
  const Run r = run("--model " + bad);
  std::remove(bad.c_str());
  CHECK(r.code == 2);
  CHECK(r.out.find("bogus") != std::string::npos);
}

TEST_CASE("exhausted jump bound exits with 3") {
  CHECK(run("--gen running-example --jumps 0").code == 3);
}

TEST_CASE("output is deterministic") {
  const std::string args = "--gen filtered-osc:4 --out test_cli_a.csv --plot x,y";
  const Run a = run(args);
  const std::string csv_a = read_file("test_cli_a.csv"), svg_a = read_file("test_cli_a.csv.svg");
  const Run b = run(args);
  const std::string csv_b = read_file("test_cli_a.csv"), svg_b = read_file("test_cli_a.csv.svg");
  std::remove("test_cli_a.csv");
  std::remove("test_cli_a.csv.svg");
  CHECK(a.code == 0);
  CHECK(without_time(a.out) == without_time(b.out));
  CHECK(csv_a.rfind("flowpipe,location,step,t_lo,t_hi,x,y\n", 0) == 0);
  CHECK(csv_a == csv_b);
  CHECK(svg_a == svg_b);
  CHECK(svg_a.find("<svg") != std::string::npos);
}

TEST_CASE("two-dimensional octagon blocks") {
  const Run r = run("--gen filtered-osc:4 --blocks 2 --template octagon --emit-stats");
  CHECK(r.code == 0);
  CHECK(stats_line(r.out)["verdict"] == "Safe");
}

TEST_CASE("stats show partial high-dimensional completion") {
  const Run r = run("--gen filtered-osc:64 --delta 0.0005 --emit-stats");
  CHECK(r.code == 0);
  const auto s = stats_line(r.out);
  CHECK(s["sets_completed_highdim"].get<long>() < s["sets_total"].get<long>());
  CHECK(s["jumps"].get<long>() == 5);
}

TEST_CASE("export writes a loadable model") {
  const Run r = run("--gen filtered-osc:2 --export test_cli_model.json");
  CHECK(r.code == 0);
  const blockreach::Model m = blockreach::load_model("test_cli_model.json");
  std::remove("test_cli_model.json");
  CHECK(m.automaton.dim == 5);
}

TEST_CASE("shipped models load") {
  for (const char* name : {"running_example", "filtered_osc4", "filtered_osc16", "linear_switching", "spacecraft",
                           "platoon"}) {
    const std::string path = kModels + "/" + name + ".json";
    const blockreach::Model m = blockreach::load_model(path);
    CHECK(blockreach::write_model(m) == read_file(path));
  }
  CHECK(blockreach::load_model(kModels + "/platoon.json").automaton.dim == 10);
  CHECK(blockreach::load_model(kModels + "/spacecraft.json").automaton.dim == 5);
  CHECK(blockreach::load_model(kModels + "/linear_switching.json").automaton.dim == 5);
}
