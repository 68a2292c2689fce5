#include "blockreach/models.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "blockreach/error.hpp"

namespace blockreach {

using Json = nlohmann::ordered_json;

LazySet InitialRegion::lazy() const {
  return std::visit([](const auto& s) { return LazySet(s); }, set);
}

std::vector<SymbolicState> Model::initial_states() const {
  std::vector<SymbolicState> out;
  for (const auto& r : init) out.push_back({r.location, r.lazy(), {0.0, 0.0}, 0});
  return out;
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw Error(ErrorKind::ParseError, path + ": " + msg);
}

void allow_keys(const Json& j, const std::string& path, std::initializer_list<const char*> keys) {
  if (!j.is_object()) fail(path, "expected an object");
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) fail(path, "unknown field '" + key + "'");
  }
}

const Json& field(const Json& j, const std::string& path, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) fail(path, std::string("missing field '") + key + "'");
  return *it;
}

double number(const Json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

int integer(const Json& j, const std::string& path) {
  if (!j.is_number_integer()) fail(path, "expected an integer");
  return j.get<int>();
}

std::string text(const Json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "expected a string");
  return j.get<std::string>();
}

Vector vector_of(const Json& j, const std::string& path, int size) {
  if (!j.is_array()) fail(path, "expected an array");
  if (size >= 0 && static_cast<int>(j.size()) != size) {
    throw Error(ErrorKind::DimensionMismatch,
                path + ": expected " + std::to_string(size) + " entries, got " + std::to_string(j.size()));
  }
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(i) = number(j[i], path + "[" + std::to_string(i) + "]");
  return v;
}

Matrix matrix_of(const Json& j, const std::string& path, int rows, int cols) {
  Matrix m;
  if (j.is_object()) {
    allow_keys(j, path, {"rows", "cols", "entries"});
    const int r = integer(field(j, path, "rows"), path + ".rows");
    const int c = integer(field(j, path, "cols"), path + ".cols");
    if (r < 0 || c < 0) fail(path, "negative size");
    m = Matrix::Zero(r, c);
    const Json& es = field(j, path, "entries");
    if (!es.is_array()) fail(path + ".entries", "expected an array");
    for (std::size_t e = 0; e < es.size(); ++e) {
      const std::string ep = path + ".entries[" + std::to_string(e) + "]";
      if (!es[e].is_array() || es[e].size() != 3) fail(ep, "expected [row, col, value]");
      const int i = integer(es[e][0], ep + "[0]");
      const int k = integer(es[e][1], ep + "[1]");
      if (i < 0 || i >= r || k < 0 || k >= c) fail(ep, "index out of range");
      m(i, k) = number(es[e][2], ep + "[2]");
    }
  } else if (j.is_array()) {
    const int r = static_cast<int>(j.size());
    const int c = r == 0 ? 0 : (j[0].is_array() ? static_cast<int>(j[0].size()) : -1);
    if (c < 0) fail(path, "expected an array of rows");
    m.resize(r, c);
    for (int i = 0; i < r; ++i) m.row(i) = vector_of(j[i], path + "[" + std::to_string(i) + "]", c).transpose();
  } else {
    fail(path, "expected a matrix (array of rows or sparse object)");
  }
  if ((rows >= 0 && m.rows() != rows) || (cols >= 0 && m.cols() != cols)) {
    throw Error(ErrorKind::DimensionMismatch, path + ": expected a " + std::to_string(rows) + "x" +
                                                  std::to_string(cols) + " matrix, got " +
                                                  std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
  return m;
}

struct Context {
  int dim;
  std::vector<std::string> variables;

  int variable(const std::string& name, const std::string& path) const {
    for (int i = 0; i < dim; ++i) {
      if (variables[i] == name) return i;
    }
    fail(path, "unknown variable '" + name + "'");
  }
};

void append_constraint(const Json& j, const std::string& path, const Context& ctx,
                       std::vector<HalfSpace>& out) {
  allow_keys(j, path, {"terms", "op", "rhs"});
  const Json& terms = field(j, path, "terms");
  if (!terms.is_object()) fail(path + ".terms", "expected an object");
  Vector a = Vector::Zero(ctx.dim);
  for (const auto& [name, coef] : terms.items()) {
    a(ctx.variable(name, path + ".terms")) += number(coef, path + ".terms." + name);
  }
  const double b = number(field(j, path, "rhs"), path + ".rhs");
  std::string op = "<=";
  if (j.contains("op")) op = text(j["op"], path + ".op");
  if (op == "<=") {
    out.push_back({a, b});
  } else if (op == ">=") {
    out.push_back({-a, -b});
  } else if (op == "=") {
    out.push_back({a, b});
    out.push_back({-a, -b});
  } else {
    fail(path + ".op", "expected one of <=, >=, =");
  }
}

HPolyhedron constraints_of(const Json& j, const std::string& path, const Context& ctx) {
  if (!j.is_array()) fail(path, "expected an array of constraints");
  std::vector<HalfSpace> cs;
  for (std::size_t i = 0; i < j.size(); ++i) append_constraint(j[i], path + "[" + std::to_string(i) + "]", ctx, cs);
  return HPolyhedron(ctx.dim, std::move(cs));
}

Hyperrectangle box_of(const Json& j, const std::string& path, int dim) {
  allow_keys(j, path, {"lo", "hi"});
  const Vector lo = vector_of(field(j, path, "lo"), path + ".lo", dim);
  const Vector hi = vector_of(field(j, path, "hi"), path + ".hi", dim);
  if ((hi - lo).minCoeff() < 0.0) fail(path, "lo exceeds hi");
  return Hyperrectangle::from_bounds(lo, hi);
}

int location_ref(const Json& j, const std::string& path, const HybridAutomaton& h) {
  const std::string name = text(j, path);
  const int idx = h.location_index(name);
  if (idx < 0) fail(path, "unknown location '" + name + "'");
  return idx;
}

}  // namespace

Model parse_model(const std::string& input) {
  Json doc;
  try {
    doc = Json::parse(input);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorKind::ParseError, std::string("malformed document: ") + e.what());
  }
  allow_keys(doc, "$", {"description", "dimension", "variables", "locations", "transitions", "init", "safety", "defaults"});

  Model m;
  if (doc.contains("description")) m.description = text(doc["description"], "$.description");
  HybridAutomaton& h = m.automaton;
  h.dim = integer(field(doc, "$", "dimension"), "$.dimension");
  if (h.dim <= 0) fail("$.dimension", "must be positive");

  const Json& vars = field(doc, "$", "variables");
  if (!vars.is_array()) fail("$.variables", "expected an array");
  if (static_cast<int>(vars.size()) != h.dim) {
    throw Error(ErrorKind::DimensionMismatch, "$.variables: expected " + std::to_string(h.dim) + " names");
  }
  for (std::size_t i = 0; i < vars.size(); ++i) {
    h.variables.push_back(text(vars[i], "$.variables[" + std::to_string(i) + "]"));
  }
  if (std::set<std::string>(h.variables.begin(), h.variables.end()).size() != h.variables.size()) {
    fail("$.variables", "duplicate variable name");
  }
  const Context ctx{h.dim, h.variables};

  const Json& locs = field(doc, "$", "locations");
  if (!locs.is_array() || locs.empty()) fail("$.locations", "expected a non-empty array");
  for (std::size_t l = 0; l < locs.size(); ++l) {
    const std::string p = "$.locations[" + std::to_string(l) + "]";
    const Json& lj = locs[l];
    allow_keys(lj, p, {"name", "A", "B", "U", "invariant"});
    Location loc{text(field(lj, p, "name"), p + ".name"), {}, HPolyhedron(h.dim)};
    if (h.location_index(loc.name) >= 0) fail(p + ".name", "duplicate location '" + loc.name + "'");
    loc.flow.A = matrix_of(field(lj, p, "A"), p + ".A", h.dim, h.dim);
    if (lj.contains("B")) {
      loc.flow.B = matrix_of(lj["B"], p + ".B", h.dim, -1);
      loc.flow.U = box_of(field(lj, p, "U"), p + ".U", static_cast<int>(loc.flow.B.cols()));
    } else {
      if (lj.contains("U")) fail(p + ".U", "input set given without B");
      loc.flow.B = Matrix::Zero(h.dim, 1);
      loc.flow.U = Hyperrectangle::from_interval({0.0, 0.0});
    }
    if (lj.contains("invariant")) loc.invariant = constraints_of(lj["invariant"], p + ".invariant", ctx);
    h.locations.push_back(std::move(loc));
  }

  if (doc.contains("transitions")) {
    const Json& ts = doc["transitions"];
    if (!ts.is_array()) fail("$.transitions", "expected an array");
    for (std::size_t t = 0; t < ts.size(); ++t) {
      const std::string p = "$.transitions[" + std::to_string(t) + "]";
      const Json& tj = ts[t];
      allow_keys(tj, p, {"source", "target", "guard", "reset"});
      Transition tr;
      tr.source = location_ref(field(tj, p, "source"), p + ".source", h);
      tr.target = location_ref(field(tj, p, "target"), p + ".target", h);
      tr.guard = tj.contains("guard") ? constraints_of(tj["guard"], p + ".guard", ctx) : HPolyhedron(h.dim);
      tr.assignment = Assignment::identity(h.dim);
      if (tj.contains("reset")) {
        const Json& r = tj["reset"];
        allow_keys(r, p + ".reset", {"M", "v"});
        if (r.contains("M")) tr.assignment.map = matrix_of(r["M"], p + ".reset.M", h.dim, h.dim);
        if (r.contains("v")) tr.assignment.offset = vector_of(r["v"], p + ".reset.v", h.dim);
      }
      h.transitions.push_back(std::move(tr));
    }
  }

  const Json& init = field(doc, "$", "init");
  if (!init.is_array() || init.empty()) fail("$.init", "expected a non-empty array");
  for (std::size_t i = 0; i < init.size(); ++i) {
    const std::string p = "$.init[" + std::to_string(i) + "]";
    const Json& ij = init[i];
    allow_keys(ij, p, {"location", "box", "constraints"});
    InitialRegion r{location_ref(field(ij, p, "location"), p + ".location", h), Hyperrectangle(Vector(), Vector())};
    if (ij.contains("box") == ij.contains("constraints")) fail(p, "give exactly one of 'box' or 'constraints'");
    if (ij.contains("box")) {
      r.set = box_of(ij["box"], p + ".box", h.dim);
    } else {
      r.set = constraints_of(ij["constraints"], p + ".constraints", ctx);
    }
    m.init.push_back(std::move(r));
  }

  if (doc.contains("safety") && !doc["safety"].is_null()) m.safety = constraints_of(doc["safety"], "$.safety", ctx);

  if (doc.contains("defaults")) {
    const Json& d = doc["defaults"];
    allow_keys(d, "$.defaults", {"delta", "horizon", "jumps"});
    if (d.contains("delta")) m.defaults.delta = number(d["delta"], "$.defaults.delta");
    if (d.contains("horizon")) m.defaults.horizon = number(d["horizon"], "$.defaults.horizon");
    if (d.contains("jumps")) m.defaults.jumps = integer(d["jumps"], "$.defaults.jumps");
  }

  try {
    h.validate();
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::DimensionMismatch) throw;
    throw Error(ErrorKind::ParseError, e.what());
  }
  return m;
}

Model load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IOError, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_model(ss.str());
}

// ---------------------------------------------------------------------------
// Writing

namespace {

Json vector_json(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Json matrix_json(const Matrix& m) {
  const Eigen::Index nnz = (m.array() != 0.0).count();
  if (nnz * 3 < m.rows() * m.cols()) {
    Json entries = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index k = 0; k < m.cols(); ++k) {
        if (m(i, k) != 0.0) entries.push_back(Json::array({i, k, m(i, k)}));
      }
    }
    return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"entries", std::move(entries)}};
  }
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vector_json(m.row(i).transpose()));
  return rows;
}

Json box_json(const Hyperrectangle& b) {
  return Json{{"lo", vector_json(b.low())}, {"hi", vector_json(b.high())}};
}

Json constraints_json(const HPolyhedron& p, const std::vector<std::string>& vars) {
  Json out = Json::array();
  for (const auto& h : p.constraints()) {
    Json terms = Json::object();
    for (Eigen::Index i = 0; i < h.normal.size(); ++i) {
      if (h.normal(i) != 0.0) terms[vars[i]] = h.normal(i);
    }
    out.push_back(Json{{"terms", std::move(terms)}, {"rhs", h.offset}});
  }
  return out;
}

}  // namespace

std::string write_model(const Model& m) {
  const HybridAutomaton& h = m.automaton;
  Json doc;
  if (!m.description.empty()) doc["description"] = m.description;
  doc["dimension"] = h.dim;
  doc["variables"] = h.variables;

  Json locs = Json::array();
  for (const auto& loc : h.locations) {
    const Hyperrectangle* u = loc.flow.U.as_box();
    if (!u) throw Error(ErrorKind::ConfigError, "location " + loc.name + ": input set must be a box to be written");
    Json lj;
    lj["name"] = loc.name;
    lj["A"] = matrix_json(loc.flow.A);
    lj["B"] = matrix_json(loc.flow.B);
    lj["U"] = box_json(*u);
    lj["invariant"] = constraints_json(loc.invariant, h.variables);
    locs.push_back(std::move(lj));
  }
  doc["locations"] = std::move(locs);

  Json ts = Json::array();
  for (const auto& tr : h.transitions) {
    Json tj;
    tj["source"] = h.locations[tr.source].name;
    tj["target"] = h.locations[tr.target].name;
    tj["guard"] = constraints_json(tr.guard, h.variables);
    const bool identity = tr.assignment.map.isIdentity(0.0) && tr.assignment.offset.isZero(0.0);
    if (!identity) {
      tj["reset"] = Json{{"M", matrix_json(tr.assignment.map)}, {"v", vector_json(tr.assignment.offset)}};
    }
    ts.push_back(std::move(tj));
  }
  doc["transitions"] = std::move(ts);

  Json init = Json::array();
  for (const auto& r : m.init) {
    Json ij;
    ij["location"] = h.locations[r.location].name;
    if (const auto* b = std::get_if<Hyperrectangle>(&r.set)) {
      ij["box"] = box_json(*b);
    } else {
      ij["constraints"] = constraints_json(std::get<HPolyhedron>(r.set), h.variables);
    }
    init.push_back(std::move(ij));
  }
  doc["init"] = std::move(init);
  if (m.safety) doc["safety"] = constraints_json(*m.safety, h.variables);
  doc["defaults"] = Json{{"delta", m.defaults.delta}, {"horizon", m.defaults.horizon}, {"jumps", m.defaults.jumps}};
  return doc.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Generators

namespace {

constexpr double kSlope = 0.714286;
constexpr double kFilterGain = 5.0;

HalfSpace half(int n, std::initializer_list<std::pair<int, double>> terms, double rhs) {
  Vector a = Vector::Zero(n);
  for (const auto& [i, c] : terms) a(i) = c;
  return {a, rhs};
}

}  // namespace

HybridAutomaton generate_filtered_oscillator(int k) {
  if (k < 1) throw Error(ErrorKind::ConfigError, "filter count must be at least 1");
  const int n = k + 3;
  const int x = 0, y = 1, t = n - 1;
  HybridAutomaton h;
  h.dim = n;
  h.variables = {"x", "y"};
  for (int i = 1; i <= k; ++i) h.variables.push_back("z" + std::to_string(i));
  h.variables.push_back("t");

  auto flow = [&](double cx, double cy) {
    LTISystem sys;
    sys.A = Matrix::Zero(n, n);
    sys.A(x, x) = -2.0;
    sys.A(y, y) = -1.0;
    sys.A(2, x) = kFilterGain;
    sys.A(2, 2) = -kFilterGain;
    for (int i = 3; i < 2 + k; ++i) {
      sys.A(i, i - 1) = kFilterGain;
      sys.A(i, i) = -kFilterGain;
    }
    sys.B = Matrix::Zero(n, 1);
    sys.B(x, 0) = cx;
    sys.B(y, 0) = cy;
    sys.U = Hyperrectangle::from_interval({1.0, 1.0});
    return sys;
  };

  // sign of x and of the switching line 0.714286 x + y
  auto invariant = [&](bool x_nonneg, bool line_nonneg) {
    const double sx = x_nonneg ? -1.0 : 1.0;
    const double sl = line_nonneg ? -1.0 : 1.0;
    return HPolyhedron(n, {half(n, {{x, sx}}, 0.0), half(n, {{x, sl * kSlope}, {y, sl}}, 0.0)});
  };
  h.locations = {
      {"loc1", flow(1.4, -0.7), invariant(false, true)},
      {"loc2", flow(-1.4, 0.7), invariant(false, false)},
      {"loc3", flow(1.4, -0.7), invariant(true, true)},
      {"loc4", flow(-1.4, 0.7), invariant(true, false)},
  };

  // jumps are counted in t; at most five are enabled
  const HalfSpace counter = half(n, {{t, 1.0}}, 4.5);
  Assignment bump = Assignment::identity(n);
  bump.offset(t) = 1.0;
  auto on_line = [&] {
    return std::vector<HalfSpace>{half(n, {{x, kSlope}, {y, 1.0}}, 0.0), half(n, {{x, -kSlope}, {y, -1.0}}, 0.0),
                                  counter};
  };
  auto on_axis = [&] {
    return std::vector<HalfSpace>{half(n, {{x, 1.0}}, 0.0), half(n, {{x, -1.0}}, 0.0), counter};
  };
  h.transitions = {
      {2, 3, HPolyhedron(n, on_line()), bump},
      {3, 1, HPolyhedron(n, on_axis()), bump},
      {1, 0, HPolyhedron(n, on_line()), bump},
      {0, 2, HPolyhedron(n, on_axis()), bump},
  };
  return h;
}

Model filtered_oscillator_model(int k) {
  Model m;
  m.automaton = generate_filtered_oscillator(k);
  const int n = m.automaton.dim;
  m.description = "filtered oscillator with " + std::to_string(k) + " filters";
  Vector lo = Vector::Zero(n), hi = Vector::Zero(n);
  lo(0) = 0.2;
  hi(0) = 0.3;
  lo(1) = -0.1;
  hi(1) = 0.1;
  m.init.push_back({2, Hyperrectangle::from_bounds(lo, hi)});
  m.safety = HPolyhedron(n, {half(n, {{1, 1.0}}, 0.5)});
  m.defaults = {0.01, 4.0, 5};
  return m;
}

Model running_example_model() {
  Model m;
  HybridAutomaton& h = m.automaton;
  h.dim = 2;
  h.variables = {"x1", "x2"};
  LTISystem sys;
  sys.A = Matrix::Zero(2, 2);
  sys.B = Matrix::Zero(2, 1);
  sys.B(0, 0) = 1.0;
  sys.U = Hyperrectangle::from_interval({1.0, 1.0});
  h.locations.push_back({"loc", sys, HPolyhedron(2, {half(2, {{0, 1.0}}, 1.2)})});
  Assignment shift = Assignment::identity(2);
  shift.offset(0) = -1.0;
  h.transitions.push_back({0, 0, HPolyhedron(2, {half(2, {{0, -1.0}}, -1.0)}), shift});
  m.description = "drift along x1 with a self-loop shifting x1 back by one";
  m.init.push_back({0, Hyperrectangle::from_bounds(Vector::Zero(2), Vector::Constant(2, 0.2))});
  m.safety = HPolyhedron(2, {half(2, {{0, 1.0}}, 2.0), half(2, {{1, 1.0}}, 1.0)});
  m.defaults = {0.25, 2.0, 5};
  return m;
}

}  // namespace blockreach
