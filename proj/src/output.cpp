#include "blockreach/output.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>

#include "blockreach/error.hpp"

namespace blockreach {

namespace {

Interval coordinate_range(const DecomposedSet& step, int d) {
  const BlockStructure& s = step.structure();
  const int j = s.block_of(d);
  if (!step.is_computed(j)) throw Error(ErrorKind::MissingBlock, "coordinate " + std::to_string(d) + " is not computed");
  const int local = d - s.block(j).start;
  Vector e = Vector::Zero(s.block(j).size);
  e(local) = 1.0;
  const LazySet b = step.block_set(j);
  return {-b.support(-e), b.support(e)};
}

// Vertices of a bounded 2-D polygon {x | <a_i, x> <= b_i}.
Polygon polygon_vertices(const HPolyhedron& p) {
  const auto& cs = p.constraints();
  Polygon pts;
  for (std::size_t i = 0; i < cs.size(); ++i) {
    for (std::size_t j = i + 1; j < cs.size(); ++j) {
      Eigen::Matrix2d m;
      m << cs[i].normal(0), cs[i].normal(1), cs[j].normal(0), cs[j].normal(1);
      const double det = m.determinant();
      if (std::abs(det) < 1e-14) continue;
      const Eigen::Vector2d x = m.inverse() * Eigen::Vector2d(cs[i].offset, cs[j].offset);
      const double scale = 1.0 + x.cwiseAbs().maxCoeff();
      if (!p.contains(x, 1e-9 * scale)) continue;
      const bool dup = std::any_of(pts.begin(), pts.end(), [&](const Eigen::Vector2d& q) {
        return (q - x).cwiseAbs().maxCoeff() <= 1e-12 * scale;
      });
      if (!dup) pts.push_back(x);
    }
  }
  if (pts.empty()) return pts;
  Eigen::Vector2d c = Eigen::Vector2d::Zero();
  for (const auto& q : pts) c += q;
  c /= static_cast<double>(pts.size());
  std::sort(pts.begin(), pts.end(), [&](const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
    return std::atan2(a(1) - c(1), a(0) - c(0)) < std::atan2(b(1) - c(1), b(0) - c(0));
  });
  return pts;
}

}  // namespace

Polygon project_step(const DecomposedSet& step, int d1, int d2) {
  const BlockStructure& s = step.structure();
  if (d1 < 0 || d2 < 0 || d1 >= s.dim() || d2 >= s.dim() || d1 == d2) {
    throw Error(ErrorKind::ConfigError, "invalid projection coordinates");
  }
  const int j = s.block_of(d1);
  if (j == s.block_of(d2) && s.block(j).size == 2) {
    if (const auto* p = std::get_if<HPolyhedron>(&step.block(j))) {
      Polygon poly = polygon_vertices(*p);
      if (d1 > d2) {
        for (auto& v : poly) std::swap(v(0), v(1));
        std::reverse(poly.begin(), poly.end());
      }
      return poly;
    }
  }
  const Interval a = coordinate_range(step, d1);
  const Interval b = coordinate_range(step, d2);
  return {{a.lo, b.lo}, {a.hi, b.lo}, {a.hi, b.hi}, {a.lo, b.hi}};
}

void complete_for_projection(ReachResult& result, int d1, int d2) {
  for (auto& rec : result.flowpipes) {
    const BlockStructure& s = rec.flowpipe.structure;
    std::vector<int> blocks{s.block_of(d1)};
    if (s.block_of(d2) != blocks.front()) blocks.push_back(s.block_of(d2));
    std::vector<int> steps(rec.flowpipe.size());
    for (int k = 0; k < rec.flowpipe.size(); ++k) steps[k] = k;
    complete_steps(rec.flowpipe, rec.dsys, steps, blocks);
  }
}

void emit_flowpipe(const ReachResult& result, const HybridAutomaton& h, int d1, int d2,
                   const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IOError, "cannot write " + path);
  out << std::setprecision(17);
  out << "flowpipe,location,step,t_lo,t_hi," << h.variables.at(d1) << "," << h.variables.at(d2) << "\n";
  for (std::size_t f = 0; f < result.flowpipes.size(); ++f) {
    const auto& rec = result.flowpipes[f];
    for (int k = 0; k < rec.flowpipe.size(); ++k) {
      const Interval span = rec.flowpipe.time_span(k);
      const double tlo = rec.time_offset.lo + span.lo;
      const double thi = rec.time_offset.hi + span.hi;
      for (const auto& v : project_step(rec.flowpipe.steps[k], d1, d2)) {
        out << f << "," << h.locations[rec.location].name << "," << k << "," << tlo << "," << thi << ","
            << v(0) << "," << v(1) << "\n";
      }
    }
  }
  if (!out) throw Error(ErrorKind::IOError, "write failed: " + path);
}

void emit_svg(const ReachResult& result, const HybridAutomaton& h, int d1, int d2,
              const std::string& path) {
  std::vector<std::pair<int, Polygon>> polys;
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
  for (const auto& rec : result.flowpipes) {
    for (const auto& step : rec.flowpipe.steps) {
      Polygon p = project_step(step, d1, d2);
      for (const auto& v : p) {
        xmin = std::min(xmin, v(0));
        xmax = std::max(xmax, v(0));
        ymin = std::min(ymin, v(1));
        ymax = std::max(ymax, v(1));
      }
      polys.emplace_back(rec.location, std::move(p));
    }
  }
  if (polys.empty()) xmin = ymin = 0.0, xmax = ymax = 1.0;
  const double w = 800.0, hgt = 600.0, margin = 40.0;
  const double sx = (w - 2 * margin) / std::max(xmax - xmin, 1e-12);
  const double sy = (hgt - 2 * margin) / std::max(ymax - ymin, 1e-12);
  auto px = [&](double x) { return margin + (x - xmin) * sx; };
  auto py = [&](double y) { return hgt - margin - (y - ymin) * sy; };
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IOError, "cannot write " + path);
  out << std::setprecision(6);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << hgt << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (const auto& [loc, p] : polys) {
    out << "<polygon fill=\"" << palette[loc % 6] << "\" fill-opacity=\"0.25\" stroke=\"" << palette[loc % 6]
        << "\" stroke-width=\"0.5\" points=\"";
    for (const auto& v : p) out << px(v(0)) << "," << py(v(1)) << " ";
    out << "\"/>\n";
  }
  out << "<text x=\"" << w / 2 << "\" y=\"" << hgt - 10 << "\" text-anchor=\"middle\">" << h.variables.at(d1)
      << " [" << xmin << ", " << xmax << "]</text>\n";
  out << "<text x=\"12\" y=\"" << hgt / 2 << "\" transform=\"rotate(-90 12 " << hgt / 2
      << ")\" text-anchor=\"middle\">" << h.variables.at(d2) << " [" << ymin << ", " << ymax << "]</text>\n";
  out << "</svg>\n";
  if (!out) throw Error(ErrorKind::IOError, "write failed: " + path);
}

}  // namespace blockreach
