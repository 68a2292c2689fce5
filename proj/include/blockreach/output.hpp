#pragma once

// Flowpipe projections onto two coordinates, as delimited text and SVG.

#include <string>
#include <vector>

#include "blockreach/hybrid.hpp"

namespace blockreach {

using Polygon = std::vector<Eigen::Vector2d>;

/// Vertices (counter-clockwise) of the projection of step k onto (d1, d2).
/// Both coordinates must be computed. A shared 2-D polyhedral block is
/// projected exactly; otherwise the projection is the product of the two
/// coordinate intervals.
Polygon project_step(const DecomposedSet& step, int d1, int d2);

/// Completes the blocks of d1 and d2 in every step of every flowpipe.
void complete_for_projection(ReachResult& result, int d1, int d2);

/// Header "flowpipe,location,step,t_lo,t_hi,<name1>,<name2>", then one row
/// per polygon vertex. Throws IOError.
void emit_flowpipe(const ReachResult& result, const HybridAutomaton& h, int d1, int d2,
                   const std::string& path);

/// Static plot of the same polygons.
void emit_svg(const ReachResult& result, const HybridAutomaton& h, int d1, int d2,
              const std::string& path);

}  // namespace blockreach
