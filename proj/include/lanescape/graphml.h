#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "lanescape/lane_graph.h"

namespace lanescape {

// Shortest decimal that parses back to exactly `value`.
std::string FormatDouble(double value);

// Key declarations are emitted in a fixed order; successor/left/right/goal
// edges are directed, pedestrian edges carry directed="false".
std::string GraphToGraphml(const LaneGraph& graph);

// Unknown keys are skipped with a warning; a node or edge missing a
// mandatory key raises Error(kFormat).
LaneGraph GraphmlToGraph(std::string_view document,
                         std::vector<std::string>* warnings = nullptr);

}  // namespace lanescape
