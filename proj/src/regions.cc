#include "lanescape/regions.h"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "lanescape/error.h"

namespace lanescape {

namespace {

constexpr double kBoundaryEpsilon = 1e-9;

std::string JunctionRegionId(const std::string& junction_id) {
  return "junction:" + junction_id;
}

std::string RoadRegionId(const std::string& road_id, int slice) {
  return "road:" + road_id + ":" + std::to_string(slice);
}

// Slice index for s with boundaries assigned to the lower slice.
int SliceIndex(double s, double slice_length, int slices) {
  const int index =
      static_cast<int>(std::ceil((s - kBoundaryEpsilon) / slice_length)) - 1;
  return std::clamp(index, 0, slices - 1);
}

}  // namespace

std::string_view RegionKindName(RegionKind kind) {
  return kind == RegionKind::kJunction ? "junction" : "road_segment";
}

const Region& RegionPartition::region(const std::string& region_id) const {
  const auto it = regions.find(region_id);
  if (it == regions.end()) {
    throw Error(ErrorCode::kDomain, "unknown region " + region_id);
  }
  return it->second;
}

bool Roi::Contains(const std::string& region_id) const {
  return std::find(region_ids.begin(), region_ids.end(), region_id) !=
         region_ids.end();
}

RegionPartition SegmentRegions(const LaneGraph& graph,
                               const RoadNetwork& network,
                               double target_length) {
  if (!(target_length > 0.0) || !std::isfinite(target_length)) {
    throw Error(ErrorCode::kDomain, "target length must be positive, got " +
                                        std::to_string(target_length));
  }
  RegionPartition partition;
  partition.map_id = graph.map_id();
  partition.target_length = target_length;

  std::map<std::string, Region> regions;
  std::map<std::string, std::string> region_of;
  // Road-bound nodes per road, for pedestrian assignment.
  std::map<std::string, std::vector<const GraphNode*>> road_bound_by_road;

  for (const auto& [id, node] : graph.nodes()) {
    if (node.kind != NodeKind::kRoadBound) continue;
    const Road& road = network.roads.at(node.road_id);
    std::string region_id;
    if (road.junction_id) {
      region_id = JunctionRegionId(*road.junction_id);
      auto& region = regions[region_id];
      region.region_id = region_id;
      region.kind = RegionKind::kJunction;
      region.source_id = *road.junction_id;
    } else {
      const int slices = std::max(
          1, static_cast<int>(std::lround(road.length / target_length)));
      const double slice_length = road.length / slices;
      const int index = SliceIndex(node.s_coord, slice_length, slices);
      region_id = RoadRegionId(road.road_id, index);
      auto& region = regions[region_id];
      region.region_id = region_id;
      region.kind = RegionKind::kRoadSegment;
      region.source_id = road.road_id;
      region.s_begin = index * slice_length;
      region.s_end = index + 1 == slices ? road.length
                                         : (index + 1) * slice_length;
    }
    regions[region_id].node_ids.insert(id);
    region_of[id] = region_id;
    road_bound_by_road[node.road_id].push_back(&node);
  }

  // Centroids for the pedestrian fallback.
  std::map<std::string, std::pair<double, double>> centroids;
  for (const auto& [region_id, region] : regions) {
    double sx = 0.0, sy = 0.0;
    for (const auto& id : region.node_ids) {
      sx += graph.node(id).pose.x;
      sy += graph.node(id).pose.y;
    }
    const double n = static_cast<double>(region.node_ids.size());
    centroids[region_id] = {sx / n, sy / n};
  }

  for (const auto& [id, node] : graph.nodes()) {
    if (node.kind != NodeKind::kPedestrian) continue;
    std::string target;
    double best = std::numeric_limits<double>::infinity();
    if (auto it = road_bound_by_road.find(node.road_id);
        it != road_bound_by_road.end()) {
      for (const GraphNode* candidate : it->second) {
        const double d = Distance(node.pose, candidate->pose);
        if (d < best) {
          best = d;
          target = region_of.at(candidate->node_id);
        }
      }
    } else {
      for (const auto& [region_id, c] : centroids) {
        const double d = std::hypot(node.pose.x - c.first, node.pose.y - c.second);
        if (d < best) {
          best = d;
          target = region_id;
        }
      }
    }
    if (target.empty()) continue;  // no road-bound nodes anywhere
    regions[target].node_ids.insert(id);
    region_of[id] = target;
  }

  for (const auto& [region_id, region] : regions) {
    partition.adjacency[region_id];
  }
  for (const auto& edge : graph.edges()) {
    if (edge.relation == EdgeRelation::kGoal) continue;
    const auto a = region_of.find(edge.from);
    const auto b = region_of.find(edge.to);
    if (a == region_of.end() || b == region_of.end()) continue;
    if (a->second == b->second) continue;
    partition.adjacency[a->second].insert(b->second);
    partition.adjacency[b->second].insert(a->second);
  }
  partition.regions = std::move(regions);
  return partition;
}

void ValidateRoi(const RegionPartition& partition, const Roi& roi) {
  if (roi.region_ids.empty()) {
    throw Error(ErrorCode::kDomain, "region of interest is empty");
  }
  std::set<std::string> seen;
  for (const auto& id : roi.region_ids) {
    partition.region(id);
    if (!seen.insert(id).second) {
      throw Error(ErrorCode::kDomain, "region " + id + " listed twice");
    }
  }
  // The footprint must be connected through adjacency among members.
  std::set<std::string> reached = {roi.region_ids.front()};
  std::vector<std::string> stack = {roi.region_ids.front()};
  while (!stack.empty()) {
    const std::string id = stack.back();
    stack.pop_back();
    for (const auto& next : partition.adjacency.at(id)) {
      if (seen.contains(next) && reached.insert(next).second) {
        stack.push_back(next);
      }
    }
  }
  for (const auto& id : roi.region_ids) {
    if (!reached.contains(id)) {
      throw Error(ErrorCode::kDomain,
                  "region " + id + " is not connected to the roi");
    }
  }
}

Roi InitialRoi(const RegionPartition& partition, const std::string& region_id) {
  partition.region(region_id);
  return Roi{{region_id}};
}

std::set<std::string> EligibleExtensions(const RegionPartition& partition,
                                         const Roi& roi) {
  std::set<std::string> eligible;
  for (const auto& id : roi.region_ids) {
    partition.region(id);
    const auto& neighbours = partition.adjacency.at(id);
    eligible.insert(neighbours.begin(), neighbours.end());
  }
  for (const auto& id : roi.region_ids) eligible.erase(id);
  return eligible;
}

Roi ExpandRoi(const RegionPartition& partition, const Roi& roi,
              const std::string& region_id) {
  partition.region(region_id);
  if (roi.Contains(region_id)) {
    throw Error(ErrorCode::kIdempotence,
                "region " + region_id + " is already part of the roi");
  }
  if (!EligibleExtensions(partition, roi).contains(region_id)) {
    throw Error(ErrorCode::kRejected,
                "region " + region_id + " is not adjacent to the roi");
  }
  Roi expanded = roi;
  expanded.region_ids.push_back(region_id);
  return expanded;
}

LaneGraph InducedSubgraph(const LaneGraph& graph,
                          const RegionPartition& partition, const Roi& roi) {
  ValidateRoi(partition, roi);
  std::set<std::string> members;
  for (const auto& id : roi.region_ids) {
    const auto& nodes = partition.region(id).node_ids;
    members.insert(nodes.begin(), nodes.end());
  }
  LaneGraph subgraph(graph.map_id(), graph.spacing());
  for (const auto& id : members) subgraph.AddNode(graph.node(id));
  for (const auto& edge : graph.edges()) {
    if (edge.relation == EdgeRelation::kGoal) continue;
    if (members.contains(edge.from) && members.contains(edge.to)) {
      subgraph.AddEdge(edge);
    }
  }
  SuppressDanglingLateralEdges(subgraph);
  return subgraph;
}

}  // namespace lanescape
