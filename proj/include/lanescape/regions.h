#pragma once

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "lanescape/lane_graph.h"
#include "lanescape/opendrive.h"

namespace lanescape {

enum class RegionKind { kJunction, kRoadSegment };

std::string_view RegionKindName(RegionKind kind);

struct Region {
  std::string region_id;
  RegionKind kind = RegionKind::kRoadSegment;
  std::set<std::string> node_ids;
  // Junction id for junction regions, road id for road segments.
  std::string source_id;
  double s_begin = 0.0;  // road segments only
  double s_end = 0.0;

  bool operator==(const Region&) const = default;
};

struct RegionPartition {
  std::string map_id;
  double target_length = 0.0;
  std::map<std::string, Region> regions;
  // Symmetric and irreflexive.
  std::map<std::string, std::set<std::string>> adjacency;

  // Throws Error(kDomain) for unknown regions.
  const Region& region(const std::string& region_id) const;
  bool operator==(const RegionPartition&) const = default;
};

// A region of interest: region ids in selection order.
struct Roi {
  std::vector<std::string> region_ids;

  bool Contains(const std::string& region_id) const;
  bool operator==(const Roi&) const = default;
};

inline constexpr double kDefaultTargetLength = 75.0;  // m

// Junction regions hold every node of the junction's connecting roads.
// Other roads are cut into k = max(1, round(L / target_length)) equal
// slices; a node on a slice boundary belongs to the lower-s slice.
// Pedestrian nodes follow the nearest road-bound node of their road.
RegionPartition SegmentRegions(const LaneGraph& graph,
                               const RoadNetwork& network,
                               double target_length = kDefaultTargetLength);

// Throws Error(kDomain) if the roi is empty, names an unknown or repeated
// region, or its footprint is not connected.
void ValidateRoi(const RegionPartition& partition, const Roi& roi);

Roi InitialRoi(const RegionPartition& partition, const std::string& region_id);

std::set<std::string> EligibleExtensions(const RegionPartition& partition,
                                         const Roi& roi);

// Returns a new roi; `roi` itself is untouched. Throws Error(kRejected) when
// the region is not adjacent to the roi and Error(kIdempotence) when it is
// already a member.
Roi ExpandRoi(const RegionPartition& partition, const Roi& roi,
              const std::string& region_id);

LaneGraph InducedSubgraph(const LaneGraph& graph,
                          const RegionPartition& partition, const Roi& roi);

}  // namespace lanescape
