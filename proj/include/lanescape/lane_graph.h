#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lanescape/actor.h"
#include "lanescape/geometry.h"
#include "lanescape/opendrive.h"

namespace lanescape {

enum class NodeKind { kRoadBound, kPedestrian };

// `kGoal` edges are scenario annotations (spawn -> goal) and never take part
// in traversal.
enum class EdgeRelation { kSuccessor, kLeft, kRight, kPedestrian, kGoal };

std::string_view NodeKindName(NodeKind kind);
std::optional<NodeKind> TryParseNodeKind(std::string_view name);
std::string_view RelationName(EdgeRelation relation);
std::optional<EdgeRelation> TryParseRelation(std::string_view name);

// Actor payload stored on a spawn node.
struct ActorAttributes {
  std::string actor_id;
  ActorCategory category = ActorCategory::kNormalVehicle;
  std::optional<std::string> model;
  double velocity = 0.0;
  double offset = 0.0;
  bool ego = false;

  bool operator==(const ActorAttributes&) const = default;
};

struct GraphNode {
  std::string node_id;
  Pose pose;
  double s_coord = 0.0;  // road reference-line s of the sample
  std::string road_id;
  int lane_id = 0;  // 0 for crosswalk nodes
  NodeKind kind = NodeKind::kRoadBound;
  std::optional<ActorAttributes> actor;

  bool operator==(const GraphNode&) const = default;
};

struct GraphEdge {
  std::string from;
  std::string to;
  EdgeRelation relation = EdgeRelation::kSuccessor;
  double length = 0.0;

  bool directed() const { return relation != EdgeRelation::kPedestrian; }
  bool operator==(const GraphEdge&) const = default;
};

// Directed lane graph with optional undirected pedestrian edges. Nodes are
// kept ordered by id and edges in insertion order, so equal construction
// sequences give equal (and identically serialized) graphs.
class LaneGraph {
 public:
  LaneGraph() = default;
  LaneGraph(std::string map_id, double spacing)
      : map_id_(std::move(map_id)), spacing_(spacing) {}

  const std::string& map_id() const { return map_id_; }
  double spacing() const { return spacing_; }
  const std::map<std::string, GraphNode>& nodes() const { return nodes_; }
  const std::vector<GraphEdge>& edges() const { return edges_; }
  bool empty() const { return nodes_.empty(); }

  bool Contains(const std::string& node_id) const {
    return nodes_.contains(node_id);
  }
  // Throws Error(kDomain) for unknown ids.
  const GraphNode& node(const std::string& node_id) const;

  void AddNode(GraphNode node);
  void AddEdge(GraphEdge edge);
  void RemoveEdgesIf(const std::function<bool(const GraphEdge&)>& predicate);
  void SetActor(const std::string& node_id,
                std::optional<ActorAttributes> actor);

  // Indices into edges() for edges leaving / entering the node, any relation.
  const std::vector<std::size_t>& OutEdges(const std::string& node_id) const;
  const std::vector<std::size_t>& InEdges(const std::string& node_id) const;

  // Nodes reachable in one traversal step: directed successor/left/right
  // edges forwards, pedestrian edges both ways.
  std::vector<std::string> Neighbors(const std::string& node_id) const;
  // Reverse of Neighbors.
  std::vector<std::string> Predecessors(const std::string& node_id) const;

  bool HasOutgoing(const std::string& node_id, EdgeRelation relation) const;

  bool operator==(const LaneGraph& other) const {
    return map_id_ == other.map_id_ && spacing_ == other.spacing_ &&
           nodes_ == other.nodes_ && edges_ == other.edges_;
  }

 private:
  void RebuildIndex();

  std::string map_id_;
  double spacing_ = 0.0;
  std::map<std::string, GraphNode> nodes_;
  std::vector<GraphEdge> edges_;
  std::unordered_map<std::string, std::vector<std::size_t>> out_;
  std::unordered_map<std::string, std::vector<std::size_t>> in_;
};

inline constexpr double kDefaultSpacing = 4.0;         // m
inline constexpr double kCrosswalkAttachRadius = 5.0;  // m

// Distances from a lane start at which nodes are placed: 0, spacing, ...,
// plus the end point `length` (the final gap may be shorter).
std::vector<double> SampleOffsets(double length, double spacing);

// Driving lanes only. Throws Error(kDomain) when spacing <= 0.
LaneGraph BuildLaneGraph(const RoadNetwork& network, const std::string& map_id,
                         double spacing = kDefaultSpacing);

// Sidewalk lanes and crosswalks. Crosswalk ends that find no sidewalk node
// within kCrosswalkAttachRadius stay unattached and are reported in
// `warnings`.
LaneGraph BuildPedestrianGraph(const RoadNetwork& network,
                               const std::string& map_id,
                               double spacing = kDefaultSpacing,
                               std::vector<std::string>* warnings = nullptr);

// Union of two graphs over disjoint node sets.
LaneGraph MergeGraphs(const LaneGraph& road, const LaneGraph& pedestrian);

// Includes `from`. Throws Error(kDomain) for unknown ids.
std::set<std::string> ReachableSet(const LaneGraph& graph,
                                   const std::string& from);

// Nodes without outgoing successor/left/right edges (and, for pedestrian
// nodes, without any incident pedestrian edge).
std::set<std::string> TerminalNodes(const LaneGraph& graph);

// Removes left/right edges where either endpoint lacks an outgoing successor
// edge, so terminal nodes stay exactly the ends of navigable paths.
void SuppressDanglingLateralEdges(LaneGraph& graph);

}  // namespace lanescape
