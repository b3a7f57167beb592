#include "lanescape/lane_graph.h"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <tuple>

#include "lanescape/error.h"

namespace lanescape {

namespace {

const std::vector<std::size_t> kNoEdges;

constexpr double kSampleEpsilon = 1e-9;

struct LaneKey {
  std::string road_id;
  std::size_t section = 0;
  int lane_id = 0;
  auto operator<=>(const LaneKey&) const = default;
};

struct LaneEnd {
  LaneKey lane;
  ContactPoint side = ContactPoint::kStart;
  auto operator<=>(const LaneEnd&) const = default;
};

using LaneEndPair = std::pair<LaneEnd, LaneEnd>;

std::string NodeId(const std::string& map_id, const std::string& road_id,
                   const std::string& lane_field, std::size_t section,
                   std::size_t index) {
  std::string id = map_id + ":" + road_id + ":" + lane_field + ":";
  if (section > 0) id += std::to_string(section) + ".";
  return id + std::to_string(index);
}

const Lane* FindLane(const RoadNetwork& network, const LaneKey& key) {
  const auto road = network.roads.find(key.road_id);
  if (road == network.roads.end()) return nullptr;
  if (key.section >= road->second.lane_sections.size()) return nullptr;
  const auto& lanes = road->second.lane_sections[key.section].lanes;
  const auto lane = lanes.find(key.lane_id);
  return lane == lanes.end() ? nullptr : &lane->second;
}

std::size_t SectionAt(const Road& road, ContactPoint side) {
  return side == ContactPoint::kStart || road.lane_sections.empty()
             ? 0
             : road.lane_sections.size() - 1;
}

void AddPair(std::set<LaneEndPair>& pairs, LaneEnd a, LaneEnd b) {
  if (a == b) return;
  if (b < a) std::swap(a, b);
  pairs.emplace(std::move(a), std::move(b));
}

// Physical lane-end adjacencies from lane links, road links and junction
// connections, without regard to travel direction.
std::set<LaneEndPair> CollectLaneEndPairs(const RoadNetwork& network) {
  std::set<LaneEndPair> pairs;
  for (const auto& [road_id, road] : network.roads) {
    const auto& sections = road.lane_sections;
    for (std::size_t k = 0; k + 1 < sections.size(); ++k) {
      for (const auto& [lane_id, lane] : sections[k].lanes) {
        if (lane.successor) {
          AddPair(pairs, {{road_id, k, lane_id}, ContactPoint::kEnd},
                  {{road_id, k + 1, *lane.successor}, ContactPoint::kStart});
        }
      }
      for (const auto& [lane_id, lane] : sections[k + 1].lanes) {
        if (lane.predecessor) {
          AddPair(pairs, {{road_id, k, *lane.predecessor}, ContactPoint::kEnd},
                  {{road_id, k + 1, lane_id}, ContactPoint::kStart});
        }
      }
    }
    if (sections.empty()) continue;

    auto link_road = [&](const std::optional<RoadLink>& link,
                         ContactPoint own_side, bool use_successor) {
      if (!link || link->element_type != ElementType::kRoad) return;
      const auto other = network.roads.find(link->element_id);
      if (other == network.roads.end()) return;
      const std::size_t own_section = SectionAt(road, own_side);
      const std::size_t other_section =
          SectionAt(other->second, link->contact_point);
      for (const auto& [lane_id, lane] : sections[own_section].lanes) {
        const auto target = use_successor ? lane.successor : lane.predecessor;
        if (!target) continue;
        AddPair(pairs, {{road_id, own_section, lane_id}, own_side},
                {{link->element_id, other_section, *target},
                 link->contact_point});
      }
    };
    link_road(road.successor, ContactPoint::kEnd, true);
    link_road(road.predecessor, ContactPoint::kStart, false);
  }

  for (const auto& [junction_id, connections] : network.junctions) {
    for (const auto& connection : connections) {
      const Road& incoming = network.roads.at(connection.incoming_road);
      const Road& connecting = network.roads.at(connection.connecting_road);
      if (incoming.lane_sections.empty() || connecting.lane_sections.empty()) {
        continue;
      }
      auto links_here = [&](const std::optional<RoadLink>& link) {
        return link && link->element_type == ElementType::kJunction &&
               link->element_id == junction_id;
      };
      const bool at_end = links_here(incoming.successor);
      const bool at_start = links_here(incoming.predecessor);
      ContactPoint incoming_side = ContactPoint::kEnd;
      if (at_end && at_start) {
        // Both ends touch the junction: use the end closer to the
        // connecting road's contact point.
        const Pose contact = EvalReferenceLine(
            connecting, connection.contact_point == ContactPoint::kStart
                            ? 0.0
                            : connecting.length);
        const double d_start =
            Distance(EvalReferenceLine(incoming, 0.0), contact);
        const double d_end =
            Distance(EvalReferenceLine(incoming, incoming.length), contact);
        incoming_side = d_start < d_end ? ContactPoint::kStart
                                        : ContactPoint::kEnd;
      } else if (at_start) {
        incoming_side = ContactPoint::kStart;
      } else if (!at_end) {
        continue;
      }
      const std::size_t incoming_section = SectionAt(incoming, incoming_side);
      const std::size_t connecting_section =
          SectionAt(connecting, connection.contact_point);
      for (const auto& link : connection.lane_links) {
        AddPair(pairs,
                {{connection.incoming_road, incoming_section, link.from},
                 incoming_side},
                {{connection.connecting_road, connecting_section, link.to},
                 connection.contact_point});
      }
    }
  }
  return pairs;
}

bool ExitsAt(const Lane& lane, ContactPoint side) {
  return (lane.travel_direction == TravelDirection::kWithS) ==
         (side == ContactPoint::kEnd);
}

bool EntersAt(const Lane& lane, ContactPoint side) {
  return !ExitsAt(lane, side);
}

void CheckSpacing(double spacing) {
  if (!(spacing > 0.0) || !std::isfinite(spacing)) {
    throw Error(ErrorCode::kDomain, "node spacing must be positive, got " +
                                        std::to_string(spacing));
  }
}

// Samples one lane of one section. Nodes come out in travel order
// (`ascending_s` false reverses them).
std::vector<std::string> SampleLane(LaneGraph& graph, const Road& road,
                                    std::size_t section_index, int lane_id,
                                    bool ascending_s, NodeKind kind,
                                    double spacing) {
  const LaneSection& section = road.lane_sections[section_index];
  std::vector<std::string> ids;
  const auto offsets = SampleOffsets(section.length(), spacing);
  ids.reserve(offsets.size());
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    const double s = ascending_s ? section.s_start + offsets[i]
                                 : section.s_end - offsets[i];
    GraphNode node;
    node.node_id = NodeId(graph.map_id(), road.road_id,
                          std::to_string(lane_id), section_index, i);
    node.pose = EvalLaneCenterInSection(road, section_index, lane_id, s);
    node.s_coord = s;
    node.road_id = road.road_id;
    node.lane_id = lane_id;
    node.kind = kind;
    ids.push_back(node.node_id);
    graph.AddNode(std::move(node));
  }
  return ids;
}

void Connect(LaneGraph& graph, const std::string& from, const std::string& to,
             EdgeRelation relation) {
  if (from == to) return;
  const double length = Distance(graph.node(from).pose, graph.node(to).pose);
  graph.AddEdge({from, to, relation, length});
}

}  // namespace

std::string_view NodeKindName(NodeKind kind) {
  return kind == NodeKind::kRoadBound ? "road_bound" : "pedestrian";
}

std::optional<NodeKind> TryParseNodeKind(std::string_view name) {
  if (name == "road_bound") return NodeKind::kRoadBound;
  if (name == "pedestrian") return NodeKind::kPedestrian;
  return std::nullopt;
}

std::string_view RelationName(EdgeRelation relation) {
  switch (relation) {
    case EdgeRelation::kSuccessor: return "successor";
    case EdgeRelation::kLeft: return "left";
    case EdgeRelation::kRight: return "right";
    case EdgeRelation::kPedestrian: return "pedestrian";
    case EdgeRelation::kGoal: return "goal";
  }
  return "";
}

std::optional<EdgeRelation> TryParseRelation(std::string_view name) {
  for (auto relation : {EdgeRelation::kSuccessor, EdgeRelation::kLeft,
                        EdgeRelation::kRight, EdgeRelation::kPedestrian,
                        EdgeRelation::kGoal}) {
    if (RelationName(relation) == name) return relation;
  }
  return std::nullopt;
}

const GraphNode& LaneGraph::node(const std::string& node_id) const {
  const auto it = nodes_.find(node_id);
  if (it == nodes_.end()) {
    throw Error(ErrorCode::kDomain, "unknown node " + node_id);
  }
  return it->second;
}

void LaneGraph::AddNode(GraphNode node) {
  const std::string id = node.node_id;
  if (!nodes_.emplace(id, std::move(node)).second) {
    throw Error(ErrorCode::kStructural, "duplicate node id " + id);
  }
}

void LaneGraph::AddEdge(GraphEdge edge) {
  if (!Contains(edge.from) || !Contains(edge.to)) {
    throw Error(ErrorCode::kStructural,
                "edge " + edge.from + " -> " + edge.to +
                    " references a missing node");
  }
  if (edge.from == edge.to) {
    throw Error(ErrorCode::kStructural, "self-loop on " + edge.from);
  }
  out_[edge.from].push_back(edges_.size());
  in_[edge.to].push_back(edges_.size());
  edges_.push_back(std::move(edge));
}

void LaneGraph::RemoveEdgesIf(
    const std::function<bool(const GraphEdge&)>& predicate) {
  std::erase_if(edges_, predicate);
  RebuildIndex();
}

void LaneGraph::SetActor(const std::string& node_id,
                         std::optional<ActorAttributes> actor) {
  const auto it = nodes_.find(node_id);
  if (it == nodes_.end()) {
    throw Error(ErrorCode::kDomain, "unknown node " + node_id);
  }
  it->second.actor = std::move(actor);
}

void LaneGraph::RebuildIndex() {
  out_.clear();
  in_.clear();
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    out_[edges_[i].from].push_back(i);
    in_[edges_[i].to].push_back(i);
  }
}

const std::vector<std::size_t>& LaneGraph::OutEdges(
    const std::string& node_id) const {
  const auto it = out_.find(node_id);
  return it == out_.end() ? kNoEdges : it->second;
}

const std::vector<std::size_t>& LaneGraph::InEdges(
    const std::string& node_id) const {
  const auto it = in_.find(node_id);
  return it == in_.end() ? kNoEdges : it->second;
}

std::vector<std::string> LaneGraph::Neighbors(const std::string& node_id) const {
  std::vector<std::string> result;
  for (const std::size_t i : OutEdges(node_id)) {
    if (edges_[i].relation != EdgeRelation::kGoal) {
      result.push_back(edges_[i].to);
    }
  }
  for (const std::size_t i : InEdges(node_id)) {
    if (edges_[i].relation == EdgeRelation::kPedestrian) {
      result.push_back(edges_[i].from);
    }
  }
  return result;
}

std::vector<std::string> LaneGraph::Predecessors(
    const std::string& node_id) const {
  std::vector<std::string> result;
  for (const std::size_t i : InEdges(node_id)) {
    if (edges_[i].relation != EdgeRelation::kGoal) {
      result.push_back(edges_[i].from);
    }
  }
  for (const std::size_t i : OutEdges(node_id)) {
    if (edges_[i].relation == EdgeRelation::kPedestrian) {
      result.push_back(edges_[i].to);
    }
  }
  return result;
}

bool LaneGraph::HasOutgoing(const std::string& node_id,
                            EdgeRelation relation) const {
  for (const std::size_t i : OutEdges(node_id)) {
    if (edges_[i].relation == relation) return true;
  }
  return false;
}

std::vector<double> SampleOffsets(double length, double spacing) {
  std::vector<double> offsets;
  offsets.push_back(0.0);
  if (length <= kSampleEpsilon) return offsets;
  for (std::size_t i = 1;; ++i) {
    const double d = static_cast<double>(i) * spacing;
    if (d >= length - kSampleEpsilon) break;
    offsets.push_back(d);
  }
  offsets.push_back(length);
  return offsets;
}

LaneGraph BuildLaneGraph(const RoadNetwork& network, const std::string& map_id,
                         double spacing) {
  CheckSpacing(spacing);
  LaneGraph graph(map_id, spacing);
  std::map<LaneKey, std::vector<std::string>> lane_nodes;

  for (const auto& [road_id, road] : network.roads) {
    for (std::size_t k = 0; k < road.lane_sections.size(); ++k) {
      if (road.lane_sections[k].length() <= kSampleEpsilon) continue;
      for (const auto& [lane_id, lane] : road.lane_sections[k].lanes) {
        if (lane.lane_type != LaneType::kDriving) continue;
        const bool ascending =
            lane.travel_direction == TravelDirection::kWithS;
        auto ids = SampleLane(graph, road, k, lane_id, ascending,
                              NodeKind::kRoadBound, spacing);
        for (std::size_t i = 0; i + 1 < ids.size(); ++i) {
          Connect(graph, ids[i], ids[i + 1], EdgeRelation::kSuccessor);
        }
        lane_nodes[{road_id, k, lane_id}] = std::move(ids);
      }
    }
  }

  // Lane-to-lane bridges in travel direction.
  std::set<std::pair<std::string, std::string>> bridged;
  for (const auto& [a, b] : CollectLaneEndPairs(network)) {
    const Lane* lane_a = FindLane(network, a.lane);
    const Lane* lane_b = FindLane(network, b.lane);
    if (!lane_a || !lane_b) continue;
    const auto nodes_a = lane_nodes.find(a.lane);
    const auto nodes_b = lane_nodes.find(b.lane);
    if (nodes_a == lane_nodes.end() || nodes_b == lane_nodes.end()) continue;
    if (ExitsAt(*lane_a, a.side) && EntersAt(*lane_b, b.side)) {
      bridged.emplace(nodes_a->second.back(), nodes_b->second.front());
    }
    if (ExitsAt(*lane_b, b.side) && EntersAt(*lane_a, a.side)) {
      bridged.emplace(nodes_b->second.back(), nodes_a->second.front());
    }
  }
  for (const auto& [from, to] : bridged) {
    Connect(graph, from, to, EdgeRelation::kSuccessor);
  }

  // Lateral edges between same-direction neighbours, paired by index.
  for (const auto& [key, ids] : lane_nodes) {
    const LaneKey outer{key.road_id, key.section, key.lane_id + 1};
    const auto neighbour = lane_nodes.find(outer);
    if (neighbour == lane_nodes.end()) continue;
    const Lane* lane = FindLane(network, key);
    const Lane* other = FindLane(network, outer);
    if (lane->travel_direction != other->travel_direction) continue;
    // `outer` has the larger t; it is on the left when travelling with s.
    const bool outer_is_left =
        lane->travel_direction == TravelDirection::kWithS;
    const std::size_t count = std::min(ids.size(), neighbour->second.size());
    for (std::size_t i = 0; i < count; ++i) {
      const std::string& here = ids[i];
      const std::string& there = neighbour->second[i];
      if (!graph.HasOutgoing(here, EdgeRelation::kSuccessor) ||
          !graph.HasOutgoing(there, EdgeRelation::kSuccessor)) {
        continue;
      }
      Connect(graph, here, there,
              outer_is_left ? EdgeRelation::kLeft : EdgeRelation::kRight);
      Connect(graph, there, here,
              outer_is_left ? EdgeRelation::kRight : EdgeRelation::kLeft);
    }
  }
  return graph;
}

LaneGraph BuildPedestrianGraph(const RoadNetwork& network,
                               const std::string& map_id, double spacing,
                               std::vector<std::string>* warnings) {
  CheckSpacing(spacing);
  LaneGraph graph(map_id, spacing);
  std::map<LaneKey, std::vector<std::string>> lane_nodes;
  std::vector<std::string> sidewalk_nodes;

  for (const auto& [road_id, road] : network.roads) {
    for (std::size_t k = 0; k < road.lane_sections.size(); ++k) {
      if (road.lane_sections[k].length() <= kSampleEpsilon) continue;
      for (const auto& [lane_id, lane] : road.lane_sections[k].lanes) {
        if (lane.lane_type != LaneType::kSidewalk) continue;
        auto ids = SampleLane(graph, road, k, lane_id, true,
                              NodeKind::kPedestrian, spacing);
        for (std::size_t i = 0; i + 1 < ids.size(); ++i) {
          Connect(graph, ids[i], ids[i + 1], EdgeRelation::kPedestrian);
        }
        sidewalk_nodes.insert(sidewalk_nodes.end(), ids.begin(), ids.end());
        lane_nodes[{road_id, k, lane_id}] = std::move(ids);
      }
    }
  }

  // Sidewalks continue across lane links; direction does not matter.
  std::set<std::pair<std::string, std::string>> bridged;
  for (const auto& [a, b] : CollectLaneEndPairs(network)) {
    const auto nodes_a = lane_nodes.find(a.lane);
    const auto nodes_b = lane_nodes.find(b.lane);
    if (nodes_a == lane_nodes.end() || nodes_b == lane_nodes.end()) continue;
    const auto& end_a = a.side == ContactPoint::kStart
                            ? nodes_a->second.front()
                            : nodes_a->second.back();
    const auto& end_b = b.side == ContactPoint::kStart
                            ? nodes_b->second.front()
                            : nodes_b->second.back();
    if (end_a != end_b) bridged.emplace(std::min(end_a, end_b), std::max(end_a, end_b));
  }
  for (const auto& [from, to] : bridged) {
    Connect(graph, from, to, EdgeRelation::kPedestrian);
  }

  for (const auto& crosswalk : network.crosswalk_objects) {
    const Road& road = network.roads.at(crosswalk.road_id);
    const Pose reference =
        EvalReferenceLine(road, std::clamp(crosswalk.s, 0.0, road.length));
    const Pose center = OffsetLaterally(reference, crosswalk.t);
    const double axis = NormalizeAngle(reference.heading + crosswalk.heading);
    const double ux = std::cos(axis);
    const double uy = std::sin(axis);
    const double half = 0.5 * crosswalk.length;

    std::vector<std::string> chain;
    const auto offsets = SampleOffsets(crosswalk.length, spacing);
    for (std::size_t i = 0; i < offsets.size(); ++i) {
      GraphNode node;
      node.node_id = NodeId(map_id, road.road_id, "cw" + crosswalk.object_id,
                            0, i);
      node.pose = {center.x + (offsets[i] - half) * ux,
                   center.y + (offsets[i] - half) * uy, axis};
      node.s_coord = crosswalk.s;
      node.road_id = road.road_id;
      node.lane_id = 0;
      node.kind = NodeKind::kPedestrian;
      chain.push_back(node.node_id);
      graph.AddNode(std::move(node));
    }
    for (std::size_t i = 0; i + 1 < chain.size(); ++i) {
      Connect(graph, chain[i], chain[i + 1], EdgeRelation::kPedestrian);
    }

    std::vector<std::string> ends = {chain.front()};
    if (chain.size() > 1) ends.push_back(chain.back());
    for (const auto& end : ends) {
      const Pose& p = graph.node(end).pose;
      const std::string* nearest = nullptr;
      double best = std::numeric_limits<double>::infinity();
      for (const auto& candidate : sidewalk_nodes) {
        const double d = Distance(p, graph.node(candidate).pose);
        if (d < best) {
          best = d;
          nearest = &candidate;
        }
      }
      if (nearest && best <= kCrosswalkAttachRadius) {
        Connect(graph, end, *nearest, EdgeRelation::kPedestrian);
      } else if (warnings) {
        warnings->push_back("crosswalk " + crosswalk.object_id + " on road " +
                            crosswalk.road_id + ": end " + end +
                            " has no sidewalk node within " +
                            std::to_string(kCrosswalkAttachRadius) + " m");
      }
    }
  }
  return graph;
}

LaneGraph MergeGraphs(const LaneGraph& road, const LaneGraph& pedestrian) {
  LaneGraph merged(road.map_id(), road.spacing());
  for (const auto& [id, node] : road.nodes()) merged.AddNode(node);
  for (const auto& [id, node] : pedestrian.nodes()) merged.AddNode(node);
  for (const auto& edge : road.edges()) merged.AddEdge(edge);
  for (const auto& edge : pedestrian.edges()) merged.AddEdge(edge);
  return merged;
}

std::set<std::string> ReachableSet(const LaneGraph& graph,
                                   const std::string& from) {
  if (!graph.Contains(from)) {
    throw Error(ErrorCode::kDomain, "unknown node " + from);
  }
  std::set<std::string> seen = {from};
  std::deque<std::string> queue = {from};
  while (!queue.empty()) {
    const std::string current = std::move(queue.front());
    queue.pop_front();
    for (auto& next : graph.Neighbors(current)) {
      if (seen.insert(next).second) queue.push_back(std::move(next));
    }
  }
  return seen;
}

std::set<std::string> TerminalNodes(const LaneGraph& graph) {
  std::set<std::string> terminals;
  for (const auto& [id, node] : graph.nodes()) {
    if (graph.Neighbors(id).empty()) terminals.insert(id);
  }
  return terminals;
}

void SuppressDanglingLateralEdges(LaneGraph& graph) {
  std::set<std::string> has_successor;
  for (const auto& edge : graph.edges()) {
    if (edge.relation == EdgeRelation::kSuccessor) {
      has_successor.insert(edge.from);
    }
  }
  graph.RemoveEdgesIf([&](const GraphEdge& edge) {
    if (edge.relation != EdgeRelation::kLeft &&
        edge.relation != EdgeRelation::kRight) {
      return false;
    }
    return !has_successor.contains(edge.from) ||
           !has_successor.contains(edge.to);
  });
}

}  // namespace lanescape
