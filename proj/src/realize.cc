#include "lanescape/realize.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "lanescape/error.h"

namespace lanescape {

namespace {

using Json = nlohmann::ordered_json;

constexpr double kTieTolerance = 1e-9;  // m
constexpr int kTimelineVersion = 1;

struct WeightedNeighbor {
  std::string node;
  double length;
};

// Traversal neighbours with edge lengths; parallel edges keep the shortest.
std::vector<WeightedNeighbor> Adjacent(const LaneGraph& graph,
                                       const std::string& id, bool forward) {
  std::unordered_map<std::string, double> best;
  auto offer = [&](const std::string& other, double length) {
    auto [it, inserted] = best.emplace(other, length);
    if (!inserted) it->second = std::min(it->second, length);
  };
  const auto& primary = forward ? graph.OutEdges(id) : graph.InEdges(id);
  for (const std::size_t i : primary) {
    const GraphEdge& edge = graph.edges()[i];
    if (edge.relation == EdgeRelation::kGoal) continue;
    offer(forward ? edge.to : edge.from, edge.length);
  }
  const auto& secondary = forward ? graph.InEdges(id) : graph.OutEdges(id);
  for (const std::size_t i : secondary) {
    const GraphEdge& edge = graph.edges()[i];
    if (edge.relation != EdgeRelation::kPedestrian) continue;
    offer(forward ? edge.from : edge.to, edge.length);
  }
  std::vector<WeightedNeighbor> result;
  result.reserve(best.size());
  for (auto& [node, length] : best) result.push_back({node, length});
  std::sort(result.begin(), result.end(),
            [](const auto& a, const auto& b) { return a.node < b.node; });
  return result;
}

// Distance from every node to `goal` (reverse Dijkstra).
std::unordered_map<std::string, double> DistancesTo(const LaneGraph& graph,
                                                    const std::string& goal) {
  using Item = std::pair<double, std::string>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  std::unordered_map<std::string, double> dist;
  dist[goal] = 0.0;
  queue.emplace(0.0, goal);
  while (!queue.empty()) {
    auto [d, node] = queue.top();
    queue.pop();
    if (d > dist[node]) continue;
    for (const auto& [prev, length] : Adjacent(graph, node, false)) {
      const double candidate = d + length;
      auto it = dist.find(prev);
      if (it == dist.end() || candidate < it->second) {
        dist[prev] = candidate;
        queue.emplace(candidate, prev);
      }
    }
  }
  return dist;
}

}  // namespace

Pose TrajectoryPlan::PoseAt(double arc) const {
  if (poses.empty()) return {};
  if (arc <= poses.front().arc_length) return poses.front().pose;
  if (arc >= poses.back().arc_length) return poses.back().pose;
  auto upper = std::upper_bound(
      poses.begin(), poses.end(), arc,
      [](double value, const PathPose& p) { return value < p.arc_length; });
  const PathPose& b = *upper;
  const PathPose& a = *(upper - 1);
  const double span = b.arc_length - a.arc_length;
  const double f = span > 0.0 ? (arc - a.arc_length) / span : 1.0;
  return {a.pose.x + f * (b.pose.x - a.pose.x),
          a.pose.y + f * (b.pose.y - a.pose.y), b.pose.heading};
}

TrajectoryPlan PlanTrajectory(const LaneGraph& graph, const std::string& spawn,
                              const std::string& goal) {
  graph.node(spawn);
  graph.node(goal);
  if (spawn == goal) {
    throw Error(ErrorCode::kPlanning, "spawn and goal are both " + spawn);
  }
  const auto dist = DistancesTo(graph, goal);
  if (!dist.contains(spawn)) {
    throw Error(ErrorCode::kPlanning,
                "goal " + goal + " is unreachable from " + spawn);
  }

  TrajectoryPlan plan;
  plan.node_path.push_back(spawn);
  std::vector<double> edge_lengths;
  std::unordered_set<std::string> visited = {spawn};
  std::string current = spawn;
  while (current != goal) {
    const double here = dist.at(current);
    const double tolerance = kTieTolerance * std::max(1.0, here);
    const WeightedNeighbor* chosen = nullptr;
    // Adjacent() is sorted by id, so the first optimal neighbour is the
    // lexicographically smallest continuation.
    const auto neighbors = Adjacent(graph, current, true);
    for (const auto& next : neighbors) {
      const auto it = dist.find(next.node);
      if (it == dist.end() || visited.contains(next.node)) continue;
      if (std::abs(next.length + it->second - here) <= tolerance) {
        chosen = &next;
        break;
      }
    }
    if (!chosen) {
      throw Error(ErrorCode::kPlanning,
                  "no shortest-path continuation from " + current);
    }
    edge_lengths.push_back(chosen->length);
    current = chosen->node;
    visited.insert(current);
    plan.node_path.push_back(current);
  }
  for (const double length : edge_lengths) plan.path_length += length;
  if (!(plan.path_length > 0.0)) {
    throw Error(ErrorCode::kPlanning,
                "path from " + spawn + " to " + goal + " has zero length");
  }

  // Densify: positions at <= kDensifyStep spacing, arc length following the
  // edge lengths.
  const Pose& start = graph.node(spawn).pose;
  double heading = start.heading;
  for (std::size_t i = 0; i + 1 < plan.node_path.size(); ++i) {
    const Pose& a = graph.node(plan.node_path[i]).pose;
    const Pose& b = graph.node(plan.node_path[i + 1]).pose;
    if (Distance(a, b) > 0.0) {
      heading = std::atan2(b.y - a.y, b.x - a.x);
      break;
    }
  }
  plan.poses.push_back({{start.x, start.y, heading}, 0.0});
  double arc = 0.0;
  for (std::size_t i = 0; i + 1 < plan.node_path.size(); ++i) {
    const Pose& a = graph.node(plan.node_path[i]).pose;
    const Pose& b = graph.node(plan.node_path[i + 1]).pose;
    const double d = Distance(a, b);
    if (d > 0.0) heading = std::atan2(b.y - a.y, b.x - a.x);
    const int pieces = std::max(1, static_cast<int>(std::ceil(d / kDensifyStep)));
    for (int j = 1; j <= pieces; ++j) {
      const double f = static_cast<double>(j) / pieces;
      plan.poses.push_back({{a.x + f * (b.x - a.x), a.y + f * (b.y - a.y),
                             heading},
                            arc + f * edge_lengths[i]});
    }
    arc += edge_lengths[i];
  }
  plan.poses.back().arc_length = plan.path_length;
  return plan;
}

Timeline RealizeScenario(const Scenario& scenario, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw Error(ErrorCode::kDomain,
                "time step must be positive, got " + std::to_string(dt));
  }
  Timeline timeline;
  timeline.dt = dt;

  std::vector<TrajectoryPlan> plans;
  plans.reserve(scenario.actors.size());
  double longest = 0.0;
  std::string slowest;
  for (const auto& actor : scenario.actors) {
    try {
      plans.push_back(
          PlanTrajectory(scenario.subgraph, actor.spawn_node, actor.goal_node));
    } catch (const Error& e) {
      throw Error(ErrorCode::kPlanning,
                  "actor " + actor.actor_id + ": " + e.what());
    }
    plans.back().actor_id = actor.actor_id;
    timeline.actor_ids.push_back(actor.actor_id);
    const double travel_time = plans.back().path_length / actor.desired_velocity;
    if (travel_time > longest) {
      longest = travel_time;
      slowest = actor.actor_id;
    }
  }

  const double steps = std::ceil(longest / dt - 1e-9);
  if (steps + 1.0 > static_cast<double>(kMaxFrames)) {
    throw Error(ErrorCode::kPlanning,
                "actor " + slowest + " needs " + std::to_string(steps + 1.0) +
                    " frames, more than the limit of " +
                    std::to_string(kMaxFrames));
  }
  const auto last_frame = static_cast<std::size_t>(std::max(0.0, steps));
  timeline.duration = static_cast<double>(last_frame) * dt;
  timeline.frames.reserve(last_frame + 1);

  for (std::size_t k = 0; k <= last_frame; ++k) {
    TimelineFrame frame;
    frame.t = static_cast<double>(k) * dt;
    for (std::size_t a = 0; a < plans.size(); ++a) {
      const ActorSpec& actor = scenario.actors[a];
      const TrajectoryPlan& plan = plans[a];
      double arc = actor.desired_velocity * static_cast<double>(k) * dt;
      const bool done =
          arc >= plan.path_length - 1e-9 * std::max(1.0, plan.path_length);
      if (done) arc = plan.path_length;
      frame.states.push_back(
          {actor.actor_id,
           OffsetLaterally(plan.PoseAt(arc), actor.lateral_offset), arc,
           done});
    }
    timeline.frames.push_back(std::move(frame));
  }
  return timeline;
}

std::string TimelineToDocument(const Timeline& timeline) {
  std::ostringstream out;
  Json header;
  header["format"] = "lanescape-timeline";
  header["version"] = kTimelineVersion;
  header["dt"] = timeline.dt;
  header["duration"] = timeline.duration;
  header["frame_count"] = timeline.frames.size();
  header["actors"] = timeline.actor_ids;
  out << header.dump() << "\n";
  for (std::size_t k = 0; k < timeline.frames.size(); ++k) {
    const TimelineFrame& frame = timeline.frames[k];
    Json line;
    line["k"] = k;
    line["t"] = frame.t;
    line["states"] = Json::array();
    for (const auto& state : frame.states) {
      line["states"].push_back({{"id", state.actor_id},
                                {"x", state.pose.x},
                                {"y", state.pose.y},
                                {"heading", state.pose.heading},
                                {"s", state.arc_length},
                                {"done", state.done}});
    }
    out << line.dump() << "\n";
  }
  return out.str();
}

Timeline TimelineFromDocument(std::string_view document) {
  std::istringstream in{std::string(document)};
  std::string line;
  Timeline timeline;
  try {
    if (!std::getline(in, line)) {
      throw Error(ErrorCode::kFormat, "empty timeline document");
    }
    const Json header = Json::parse(line);
    if (header.at("format") != "lanescape-timeline" ||
        header.at("version") != kTimelineVersion) {
      throw Error(ErrorCode::kFormat, "not a supported timeline document");
    }
    timeline.dt = header.at("dt").get<double>();
    timeline.duration = header.at("duration").get<double>();
    timeline.actor_ids = header.at("actors").get<std::vector<std::string>>();
    const auto expected = header.at("frame_count").get<std::size_t>();
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const Json j = Json::parse(line);
      TimelineFrame frame;
      frame.t = j.at("t").get<double>();
      for (const auto& s : j.at("states")) {
        frame.states.push_back(
            {s.at("id").get<std::string>(),
             {s.at("x").get<double>(), s.at("y").get<double>(),
              s.at("heading").get<double>()},
             s.at("s").get<double>(),
             s.at("done").get<bool>()});
      }
      timeline.frames.push_back(std::move(frame));
    }
    if (timeline.frames.size() != expected) {
      throw Error(ErrorCode::kFormat, "timeline frame count mismatch");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormat,
                std::string("malformed timeline document: ") + e.what());
  }
  return timeline;
}

}  // namespace lanescape
