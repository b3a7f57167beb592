#include "lanescape/scenario.h"

#include <algorithm>
#include <cmath>
#include <deque>

#include "lanescape/error.h"
#include "lanescape/graphml.h"

namespace lanescape {

namespace {

constexpr int kMinutesPerDay = 24 * 60;

bool ValidMinutes(const TimeOfDay& time) {
  if (const int* minutes = std::get_if<int>(&time.value)) {
    return *minutes >= 0 && *minutes < kMinutesPerDay;
  }
  return true;
}

ActorAttributes ToAttributes(const ActorSpec& spec) {
  return {spec.actor_id,       spec.category,       spec.model,
          spec.desired_velocity, spec.lateral_offset, spec.is_ego};
}

void InsertSorted(std::vector<ActorSpec>& actors, ActorSpec spec) {
  const auto at = std::lower_bound(
      actors.begin(), actors.end(), spec.actor_id,
      [](const ActorSpec& a, const std::string& id) { return a.actor_id < id; });
  actors.insert(at, std::move(spec));
}

ActorSpec& MutableActor(Scenario& scenario, const std::string& actor_id) {
  for (auto& actor : scenario.actors) {
    if (actor.actor_id == actor_id) return actor;
  }
  throw Error(ErrorCode::kDomain, "unknown actor " + actor_id);
}

void SetEgoFlag(Scenario& scenario, const std::string& actor_id, bool ego) {
  ActorSpec& actor = MutableActor(scenario, actor_id);
  actor.is_ego = ego;
  scenario.subgraph.SetActor(actor.spawn_node, ToAttributes(actor));
}

// Per-actor checks shared by placement and whole-scenario validation.
void CheckActor(const Scenario& scenario, const ActorSpec& spec,
                const AssetCatalog& catalog, const PlacementLimits& limits,
                std::vector<std::string>& failures) {
  const std::string who = "actor " + spec.actor_id + ": ";
  const LaneGraph& graph = scenario.subgraph;
  if (spec.actor_id.empty()) failures.push_back("actor id is empty");
  const bool pedestrian = spec.category == ActorCategory::kPedestrian;
  const NodeKind expected =
      pedestrian ? NodeKind::kPedestrian : NodeKind::kRoadBound;

  const bool spawn_ok = graph.Contains(spec.spawn_node);
  const bool goal_ok = graph.Contains(spec.goal_node);
  if (!spawn_ok) {
    failures.push_back(who + "spawn node " + spec.spawn_node +
                       " is not in the scenario subgraph");
  } else if (graph.node(spec.spawn_node).kind != expected) {
    failures.push_back(who + "spawn node kind does not match category " +
                       std::string(CategoryName(spec.category)));
  }
  if (!goal_ok) {
    failures.push_back(who + "goal node " + spec.goal_node +
                       " is not in the scenario subgraph");
  } else if (graph.node(spec.goal_node).kind != expected) {
    failures.push_back(who + "goal node kind does not match category " +
                       std::string(CategoryName(spec.category)));
  }
  if (spec.goal_node == spec.spawn_node) {
    failures.push_back(who + "goal equals spawn node");
  } else if (spawn_ok && goal_ok &&
             !GoalCandidates(scenario, spec.spawn_node)
                  .contains(spec.goal_node)) {
    failures.push_back(who + "goal " + spec.goal_node +
                       " is not a goal candidate of " + spec.spawn_node);
  }
  if (!(spec.desired_velocity > 0.0) || !std::isfinite(spec.desired_velocity)) {
    failures.push_back(who + "desired velocity must be positive");
  }
  if (!(std::abs(spec.lateral_offset) <= limits.lateral_offset_margin)) {
    failures.push_back(who + "lateral offset exceeds the lane margin of " +
                       std::to_string(limits.lateral_offset_margin) + " m");
  }
  if (spec.model) {
    const ActorModel* model = catalog.FindModel(*spec.model);
    if (!model) {
      failures.push_back(who + "model " + *spec.model +
                         " is not in the asset catalog");
    } else if (model->category != spec.category) {
      failures.push_back(who + "model " + *spec.model + " is a " +
                         std::string(CategoryName(model->category)));
    }
  }
  if (spec.is_ego && pedestrian) {
    failures.push_back(who + "a pedestrian cannot be the ego vehicle");
  }
}

}  // namespace

const ActorSpec* Scenario::FindActor(const std::string& actor_id) const {
  for (const auto& actor : actors) {
    if (actor.actor_id == actor_id) return &actor;
  }
  return nullptr;
}

Scenario NewScenario(const MapData& map, const Roi& roi,
                     const EnvironmentConfig& environment,
                     const AssetCatalog& catalog, std::string scenario_id) {
  const WeatherPreset* preset = catalog.FindPreset(environment.weather_preset);
  if (!preset) {
    throw Error(ErrorCode::kDomain, "unknown weather preset " +
                                        environment.weather_preset);
  }
  if (!ValidMinutes(environment.time_of_day)) {
    throw Error(ErrorCode::kDomain, "time of day outside [0, 1440) minutes");
  }
  Scenario scenario;
  scenario.scenario_id = std::move(scenario_id);
  scenario.map_id = map.map_id;
  scenario.map_digest = map.digest;
  scenario.roi = roi;
  scenario.environment = environment;
  if (preset->implies_time) {
    scenario.environment.time_of_day = TimeOfDay{*preset->implies_time};
  }
  scenario.subgraph = InducedSubgraph(map.graph, map.partition, roi);
  return scenario;
}

std::set<std::string> GoalCandidates(const Scenario& scenario,
                                     const std::string& spawn_node) {
  const LaneGraph& graph = scenario.subgraph;
  const GraphNode& spawn = graph.node(spawn_node);
  std::set<std::string> reachable = ReachableSet(graph, spawn_node);
  reachable.erase(spawn_node);
  if (spawn.kind == NodeKind::kPedestrian) return reachable;

  const std::set<std::string> terminals = TerminalNodes(graph);
  std::set<std::string> candidates;
  std::set_intersection(reachable.begin(), reachable.end(), terminals.begin(),
                        terminals.end(),
                        std::inserter(candidates, candidates.end()));
  return candidates;
}

Scenario PlaceActor(const Scenario& scenario, const ActorSpec& spec,
                    const AssetCatalog& catalog,
                    const PlacementLimits& limits) {
  if (scenario.FindActor(spec.actor_id)) {
    throw Error(ErrorCode::kConflict,
                "actor id " + spec.actor_id + " is already in use");
  }
  if (scenario.subgraph.Contains(spec.spawn_node) &&
      scenario.subgraph.node(spec.spawn_node).actor) {
    throw Error(ErrorCode::kConflict,
                "spawn node " + spec.spawn_node + " is already occupied by " +
                    scenario.subgraph.node(spec.spawn_node).actor->actor_id);
  }
  std::vector<std::string> failures;
  CheckActor(scenario, spec, catalog, limits, failures);
  if (!failures.empty()) {
    throw Error(ErrorCode::kValidation,
                "actor " + spec.actor_id + " failed validation", failures);
  }

  Scenario next = scenario;
  if (spec.is_ego && next.ego) SetEgoFlag(next, *next.ego, false);
  next.subgraph.SetActor(spec.spawn_node, ToAttributes(spec));
  next.subgraph.AddEdge(
      {spec.spawn_node, spec.goal_node, EdgeRelation::kGoal,
       Distance(next.subgraph.node(spec.spawn_node).pose,
                next.subgraph.node(spec.goal_node).pose)});
  InsertSorted(next.actors, spec);
  if (spec.is_ego) next.ego = spec.actor_id;
  return next;
}

Scenario DesignateEgo(const Scenario& scenario, const std::string& actor_id) {
  const ActorSpec* actor = scenario.FindActor(actor_id);
  if (!actor) throw Error(ErrorCode::kDomain, "unknown actor " + actor_id);
  if (!IsVehicle(actor->category)) {
    throw Error(ErrorCode::kValidation,
                "actor " + actor_id + " is a pedestrian and cannot be ego");
  }
  Scenario next = scenario;
  if (next.ego) SetEgoFlag(next, *next.ego, false);
  SetEgoFlag(next, actor_id, true);
  next.ego = actor_id;
  return next;
}

Scenario RemoveActor(const Scenario& scenario, const std::string& actor_id) {
  const ActorSpec* actor = scenario.FindActor(actor_id);
  if (!actor) throw Error(ErrorCode::kDomain, "unknown actor " + actor_id);
  Scenario next = scenario;
  const std::string spawn = actor->spawn_node;
  next.subgraph.SetActor(spawn, std::nullopt);
  next.subgraph.RemoveEdgesIf([&](const GraphEdge& edge) {
    return edge.relation == EdgeRelation::kGoal && edge.from == spawn;
  });
  std::erase_if(next.actors,
                [&](const ActorSpec& a) { return a.actor_id == actor_id; });
  if (next.ego == actor_id) next.ego.reset();
  return next;
}

std::set<std::string> EligibleSpawnNodes(const Scenario& scenario) {
  const LaneGraph& graph = scenario.subgraph;
  // Nodes with a path of length >= 1 to some terminal node: walk backwards
  // from every terminal.
  std::set<std::string> can_reach;
  std::deque<std::string> queue;
  for (const auto& terminal : TerminalNodes(graph)) {
    for (auto& prev : graph.Predecessors(terminal)) {
      if (can_reach.insert(prev).second) queue.push_back(std::move(prev));
    }
  }
  while (!queue.empty()) {
    const std::string current = std::move(queue.front());
    queue.pop_front();
    for (auto& prev : graph.Predecessors(current)) {
      if (can_reach.insert(prev).second) queue.push_back(std::move(prev));
    }
  }
  std::set<std::string> eligible;
  for (const auto& id : can_reach) {
    const GraphNode& node = graph.node(id);
    if (node.kind == NodeKind::kRoadBound && !node.actor) eligible.insert(id);
  }
  return eligible;
}

std::set<std::string> EligiblePedestrianSpawnNodes(const Scenario& scenario) {
  std::set<std::string> eligible;
  for (const auto& [id, node] : scenario.subgraph.nodes()) {
    if (node.kind == NodeKind::kPedestrian && !node.actor &&
        !scenario.subgraph.Neighbors(id).empty()) {
      eligible.insert(id);
    }
  }
  return eligible;
}

int MaxAllowableActors(const Scenario& scenario) {
  return static_cast<int>(EligibleSpawnNodes(scenario).size());
}

std::vector<ActorSpec> ActorsFromSubgraph(const LaneGraph& subgraph) {
  std::vector<ActorSpec> actors;
  for (const auto& [id, node] : subgraph.nodes()) {
    if (!node.actor) continue;
    ActorSpec spec;
    spec.actor_id = node.actor->actor_id;
    spec.category = node.actor->category;
    spec.model = node.actor->model;
    spec.spawn_node = id;
    spec.desired_velocity = node.actor->velocity;
    spec.lateral_offset = node.actor->offset;
    spec.is_ego = node.actor->ego;
    for (const std::size_t i : subgraph.OutEdges(id)) {
      if (subgraph.edges()[i].relation == EdgeRelation::kGoal) {
        spec.goal_node = subgraph.edges()[i].to;
      }
    }
    actors.push_back(std::move(spec));
  }
  std::sort(actors.begin(), actors.end(),
            [](const ActorSpec& a, const ActorSpec& b) {
              return a.actor_id < b.actor_id;
            });
  return actors;
}

LaneGraph StripActors(const LaneGraph& graph) {
  LaneGraph stripped = graph;
  for (const auto& [id, node] : graph.nodes()) {
    if (node.actor) stripped.SetActor(id, std::nullopt);
  }
  stripped.RemoveEdgesIf(
      [](const GraphEdge& edge) { return edge.relation == EdgeRelation::kGoal; });
  return stripped;
}

std::string ExportEmptySubgraph(const Scenario& scenario) {
  return GraphToGraphml(StripActors(scenario.subgraph));
}

std::vector<std::string> CheckScenarioInvariants(
    const Scenario& scenario, const AssetCatalog& catalog,
    const PlacementLimits& limits) {
  std::vector<std::string> failures;
  if (!catalog.FindPreset(scenario.environment.weather_preset)) {
    failures.push_back("unknown weather preset " +
                       scenario.environment.weather_preset);
  }
  if (!ValidMinutes(scenario.environment.time_of_day)) {
    failures.push_back("time of day outside [0, 1440) minutes");
  }

  std::set<std::string> ids;
  std::set<std::string> spawns;
  int ego_count = 0;
  for (std::size_t i = 0; i < scenario.actors.size(); ++i) {
    const ActorSpec& actor = scenario.actors[i];
    if (i > 0 && !(scenario.actors[i - 1].actor_id < actor.actor_id)) {
      failures.push_back("actor list is not sorted by unique id at " +
                         actor.actor_id);
    }
    if (!ids.insert(actor.actor_id).second) {
      failures.push_back("duplicate actor id " + actor.actor_id);
    }
    if (!spawns.insert(actor.spawn_node).second) {
      failures.push_back("spawn node " + actor.spawn_node +
                         " hosts more than one actor");
    }
    if (actor.is_ego) ++ego_count;
    CheckActor(scenario, actor, catalog, limits, failures);
  }
  if (ego_count > 1) failures.push_back("more than one ego actor");
  if (scenario.ego) {
    const ActorSpec* ego = scenario.FindActor(*scenario.ego);
    if (!ego) {
      failures.push_back("ego " + *scenario.ego + " is not a placed actor");
    } else if (!ego->is_ego) {
      failures.push_back("ego " + *scenario.ego + " is not flagged as ego");
    }
  } else if (ego_count > 0) {
    failures.push_back("an actor is flagged as ego but no ego is set");
  }

  std::size_t goal_edges = 0;
  for (const auto& edge : scenario.subgraph.edges()) {
    if (edge.relation == EdgeRelation::kGoal) ++goal_edges;
  }
  if (goal_edges != scenario.actors.size()) {
    failures.push_back("subgraph has " + std::to_string(goal_edges) +
                       " goal edges for " +
                       std::to_string(scenario.actors.size()) + " actors");
  }
  if (ActorsFromSubgraph(scenario.subgraph) != scenario.actors) {
    failures.push_back("subgraph actor attributes disagree with actor list");
  }
  return failures;
}

}  // namespace lanescape
