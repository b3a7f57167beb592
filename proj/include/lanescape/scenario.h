#pragma once

#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "lanescape/actor.h"
#include "lanescape/assets.h"
#include "lanescape/lane_graph.h"
#include "lanescape/regions.h"

namespace lanescape {

// Symbolic phase or minutes since midnight in [0, 1440).
struct TimeOfDay {
  std::variant<DayPhase, int> value = DayPhase::kNoon;
  bool operator==(const TimeOfDay&) const = default;
};

struct EnvironmentConfig {
  std::string weather_preset;
  TimeOfDay time_of_day;
  bool operator==(const EnvironmentConfig&) const = default;
};

struct ActorSpec {
  std::string actor_id;
  ActorCategory category = ActorCategory::kNormalVehicle;
  std::optional<std::string> model;
  std::string spawn_node;
  std::string goal_node;
  double desired_velocity = 0.0;  // m/s
  double lateral_offset = 0.0;    // m, positive = left of the lane centre
  bool is_ego = false;

  bool operator==(const ActorSpec&) const = default;
};

struct PlacementLimits {
  double lateral_offset_margin = 1.0;  // m
};

// Everything the engine needs from one ingested map.
struct MapData {
  std::string map_id;
  std::string digest;
  LaneGraph graph;  // road-bound and pedestrian nodes together
  RegionPartition partition;
};

struct Scenario {
  std::string scenario_id;
  std::string map_id;
  std::string map_digest;
  Roi roi;
  EnvironmentConfig environment;
  // Sorted by actor_id.
  std::vector<ActorSpec> actors;
  std::optional<std::string> ego;
  // Induced subgraph carrying actor attributes on spawn nodes and one goal
  // edge per actor. This is the encoding that gets serialized.
  LaneGraph subgraph;

  const ActorSpec* FindActor(const std::string& actor_id) const;
  bool operator==(const Scenario&) const = default;
};

// Throws Error(kDomain) for an invalid roi or a preset missing from the
// catalog. A preset with `implies_time` overrides the requested time.
Scenario NewScenario(const MapData& map, const Roi& roi,
                     const EnvironmentConfig& environment,
                     const AssetCatalog& catalog, std::string scenario_id);

// Road-bound spawn: reachable terminal nodes. Pedestrian spawn: every node
// reachable over pedestrian edges. The spawn itself is never included.
std::set<std::string> GoalCandidates(const Scenario& scenario,
                                     const std::string& spawn_node);

// Throws Error(kConflict) for an occupied spawn node or a duplicate actor id
// and Error(kValidation), listing every failed check, otherwise.
Scenario PlaceActor(const Scenario& scenario, const ActorSpec& spec,
                    const AssetCatalog& catalog,
                    const PlacementLimits& limits = {});

Scenario DesignateEgo(const Scenario& scenario, const std::string& actor_id);
Scenario RemoveActor(const Scenario& scenario, const std::string& actor_id);

// Unoccupied road-bound nodes with at least one goal candidate.
std::set<std::string> EligibleSpawnNodes(const Scenario& scenario);
// Unoccupied pedestrian nodes that can reach another pedestrian node.
std::set<std::string> EligiblePedestrianSpawnNodes(const Scenario& scenario);
int MaxAllowableActors(const Scenario& scenario);

// Actor list rebuilt from node attributes and goal edges alone.
std::vector<ActorSpec> ActorsFromSubgraph(const LaneGraph& subgraph);

// Copy of the graph without actor attributes or goal edges.
LaneGraph StripActors(const LaneGraph& graph);

// Subgraph with actors stripped, as a GraphML document; the input hook for
// external scenario generators.
std::string ExportEmptySubgraph(const Scenario& scenario);

// Every invariant the scenario must satisfy; empty when valid.
std::vector<std::string> CheckScenarioInvariants(
    const Scenario& scenario, const AssetCatalog& catalog,
    const PlacementLimits& limits = {});

}  // namespace lanescape
