#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "lanescape/geometry.h"
#include "lanescape/lane_graph.h"
#include "lanescape/scenario.h"

namespace lanescape {

inline constexpr double kDefaultDt = 0.05;        // s
inline constexpr std::size_t kMaxFrames = 20000;
inline constexpr double kDensifyStep = 0.5;       // m

struct PathPose {
  Pose pose;
  double arc_length = 0.0;  // cumulative from the spawn node
  bool operator==(const PathPose&) const = default;
};

struct TrajectoryPlan {
  std::string actor_id;
  std::vector<std::string> node_path;  // spawn ... goal
  double path_length = 0.0;
  std::vector<PathPose> poses;  // densified, at most kDensifyStep apart

  // Linear interpolation along the densified poses; `arc` is clamped.
  Pose PoseAt(double arc) const;
  bool operator==(const TrajectoryPlan&) const = default;
};

// Minimum total edge length over traversal edges; among equal-length paths
// (within 1e-9 m) the lexicographically smallest node-id sequence wins.
// Throws Error(kPlanning) when the goal is unreachable or equals the spawn.
TrajectoryPlan PlanTrajectory(const LaneGraph& graph, const std::string& spawn,
                              const std::string& goal);

struct ActorState {
  std::string actor_id;
  Pose pose;
  double arc_length = 0.0;
  bool done = false;
  bool operator==(const ActorState&) const = default;
};

struct TimelineFrame {
  double t = 0.0;
  std::vector<ActorState> states;  // ordered by actor id
  bool operator==(const TimelineFrame&) const = default;
};

struct Timeline {
  double dt = kDefaultDt;
  double duration = 0.0;
  std::vector<std::string> actor_ids;
  std::vector<TimelineFrame> frames;
  bool operator==(const Timeline&) const = default;
};

// Constant-speed playback of every actor along its planned path, displaced
// by its lateral offset. Throws Error(kDomain) for dt <= 0 and
// Error(kPlanning) naming the actor that cannot be planned or would need
// more than kMaxFrames frames.
Timeline RealizeScenario(const Scenario& scenario, double dt = kDefaultDt);

// Line-delimited JSON: a header line, then one line per frame.
std::string TimelineToDocument(const Timeline& timeline);
Timeline TimelineFromDocument(std::string_view document);

}  // namespace lanescape
