#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "lanescape/geometry.h"

namespace lanescape {

// ---------------------------------------------------------------------------
// Reference-line geometry
// ---------------------------------------------------------------------------

struct LineGeometry {
  bool operator==(const LineGeometry&) const = default;
};

struct ArcGeometry {
  double curvature = 0.0;  // 1/m, never zero
  bool operator==(const ArcGeometry&) const = default;
};

struct GeometrySample {
  double s = 0.0;  // local arc length within the segment
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;  // unwrapped along the table
  bool operator==(const GeometrySample&) const = default;
};

// Spirals, poly3 and paramPoly3 are stored as chord tables whose maximum
// deviation from the true curve is below kMaxChordDeviation.
struct ApproximatedGeometry {
  std::vector<GeometrySample> samples;
  bool operator==(const ApproximatedGeometry&) const = default;
};

inline constexpr double kMaxChordDeviation = 0.05;  // m

struct GeometrySegment {
  double s_offset = 0.0;
  double origin_x = 0.0;
  double origin_y = 0.0;
  double heading = 0.0;
  double length = 0.0;
  std::variant<LineGeometry, ArcGeometry, ApproximatedGeometry> kind;

  // `local_s` in [0, length].
  Pose Evaluate(double local_s) const;

  bool operator==(const GeometrySegment&) const = default;
};

// ---------------------------------------------------------------------------
// Lanes, roads, junctions
// ---------------------------------------------------------------------------

enum class LaneType { kDriving, kSidewalk, kOther };
enum class TravelDirection { kWithS, kAgainstS };

struct WidthPoly {
  double s_offset = 0.0;  // relative to the lane section start
  double a = 0.0, b = 0.0, c = 0.0, d = 0.0;
  bool operator==(const WidthPoly&) const = default;
};

struct Lane {
  int lane_id = 0;
  LaneType lane_type = LaneType::kOther;
  std::vector<WidthPoly> width_polys;
  TravelDirection travel_direction = TravelDirection::kWithS;
  std::optional<int> predecessor;  // lane id in the neighbouring section/road
  std::optional<int> successor;
  int road_mark_count = 0;

  // Width at `ds` metres from the section start, clamped to >= 0.
  double WidthAt(double ds) const;

  bool operator==(const Lane&) const = default;
};

struct LaneSection {
  double s_start = 0.0;
  double s_end = 0.0;
  std::map<int, Lane> lanes;  // keyed by lane id, 0 never stored

  double length() const { return s_end - s_start; }
  bool operator==(const LaneSection&) const = default;
};

enum class ElementType { kRoad, kJunction };
enum class ContactPoint { kStart, kEnd };

struct RoadLink {
  ElementType element_type = ElementType::kRoad;
  std::string element_id;
  ContactPoint contact_point = ContactPoint::kStart;
  bool operator==(const RoadLink&) const = default;
};

struct Road {
  std::string road_id;
  std::string name;
  double length = 0.0;
  std::vector<GeometrySegment> geometry;
  std::vector<LaneSection> lane_sections;
  std::optional<RoadLink> predecessor;
  std::optional<RoadLink> successor;
  std::optional<std::string> junction_id;
  std::optional<double> speed_limit;  // m/s
  bool left_hand_traffic = false;

  // Index of the lane section covering `s` (the last one starting at or
  // before it).
  std::size_t SectionIndexAt(double s) const;

  bool operator==(const Road&) const = default;
};

struct LaneLink {
  int from = 0;
  int to = 0;
  bool operator==(const LaneLink&) const = default;
};

struct JunctionConnection {
  std::string connection_id;
  std::string incoming_road;
  std::string connecting_road;
  ContactPoint contact_point = ContactPoint::kStart;
  std::vector<LaneLink> lane_links;
  bool operator==(const JunctionConnection&) const = default;
};

struct TrafficLight {
  std::string signal_id;
  std::string road_id;
  double s = 0.0;
  double t = 0.0;
  bool operator==(const TrafficLight&) const = default;
};

struct Crosswalk {
  std::string object_id;
  std::string road_id;
  double s = 0.0;
  double t = 0.0;
  double heading = 0.0;  // relative to the road heading at s
  double length = 0.0;   // crossing length along the object heading
  double width = 0.0;
  bool operator==(const Crosswalk&) const = default;
};

struct RoadNetwork {
  std::map<std::string, Road> roads;
  std::map<std::string, std::vector<JunctionConnection>> junctions;
  std::vector<TrafficLight> signals;
  std::vector<Crosswalk> crosswalk_objects;
  // Parsed for completeness, not surfaced in the map catalog.
  int road_sign_count = 0;
  int lane_marking_count = 0;

  bool operator==(const RoadNetwork&) const = default;
};

struct ParseOptions {
  // Signal `type` values treated as traffic lights.
  std::set<std::string> traffic_light_types = {
      "1000001", "1000002", "1000009", "1000011", "trafficLight"};
};

// Throws Error(kParse) on malformed XML and Error(kStructural) on roads
// without geometry or links to missing roads/junctions.
RoadNetwork ParseOpenDrive(std::string_view document,
                           const ParseOptions& options = {});
RoadNetwork LoadOpenDriveFile(const std::string& path,
                              const ParseOptions& options = {});

Pose EvalReferenceLine(const Road& road, double s);
Pose EvalLaneCenter(const Road& road, int lane_id, double s);
// Same as EvalLaneCenter but pinned to one lane section, so section end
// points evaluate against the section that owns them.
Pose EvalLaneCenterInSection(const Road& road, std::size_t section_index,
                             int lane_id, double s);

// Signed lateral offset of the lane centre from the reference line.
double LaneCenterOffset(const LaneSection& section, int lane_id, double s);

struct BoundingBox {
  double min_x = 0.0, min_y = 0.0, max_x = 0.0, max_y = 0.0;
  bool operator==(const BoundingBox&) const = default;
};

struct SpeedRange {
  double min = 0.0, max = 0.0;
  bool operator==(const SpeedRange&) const = default;
};

struct MapMetadata {
  std::string map_id;
  int junction_count = 0;
  int crosswalk_count = 0;
  int traffic_light_count = 0;
  double total_drivable_length = 0.0;
  BoundingBox bounding_box;
  std::optional<SpeedRange> speed_limit_range;

  bool operator==(const MapMetadata&) const = default;
};

MapMetadata ExtractMetadata(const RoadNetwork& network,
                            const std::string& map_id);

}  // namespace lanescape
