#include "lanescape/opendrive.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "lanescape/error.h"

namespace lanescape {

namespace pt = boost::property_tree;

namespace {

constexpr double kTilingTolerance = 0.01;  // m
constexpr double kRangeTolerance = 1e-9;   // m
// Dense sampling step used before chord decimation.
constexpr double kDenseStep = 0.01;  // m
constexpr double kMaxSampleInterval = 2.0;  // m
// Decimation keeps a margin below kMaxChordDeviation for the dense-sampling
// error itself.
constexpr double kDecimationTolerance = 0.04;  // m

std::string Attr(const pt::ptree& node, const std::string& name,
                 const std::string& fallback = "") {
  return node.get<std::string>("<xmlattr>." + name, fallback);
}

double NumAttr(const pt::ptree& node, const std::string& name,
               double fallback = 0.0) {
  const auto text = node.get_optional<std::string>("<xmlattr>." + name);
  if (!text || text->empty()) return fallback;
  try {
    return std::stod(*text);
  } catch (const std::exception&) {
    throw Error(ErrorCode::kParse,
                "attribute '" + name + "' is not a number: '" + *text + "'");
  }
}

ContactPoint ParseContact(const std::string& text) {
  return text == "end" ? ContactPoint::kEnd : ContactPoint::kStart;
}

std::optional<RoadLink> ParseRoadLink(const pt::ptree& node) {
  RoadLink link;
  link.element_type = Attr(node, "elementType") == "junction"
                          ? ElementType::kJunction
                          : ElementType::kRoad;
  link.element_id = Attr(node, "elementId");
  link.contact_point = ParseContact(Attr(node, "contactPoint", "start"));
  if (link.element_id.empty()) return std::nullopt;
  return link;
}

double SpeedToMetersPerSecond(double value, const std::string& unit) {
  if (unit == "km/h") return value / 3.6;
  if (unit == "mph") return value * 0.44704;
  return value;
}

LaneType ParseLaneType(const std::string& type) {
  if (type == "driving") return LaneType::kDriving;
  if (type == "sidewalk" || type == "walking") return LaneType::kSidewalk;
  return LaneType::kOther;
}

// Dense (s, x, y, heading) table in segment-local coordinates, s scaled so
// the final entry equals `length`.
using DenseTable = std::vector<GeometrySample>;

DenseTable DenseSpiral(double length, double curv_start, double curv_end) {
  const int steps = std::max(64, static_cast<int>(std::ceil(length / kDenseStep)));
  const double h = length / steps;
  const double rate = (curv_end - curv_start) / length;
  auto theta = [&](double s) { return curv_start * s + 0.5 * rate * s * s; };
  DenseTable table;
  table.reserve(steps + 1);
  double x = 0.0, y = 0.0;
  table.push_back({0.0, 0.0, 0.0, 0.0});
  for (int i = 0; i < steps; ++i) {
    const double s0 = i * h;
    const double s1 = (i + 1) * h;
    const double sm = 0.5 * (s0 + s1);
    // Simpson's rule on each step.
    x += h / 6.0 * (std::cos(theta(s0)) + 4.0 * std::cos(theta(sm)) +
                    std::cos(theta(s1)));
    y += h / 6.0 * (std::sin(theta(s0)) + 4.0 * std::sin(theta(sm)) +
                    std::sin(theta(s1)));
    table.push_back({s1, x, y, theta(s1)});
  }
  return table;
}

// Samples a parametric curve (u(p), v(p)) with tangent (du, dv) over
// [0, p_end] and accumulates chord length as the arc-length coordinate.
DenseTable DenseParametric(
    double length, double p_end,
    const std::function<std::pair<double, double>(double)>& position,
    const std::function<std::pair<double, double>(double)>& tangent) {
  const int steps = std::max(64, static_cast<int>(std::ceil(length / kDenseStep)));
  DenseTable table;
  table.reserve(steps + 1);
  double s = 0.0;
  double prev_heading = 0.0;
  for (int i = 0; i <= steps; ++i) {
    const double p = p_end * i / steps;
    const auto [u, v] = position(p);
    const auto [du, dv] = tangent(p);
    double heading = std::atan2(dv, du);
    if (i > 0) {
      s += std::hypot(u - table.back().x, v - table.back().y);
      heading = prev_heading + NormalizeAngle(heading - prev_heading);
    }
    prev_heading = heading;
    table.push_back({s, u, v, heading});
  }
  if (s > 0.0) {
    const double scale = length / s;
    for (auto& sample : table) sample.s *= scale;
  }
  table.back().s = length;
  return table;
}

double ChordDeviation(const GeometrySample& a, const GeometrySample& b,
                      const GeometrySample& p) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double chord = std::hypot(dx, dy);
  if (chord < 1e-12) return std::hypot(p.x - a.x, p.y - a.y);
  return std::abs(dx * (p.y - a.y) - dy * (p.x - a.x)) / chord;
}

// Greedy decimation: each retained interval keeps every dense point within
// kDecimationTolerance of its chord.
std::vector<GeometrySample> Decimate(const DenseTable& dense) {
  std::vector<GeometrySample> out;
  out.push_back(dense.front());
  std::size_t anchor = 0;
  while (anchor + 1 < dense.size()) {
    std::size_t best = anchor + 1;
    for (std::size_t end = anchor + 2; end < dense.size(); ++end) {
      if (dense[end].s - dense[anchor].s > kMaxSampleInterval) break;
      bool ok = true;
      for (std::size_t k = anchor + 1; k < end && ok; ++k) {
        ok = ChordDeviation(dense[anchor], dense[end], dense[k]) <=
             kDecimationTolerance;
      }
      if (!ok) break;
      best = end;
    }
    out.push_back(dense[best]);
    anchor = best;
  }
  return out;
}

// Moves a local table into world coordinates at (x0, y0, hdg0).
ApproximatedGeometry Place(const DenseTable& local, double x0, double y0,
                           double hdg0) {
  ApproximatedGeometry geometry;
  const double c = std::cos(hdg0);
  const double s = std::sin(hdg0);
  for (const auto& sample : Decimate(local)) {
    geometry.samples.push_back({sample.s, x0 + c * sample.x - s * sample.y,
                                y0 + s * sample.x + c * sample.y,
                                hdg0 + sample.heading});
  }
  return geometry;
}

GeometrySegment ParseGeometry(const pt::ptree& node,
                              const std::string& road_id) {
  GeometrySegment segment;
  segment.s_offset = NumAttr(node, "s");
  segment.origin_x = NumAttr(node, "x");
  segment.origin_y = NumAttr(node, "y");
  segment.heading = NumAttr(node, "hdg");
  segment.length = NumAttr(node, "length");
  if (!(segment.length > 0.0)) {
    throw Error(ErrorCode::kStructural,
                "road " + road_id + ": geometry with non-positive length");
  }
  const double length = segment.length;
  for (const auto& [tag, child] : node) {
    if (tag == "line") {
      segment.kind = LineGeometry{};
      return segment;
    }
    if (tag == "arc") {
      const double curvature = NumAttr(child, "curvature");
      if (curvature == 0.0) {
        segment.kind = LineGeometry{};
      } else {
        segment.kind = ArcGeometry{curvature};
      }
      return segment;
    }
    if (tag == "spiral") {
      const double k0 = NumAttr(child, "curvStart");
      const double k1 = NumAttr(child, "curvEnd");
      segment.kind = Place(DenseSpiral(length, k0, k1), segment.origin_x,
                           segment.origin_y, segment.heading);
      return segment;
    }
    if (tag == "poly3") {
      const double a = NumAttr(child, "a"), b = NumAttr(child, "b"),
                   c = NumAttr(child, "c"), d = NumAttr(child, "d");
      // u is not arc length: extend until the chord-length reaches `length`
      // by integrating sqrt(1 + v'^2) with a fine step.
      double u_end = 0.0;
      double arc = 0.0;
      const double du = kDenseStep / 4.0;
      while (arc < length) {
        const double v0 = a + b * u_end + c * u_end * u_end +
                          d * u_end * u_end * u_end;
        const double u1 = u_end + du;
        const double v1 = a + b * u1 + c * u1 * u1 + d * u1 * u1 * u1;
        arc += std::hypot(du, v1 - v0);
        u_end = u1;
      }
      segment.kind = Place(
          DenseParametric(
              length, u_end,
              [=](double u) {
                return std::pair{u, a + b * u + c * u * u + d * u * u * u};
              },
              [=](double u) {
                return std::pair{1.0, b + 2 * c * u + 3 * d * u * u};
              }),
          segment.origin_x, segment.origin_y, segment.heading);
      return segment;
    }
    if (tag == "paramPoly3") {
      const double au = NumAttr(child, "aU"), bu = NumAttr(child, "bU"),
                   cu = NumAttr(child, "cU"), du = NumAttr(child, "dU");
      const double av = NumAttr(child, "aV"), bv = NumAttr(child, "bV"),
                   cv = NumAttr(child, "cV"), dv = NumAttr(child, "dV");
      const double p_end =
          Attr(child, "pRange", "normalized") == "arcLength" ? length : 1.0;
      segment.kind = Place(
          DenseParametric(
              length, p_end,
              [=](double p) {
                return std::pair{au + bu * p + cu * p * p + du * p * p * p,
                                 av + bv * p + cv * p * p + dv * p * p * p};
              },
              [=](double p) {
                return std::pair{bu + 2 * cu * p + 3 * du * p * p,
                                 bv + 2 * cv * p + 3 * dv * p * p};
              }),
          segment.origin_x, segment.origin_y, segment.heading);
      return segment;
    }
  }
  throw Error(ErrorCode::kStructural,
              "road " + road_id + ": geometry at s=" +
                  std::to_string(segment.s_offset) + " has no known shape");
}

Lane ParseLane(const pt::ptree& node, bool left_hand_traffic) {
  Lane lane;
  lane.lane_id = static_cast<int>(NumAttr(node, "id"));
  lane.lane_type = ParseLaneType(Attr(node, "type"));
  const bool positive = lane.lane_id > 0;
  lane.travel_direction = (positive != left_hand_traffic)
                              ? TravelDirection::kAgainstS
                              : TravelDirection::kWithS;
  for (const auto& [tag, child] : node) {
    if (tag == "link") {
      if (auto pred = child.get_child_optional("predecessor")) {
        lane.predecessor = static_cast<int>(NumAttr(*pred, "id"));
      }
      if (auto succ = child.get_child_optional("successor")) {
        lane.successor = static_cast<int>(NumAttr(*succ, "id"));
      }
    } else if (tag == "width") {
      lane.width_polys.push_back({NumAttr(child, "sOffset"), NumAttr(child, "a"),
                                  NumAttr(child, "b"), NumAttr(child, "c"),
                                  NumAttr(child, "d")});
    } else if (tag == "roadMark") {
      ++lane.road_mark_count;
    }
  }
  std::stable_sort(lane.width_polys.begin(), lane.width_polys.end(),
                   [](const WidthPoly& a, const WidthPoly& b) {
                     return a.s_offset < b.s_offset;
                   });
  return lane;
}

void ValidateGeometryTiling(const Road& road) {
  double expected = 0.0;
  for (const auto& segment : road.geometry) {
    if (std::abs(segment.s_offset - expected) > kTilingTolerance) {
      throw Error(ErrorCode::kStructural,
                  "road " + road.road_id +
                      ": geometry segments leave a gap or overlap at s=" +
                      std::to_string(segment.s_offset));
    }
    expected = segment.s_offset + segment.length;
  }
  if (std::abs(expected - road.length) > kTilingTolerance) {
    throw Error(ErrorCode::kStructural,
                "road " + road.road_id +
                    ": geometry length does not match road length");
  }
}

Road ParseRoad(const pt::ptree& node, RoadNetwork& network,
               const ParseOptions& options) {
  Road road;
  road.road_id = Attr(node, "id");
  road.name = Attr(node, "name");
  road.length = NumAttr(node, "length");
  road.left_hand_traffic = Attr(node, "rule") == "LHT";
  const std::string junction = Attr(node, "junction", "-1");
  if (!junction.empty() && junction != "-1") road.junction_id = junction;

  for (const auto& [tag, child] : node) {
    if (tag == "link") {
      if (auto pred = child.get_child_optional("predecessor")) {
        road.predecessor = ParseRoadLink(*pred);
      }
      if (auto succ = child.get_child_optional("successor")) {
        road.successor = ParseRoadLink(*succ);
      }
    } else if (tag == "type") {
      if (auto speed = child.get_child_optional("speed")) {
        const double max = NumAttr(*speed, "max", -1.0);
        if (max > 0.0) {
          const double mps =
              SpeedToMetersPerSecond(max, Attr(*speed, "unit", "m/s"));
          road.speed_limit =
              road.speed_limit ? std::min(*road.speed_limit, mps) : mps;
        }
      }
    } else if (tag == "planView") {
      for (const auto& [gtag, gnode] : child) {
        if (gtag == "geometry") {
          road.geometry.push_back(ParseGeometry(gnode, road.road_id));
        }
      }
    } else if (tag == "lanes") {
      for (const auto& [stag, snode] : child) {
        if (stag != "laneSection") continue;
        LaneSection section;
        section.s_start = NumAttr(snode, "s");
        for (const auto& [side, side_node] : snode) {
          if (side != "left" && side != "right") continue;
          for (const auto& [ltag, lnode] : side_node) {
            if (ltag != "lane") continue;
            Lane lane = ParseLane(lnode, road.left_hand_traffic);
            if (lane.lane_id == 0) continue;
            network.lane_marking_count += lane.road_mark_count;
            section.lanes[lane.lane_id] = std::move(lane);
          }
        }
        road.lane_sections.push_back(std::move(section));
      }
    } else if (tag == "signals") {
      for (const auto& [sig_tag, sig] : child) {
        if (sig_tag != "signal") continue;
        if (options.traffic_light_types.contains(Attr(sig, "type"))) {
          network.signals.push_back({Attr(sig, "id"), road.road_id,
                                     NumAttr(sig, "s"), NumAttr(sig, "t")});
        } else {
          ++network.road_sign_count;
        }
      }
    } else if (tag == "objects") {
      for (const auto& [obj_tag, obj] : child) {
        if (obj_tag != "object") continue;
        std::string type = Attr(obj, "type");
        std::transform(type.begin(), type.end(), type.begin(), ::tolower);
        if (type != "crosswalk") continue;
        network.crosswalk_objects.push_back(
            {Attr(obj, "id"), road.road_id, NumAttr(obj, "s"), NumAttr(obj, "t"),
             NumAttr(obj, "hdg"), NumAttr(obj, "length"),
             NumAttr(obj, "width")});
      }
    }
  }

  if (road.geometry.empty()) {
    throw Error(ErrorCode::kStructural,
                "road " + road.road_id + " has no geometry");
  }
  std::stable_sort(road.geometry.begin(), road.geometry.end(),
                   [](const auto& a, const auto& b) {
                     return a.s_offset < b.s_offset;
                   });
  ValidateGeometryTiling(road);

  std::stable_sort(road.lane_sections.begin(), road.lane_sections.end(),
                   [](const auto& a, const auto& b) {
                     return a.s_start < b.s_start;
                   });
  for (std::size_t i = 0; i < road.lane_sections.size(); ++i) {
    road.lane_sections[i].s_end = i + 1 < road.lane_sections.size()
                                      ? road.lane_sections[i + 1].s_start
                                      : road.length;
  }
  return road;
}

void CheckLinkTarget(const RoadNetwork& network, const std::string& road_id,
                     const std::optional<RoadLink>& link) {
  if (!link) return;
  const bool found = link->element_type == ElementType::kRoad
                         ? network.roads.contains(link->element_id)
                         : network.junctions.contains(link->element_id);
  if (!found) {
    throw Error(ErrorCode::kStructural,
                "road " + road_id + " links to missing " +
                    (link->element_type == ElementType::kRoad ? "road "
                                                              : "junction ") +
                    link->element_id);
  }
}

void ValidateReferences(const RoadNetwork& network) {
  for (const auto& [id, road] : network.roads) {
    CheckLinkTarget(network, id, road.predecessor);
    CheckLinkTarget(network, id, road.successor);
    if (road.junction_id && !network.junctions.contains(*road.junction_id)) {
      throw Error(ErrorCode::kStructural,
                  "road " + id + " belongs to missing junction " +
                      *road.junction_id);
    }
  }
  for (const auto& [junction_id, connections] : network.junctions) {
    for (const auto& connection : connections) {
      for (const auto* road : {&connection.incoming_road,
                               &connection.connecting_road}) {
        if (!network.roads.contains(*road)) {
          throw Error(ErrorCode::kStructural,
                      "junction " + junction_id + " connection " +
                          connection.connection_id +
                          " references missing road " + *road);
        }
      }
    }
  }
}

}  // namespace

Pose GeometrySegment::Evaluate(double local_s) const {
  local_s = std::clamp(local_s, 0.0, length);
  if (std::holds_alternative<LineGeometry>(kind)) {
    return {origin_x + local_s * std::cos(heading),
            origin_y + local_s * std::sin(heading), NormalizeAngle(heading)};
  }
  if (const auto* arc = std::get_if<ArcGeometry>(&kind)) {
    const double k = arc->curvature;
    const double end_heading = heading + k * local_s;
    return {origin_x + (std::sin(end_heading) - std::sin(heading)) / k,
            origin_y - (std::cos(end_heading) - std::cos(heading)) / k,
            NormalizeAngle(end_heading)};
  }
  const auto& samples = std::get<ApproximatedGeometry>(kind).samples;
  auto upper = std::upper_bound(
      samples.begin(), samples.end(), local_s,
      [](double s, const GeometrySample& sample) { return s < sample.s; });
  if (upper == samples.end()) {
    const auto& last = samples.back();
    return {last.x, last.y, NormalizeAngle(last.heading)};
  }
  if (upper == samples.begin()) {
    return {upper->x, upper->y, NormalizeAngle(upper->heading)};
  }
  const auto& b = *upper;
  const auto& a = *(upper - 1);
  const double f = (local_s - a.s) / (b.s - a.s);
  return {a.x + f * (b.x - a.x), a.y + f * (b.y - a.y),
          NormalizeAngle(a.heading + f * (b.heading - a.heading))};
}

double Lane::WidthAt(double ds) const {
  if (width_polys.empty()) return 0.0;
  auto it = std::upper_bound(
      width_polys.begin(), width_polys.end(), ds,
      [](double s, const WidthPoly& poly) { return s < poly.s_offset; });
  const WidthPoly& poly = it == width_polys.begin() ? *it : *(it - 1);
  const double u = ds - poly.s_offset;
  return std::max(0.0, poly.a + u * (poly.b + u * (poly.c + u * poly.d)));
}

std::size_t Road::SectionIndexAt(double s) const {
  std::size_t index = 0;
  for (std::size_t i = 0; i < lane_sections.size(); ++i) {
    if (lane_sections[i].s_start <= s + kRangeTolerance) index = i;
  }
  return index;
}

RoadNetwork ParseOpenDrive(std::string_view document,
                           const ParseOptions& options) {
  pt::ptree tree;
  try {
    std::istringstream stream{std::string(document)};
    pt::read_xml(stream, tree);
  } catch (const pt::xml_parser_error& e) {
    throw Error(ErrorCode::kParse, "malformed XML at line " +
                                       std::to_string(e.line()) + ": " +
                                       e.message());
  }
  const auto root = tree.get_child_optional("OpenDRIVE");
  if (!root) {
    throw Error(ErrorCode::kParse, "document has no OpenDRIVE root element");
  }

  RoadNetwork network;
  for (const auto& [tag, node] : *root) {
    if (tag == "road") {
      Road road = ParseRoad(node, network, options);
      const std::string id = road.road_id;
      if (!network.roads.emplace(id, std::move(road)).second) {
        throw Error(ErrorCode::kStructural, "duplicate road id " + id);
      }
    } else if (tag == "junction") {
      auto& connections = network.junctions[Attr(node, "id")];
      for (const auto& [ctag, cnode] : node) {
        if (ctag != "connection") continue;
        JunctionConnection connection;
        connection.connection_id = Attr(cnode, "id");
        connection.incoming_road = Attr(cnode, "incomingRoad");
        connection.connecting_road = Attr(cnode, "connectingRoad");
        connection.contact_point =
            ParseContact(Attr(cnode, "contactPoint", "start"));
        for (const auto& [ltag, lnode] : cnode) {
          if (ltag != "laneLink") continue;
          connection.lane_links.push_back(
              {static_cast<int>(NumAttr(lnode, "from")),
               static_cast<int>(NumAttr(lnode, "to"))});
        }
        connections.push_back(std::move(connection));
      }
    }
  }
  ValidateReferences(network);
  return network;
}

RoadNetwork LoadOpenDriveFile(const std::string& path,
                              const ParseOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return ParseOpenDrive(buffer.str(), options);
}

Pose EvalReferenceLine(const Road& road, double s) {
  if (s < -kRangeTolerance || s > road.length + kRangeTolerance ||
      std::isnan(s)) {
    throw Error(ErrorCode::kDomain, "s=" + std::to_string(s) +
                                        " outside road " + road.road_id);
  }
  if (road.geometry.empty()) {
    throw Error(ErrorCode::kStructural,
                "road " + road.road_id + " has no geometry");
  }
  auto it = std::upper_bound(
      road.geometry.begin(), road.geometry.end(), s,
      [](double value, const GeometrySegment& g) { return value < g.s_offset; });
  const GeometrySegment& segment =
      it == road.geometry.begin() ? *it : *(it - 1);
  return segment.Evaluate(s - segment.s_offset);
}

double LaneCenterOffset(const LaneSection& section, int lane_id, double s) {
  const double ds = s - section.s_start;
  const int sign = lane_id > 0 ? 1 : -1;
  double offset = 0.0;
  for (int id = sign; id != lane_id; id += sign) {
    if (auto it = section.lanes.find(id); it != section.lanes.end()) {
      offset += it->second.WidthAt(ds);
    }
  }
  offset += 0.5 * section.lanes.at(lane_id).WidthAt(ds);
  return sign * offset;
}

Pose EvalLaneCenterInSection(const Road& road, std::size_t section_index,
                             int lane_id, double s) {
  if (section_index >= road.lane_sections.size()) {
    throw Error(ErrorCode::kDomain,
                "road " + road.road_id + " has no lane section " +
                    std::to_string(section_index));
  }
  const LaneSection& section = road.lane_sections[section_index];
  const auto lane = section.lanes.find(lane_id);
  if (lane == section.lanes.end()) {
    throw Error(ErrorCode::kDomain, "road " + road.road_id + " has no lane " +
                                        std::to_string(lane_id) +
                                        " at s=" + std::to_string(s));
  }
  const Pose reference = EvalReferenceLine(road, s);
  Pose pose = OffsetLaterally(reference, LaneCenterOffset(section, lane_id, s));
  if (lane->second.travel_direction == TravelDirection::kAgainstS) {
    pose.heading = NormalizeAngle(pose.heading + std::numbers::pi);
  }
  return pose;
}

Pose EvalLaneCenter(const Road& road, int lane_id, double s) {
  if (road.lane_sections.empty()) {
    throw Error(ErrorCode::kDomain,
                "road " + road.road_id + " has no lane sections");
  }
  return EvalLaneCenterInSection(road, road.SectionIndexAt(s), lane_id, s);
}

MapMetadata ExtractMetadata(const RoadNetwork& network,
                            const std::string& map_id) {
  MapMetadata meta;
  meta.map_id = map_id;
  meta.junction_count = static_cast<int>(network.junctions.size());
  meta.traffic_light_count = static_cast<int>(network.signals.size());
  meta.crosswalk_count = static_cast<int>(network.crosswalk_objects.size());

  double min_x = std::numeric_limits<double>::infinity();
  double min_y = min_x;
  double max_x = -min_x;
  double max_y = -min_x;
  auto extend = [&](const Pose& p) {
    min_x = std::min(min_x, p.x);
    min_y = std::min(min_y, p.y);
    max_x = std::max(max_x, p.x);
    max_y = std::max(max_y, p.y);
  };

  for (const auto& [id, road] : network.roads) {
    for (const auto& section : road.lane_sections) {
      for (const auto& [lane_id, lane] : section.lanes) {
        if (lane.lane_type == LaneType::kDriving) {
          meta.total_drivable_length += section.length();
        }
      }
      const int steps =
          std::max(1, static_cast<int>(std::ceil(section.length())));
      for (int i = 0; i <= steps; ++i) {
        const double s = section.s_start + section.length() * i / steps;
        const Pose ref = EvalReferenceLine(road, s);
        extend(ref);
        // Outer boundary on each side.
        double left = 0.0, right = 0.0;
        for (const auto& [lane_id, lane] : section.lanes) {
          (lane_id > 0 ? left : right) += lane.WidthAt(s - section.s_start);
        }
        extend(OffsetLaterally(ref, left));
        extend(OffsetLaterally(ref, -right));
      }
    }
    if (road.speed_limit) {
      if (!meta.speed_limit_range) {
        meta.speed_limit_range = SpeedRange{*road.speed_limit, *road.speed_limit};
      } else {
        meta.speed_limit_range->min =
            std::min(meta.speed_limit_range->min, *road.speed_limit);
        meta.speed_limit_range->max =
            std::max(meta.speed_limit_range->max, *road.speed_limit);
      }
    }
  }
  if (min_x <= max_x) meta.bounding_box = {min_x, min_y, max_x, max_y};
  return meta;
}

}  // namespace lanescape
