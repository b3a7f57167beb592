#include "lanescape/graphml.h"

#include <array>
#include <charconv>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "lanescape/error.h"

namespace lanescape {

namespace pt = boost::property_tree;

namespace {

struct KeyDecl {
  const char* name;
  const char* domain;
  const char* type;
};

constexpr std::array<KeyDecl, 17> kKeys = {{
    {"map_id", "graph", "string"},
    {"spacing", "graph", "double"},
    {"x", "node", "double"},
    {"y", "node", "double"},
    {"heading", "node", "double"},
    {"s", "node", "double"},
    {"road", "node", "string"},
    {"lane", "node", "int"},
    {"kind", "node", "string"},
    {"actor", "node", "string"},
    {"category", "node", "string"},
    {"model", "node", "string"},
    {"velocity", "node", "double"},
    {"offset", "node", "double"},
    {"ego", "node", "boolean"},
    {"relation", "edge", "string"},
    {"length", "edge", "double"},
}};

std::string Escape(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (const char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

void Data(std::ostringstream& out, const char* indent, std::string_view key,
          std::string_view value) {
  out << indent << "<data key=\"" << key << "\">" << Escape(value)
      << "</data>\n";
}

double ParseDouble(const std::string& text, const std::string& where) {
  double value = 0.0;
  const char* begin = text.data();
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw Error(ErrorCode::kFormat, where + ": '" + text + "' is not a number");
  }
  return value;
}

int ParseInt(const std::string& text, const std::string& where) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw Error(ErrorCode::kFormat,
                where + ": '" + text + "' is not an integer");
  }
  return value;
}

// Data values of one element keyed by attribute name; unknown keys are
// reported once per key id.
std::map<std::string, std::string> ReadData(
    const pt::ptree& element, const std::map<std::string, std::string>& keys,
    std::set<std::string>& reported, std::vector<std::string>* warnings) {
  std::map<std::string, std::string> values;
  for (const auto& [tag, child] : element) {
    if (tag != "data") continue;
    const std::string key = child.get<std::string>("<xmlattr>.key", "");
    const auto it = keys.find(key);
    if (it == keys.end()) {
      if (reported.insert(key).second && warnings) {
        warnings->push_back("ignoring unknown GraphML key '" + key + "'");
      }
      continue;
    }
    values[it->second] = child.data();
  }
  return values;
}

const std::string& Require(const std::map<std::string, std::string>& values,
                           const std::string& name, const std::string& where) {
  const auto it = values.find(name);
  if (it == values.end()) {
    throw Error(ErrorCode::kFormat, where + " is missing key '" + name + "'");
  }
  return it->second;
}

}  // namespace

std::string FormatDouble(double value) {
  if (value == 0.0) return "0";  // also folds -0
  std::array<char, 64> buffer{};
  auto [ptr, ec] = std::to_chars(buffer.data(), buffer.data() + buffer.size(),
                                 value);
  return std::string(buffer.data(), ptr);
}

std::string GraphToGraphml(const LaneGraph& graph) {
  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n";
  for (const auto& key : kKeys) {
    out << "  <key id=\"" << key.name << "\" for=\"" << key.domain
        << "\" attr.name=\"" << key.name << "\" attr.type=\"" << key.type
        << "\"/>\n";
  }
  out << "  <graph id=\"G\" edgedefault=\"directed\">\n";
  Data(out, "    ", "map_id", graph.map_id());
  Data(out, "    ", "spacing", FormatDouble(graph.spacing()));
  for (const auto& [id, node] : graph.nodes()) {
    out << "    <node id=\"" << Escape(id) << "\">\n";
    const char* in = "      ";
    Data(out, in, "x", FormatDouble(node.pose.x));
    Data(out, in, "y", FormatDouble(node.pose.y));
    Data(out, in, "heading", FormatDouble(node.pose.heading));
    Data(out, in, "s", FormatDouble(node.s_coord));
    Data(out, in, "road", node.road_id);
    Data(out, in, "lane", std::to_string(node.lane_id));
    Data(out, in, "kind", NodeKindName(node.kind));
    if (node.actor) {
      Data(out, in, "actor", node.actor->actor_id);
      Data(out, in, "category", CategoryName(node.actor->category));
      if (node.actor->model) Data(out, in, "model", *node.actor->model);
      Data(out, in, "velocity", FormatDouble(node.actor->velocity));
      Data(out, in, "offset", FormatDouble(node.actor->offset));
      Data(out, in, "ego", node.actor->ego ? "true" : "false");
    }
    out << "    </node>\n";
  }
  for (const auto& edge : graph.edges()) {
    out << "    <edge source=\"" << Escape(edge.from) << "\" target=\""
        << Escape(edge.to) << "\"";
    if (!edge.directed()) out << " directed=\"false\"";
    out << ">\n";
    Data(out, "      ", "relation", RelationName(edge.relation));
    Data(out, "      ", "length", FormatDouble(edge.length));
    out << "    </edge>\n";
  }
  out << "  </graph>\n</graphml>\n";
  return out.str();
}

LaneGraph GraphmlToGraph(std::string_view document,
                         std::vector<std::string>* warnings) {
  pt::ptree tree;
  try {
    std::istringstream stream{std::string(document)};
    pt::read_xml(stream, tree);
  } catch (const pt::xml_parser_error& e) {
    throw Error(ErrorCode::kFormat, "malformed GraphML at line " +
                                        std::to_string(e.line()) + ": " +
                                        e.message());
  }
  const auto root = tree.get_child_optional("graphml");
  if (!root) throw Error(ErrorCode::kFormat, "missing <graphml> root");

  // key id -> attribute name, for the names this dialect understands.
  std::map<std::string, std::string> keys;
  for (const auto& [tag, child] : *root) {
    if (tag != "key") continue;
    const std::string id = child.get<std::string>("<xmlattr>.id", "");
    const std::string name = child.get<std::string>("<xmlattr>.attr.name", id);
    for (const auto& known : kKeys) {
      if (name == known.name) keys[id] = name;
    }
  }

  const auto graph_node = root->get_child_optional("graph");
  if (!graph_node) throw Error(ErrorCode::kFormat, "missing <graph> element");

  std::set<std::string> reported;
  const auto graph_data = ReadData(*graph_node, keys, reported, warnings);
  const std::string map_id =
      graph_data.contains("map_id") ? graph_data.at("map_id") : "";
  const double spacing =
      graph_data.contains("spacing")
          ? ParseDouble(graph_data.at("spacing"), "graph spacing")
          : 0.0;
  LaneGraph graph(map_id, spacing);

  for (const auto& [tag, child] : *graph_node) {
    if (tag != "node") continue;
    GraphNode node;
    node.node_id = child.get<std::string>("<xmlattr>.id", "");
    if (node.node_id.empty()) {
      throw Error(ErrorCode::kFormat, "node without id");
    }
    const std::string where = "node " + node.node_id;
    const auto values = ReadData(child, keys, reported, warnings);
    node.pose.x = ParseDouble(Require(values, "x", where), where);
    node.pose.y = ParseDouble(Require(values, "y", where), where);
    node.pose.heading = ParseDouble(Require(values, "heading", where), where);
    node.s_coord = ParseDouble(Require(values, "s", where), where);
    node.road_id = Require(values, "road", where);
    node.lane_id = ParseInt(Require(values, "lane", where), where);
    const auto kind = TryParseNodeKind(Require(values, "kind", where));
    if (!kind) throw Error(ErrorCode::kFormat, where + ": unknown kind");
    node.kind = *kind;
    if (values.contains("actor")) {
      ActorAttributes actor;
      actor.actor_id = values.at("actor");
      const auto category =
          TryParseCategory(Require(values, "category", where));
      if (!category) {
        throw Error(ErrorCode::kFormat, where + ": unknown actor category");
      }
      actor.category = *category;
      if (values.contains("model")) actor.model = values.at("model");
      actor.velocity =
          ParseDouble(Require(values, "velocity", where), where);
      actor.offset = ParseDouble(Require(values, "offset", where), where);
      actor.ego = Require(values, "ego", where) == "true";
      node.actor = std::move(actor);
    }
    graph.AddNode(std::move(node));
  }

  for (const auto& [tag, child] : *graph_node) {
    if (tag != "edge") continue;
    GraphEdge edge;
    edge.from = child.get<std::string>("<xmlattr>.source", "");
    edge.to = child.get<std::string>("<xmlattr>.target", "");
    const std::string where = "edge " + edge.from + " -> " + edge.to;
    const auto values = ReadData(child, keys, reported, warnings);
    const auto relation = TryParseRelation(Require(values, "relation", where));
    if (!relation) throw Error(ErrorCode::kFormat, where + ": unknown relation");
    edge.relation = *relation;
    edge.length = values.contains("length")
                      ? ParseDouble(values.at("length"), where)
                      : 0.0;
    if (!values.contains("length") && graph.Contains(edge.from) &&
        graph.Contains(edge.to)) {
      edge.length = Distance(graph.node(edge.from).pose, graph.node(edge.to).pose);
    }
    try {
      graph.AddEdge(std::move(edge));
    } catch (const Error& e) {
      throw Error(ErrorCode::kFormat, e.what());
    }
  }
  return graph;
}

}  // namespace lanescape
