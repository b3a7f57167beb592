#include "lanescape/persist.h"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "lanescape/error.h"
#include "lanescape/graphml.h"
#include "lanescape/lane_graph.h"

namespace lanescape {

namespace fs = std::filesystem;

namespace {

using Json = nlohmann::ordered_json;

constexpr int kPartitionVersion = 1;

// Advisory lock on a cache entry, held for the lifetime of the object.
class EntryLock {
 public:
  explicit EntryLock(const fs::path& path) {
    fd_ = ::open(path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
    if (fd_ < 0) {
      throw Error(ErrorCode::kIo, "cannot open lock file " + path.string());
    }
    if (::flock(fd_, LOCK_EX) != 0) {
      ::close(fd_);
      throw Error(ErrorCode::kIo, "cannot lock " + path.string());
    }
  }
  ~EntryLock() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
  EntryLock(const EntryLock&) = delete;
  EntryLock& operator=(const EntryLock&) = delete;

 private:
  int fd_ = -1;
};

Json Parse(std::string_view text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormat, "malformed " + what + ": " + e.what());
  }
}

void ExpectHeader(const Json& j, std::string_view format, int version) {
  if (!j.is_object() || !j.contains("format") || j["format"] != format) {
    throw Error(ErrorCode::kFormat,
                "expected a " + std::string(format) + " document");
  }
  if (!j.contains("version") || j["version"] != version) {
    throw Error(ErrorCode::kFormat,
                "unsupported " + std::string(format) + " version " +
                    (j.contains("version") ? j["version"].dump() : "(none)"));
  }
}

Json MetadataJson(const MapMetadata& m) {
  Json j;
  j["map_id"] = m.map_id;
  j["junction_count"] = m.junction_count;
  j["crosswalk_count"] = m.crosswalk_count;
  j["traffic_light_count"] = m.traffic_light_count;
  j["total_drivable_length"] = m.total_drivable_length;
  j["bounding_box"] = {{"min_x", m.bounding_box.min_x},
                       {"min_y", m.bounding_box.min_y},
                       {"max_x", m.bounding_box.max_x},
                       {"max_y", m.bounding_box.max_y}};
  if (m.speed_limit_range) {
    j["speed_limit_range"] = {{"min", m.speed_limit_range->min},
                              {"max", m.speed_limit_range->max}};
  } else {
    j["speed_limit_range"] = nullptr;
  }
  return j;
}

MapMetadata MetadataFrom(const Json& j) {
  MapMetadata m;
  m.map_id = j.at("map_id").get<std::string>();
  m.junction_count = j.at("junction_count").get<int>();
  m.crosswalk_count = j.at("crosswalk_count").get<int>();
  m.traffic_light_count = j.at("traffic_light_count").get<int>();
  m.total_drivable_length = j.at("total_drivable_length").get<double>();
  const Json& box = j.at("bounding_box");
  m.bounding_box = {box.at("min_x").get<double>(), box.at("min_y").get<double>(),
                    box.at("max_x").get<double>(), box.at("max_y").get<double>()};
  const Json& speed = j.at("speed_limit_range");
  if (!speed.is_null()) {
    m.speed_limit_range =
        SpeedRange{speed.at("min").get<double>(), speed.at("max").get<double>()};
  }
  return m;
}

Json MetaDocument(const MapCatalogEntry& entry) {
  Json j;
  j["format"] = "lanescape-map";
  j["version"] = kMapCacheVersion;
  j["map_id"] = entry.map_id;
  j["source"] = entry.source;
  j["digest"] = entry.digest;
  j["spacing"] = entry.spacing;
  j["target_length"] = entry.target_length;
  j["metadata"] = MetadataJson(entry.metadata);
  return j;
}

MapCatalogEntry EntryFromMeta(const Json& j, const fs::path& cache_root) {
  ExpectHeader(j, "lanescape-map", kMapCacheVersion);
  MapCatalogEntry entry;
  entry.map_id = j.at("map_id").get<std::string>();
  entry.source = j.at("source").get<std::string>();
  entry.digest = j.at("digest").get<std::string>();
  entry.spacing = j.at("spacing").get<double>();
  entry.target_length = j.at("target_length").get<double>();
  entry.metadata = MetadataFrom(j.at("metadata"));
  entry.cache = CachePathsFor(cache_root, entry.map_id);
  return entry;
}

std::optional<MapCatalogEntry> ReadEntry(const fs::path& cache_root,
                                         const std::string& map_id) {
  const CachePaths paths = CachePathsFor(cache_root, map_id);
  std::error_code ec;
  if (!fs::is_regular_file(paths.meta, ec)) return std::nullopt;
  try {
    return EntryFromMeta(Parse(ReadFile(paths.meta), "map metadata"),
                         cache_root);
  } catch (const Error&) {
    return std::nullopt;
  } catch (const nlohmann::json::exception&) {
    return std::nullopt;
  }
}

std::string TrimmedFile(const fs::path& path) {
  std::string text = ReadFile(path);
  while (!text.empty() && (text.back() == '\n' || text.back() == ' ')) {
    text.pop_back();
  }
  return text;
}

bool CacheCurrent(const fs::path& cache_root, const MapCatalogEntry& wanted) {
  const auto existing = ReadEntry(cache_root, wanted.map_id);
  if (!existing) return false;
  std::error_code ec;
  const CachePaths& paths = wanted.cache;
  for (const fs::path& p : {paths.graph, paths.regions, paths.digest}) {
    if (!fs::is_regular_file(p, ec)) return false;
  }
  return existing->digest == wanted.digest &&
         existing->source == wanted.source &&
         existing->spacing == wanted.spacing &&
         existing->target_length == wanted.target_length &&
         TrimmedFile(paths.digest) == wanted.digest;
}

Json TimeOfDayJson(const TimeOfDay& time) {
  if (const auto* phase = std::get_if<DayPhase>(&time.value)) {
    return std::string(DayPhaseName(*phase));
  }
  return std::get<int>(time.value);
}

TimeOfDay TimeOfDayFrom(const Json& j) {
  if (j.is_string()) {
    const auto phase = TryParseDayPhase(j.get<std::string>());
    if (!phase) {
      throw Error(ErrorCode::kFormat,
                  "unknown time of day " + j.get<std::string>());
    }
    return TimeOfDay{*phase};
  }
  if (j.is_number_integer()) return TimeOfDay{j.get<int>()};
  throw Error(ErrorCode::kFormat,
              "time of day must be a phase name or integer minutes");
}

}  // namespace

Json EnvironmentToJson(const EnvironmentConfig& environment) {
  return {{"weather_preset", environment.weather_preset},
          {"time_of_day", TimeOfDayJson(environment.time_of_day)}};
}

EnvironmentConfig EnvironmentFromJson(const Json& j) {
  try {
    EnvironmentConfig environment;
    environment.weather_preset = j.at("weather_preset").get<std::string>();
    if (j.contains("time_of_day")) {
      environment.time_of_day = TimeOfDayFrom(j["time_of_day"]);
    }
    return environment;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormat,
                std::string("malformed environment: ") + e.what());
  }
}

Json ActorToJson(const ActorSpec& a) {
  Json actor;
  actor["id"] = a.actor_id;
  actor["category"] = std::string(CategoryName(a.category));
  actor["model"] = a.model ? Json(*a.model) : Json(nullptr);
  actor["spawn"] = a.spawn_node;
  actor["goal"] = a.goal_node;
  actor["velocity"] = a.desired_velocity;
  actor["offset"] = a.lateral_offset;
  actor["ego"] = a.is_ego;
  return actor;
}

ActorSpec ActorFromJson(const Json& a) {
  try {
    ActorSpec actor;
    if (a.contains("id")) actor.actor_id = a["id"].get<std::string>();
    actor.category = ParseCategory(a.at("category").get<std::string>());
    if (a.contains("model") && !a["model"].is_null()) {
      actor.model = a["model"].get<std::string>();
    }
    actor.spawn_node = a.at("spawn").get<std::string>();
    actor.goal_node = a.at("goal").get<std::string>();
    actor.desired_velocity = a.at("velocity").get<double>();
    actor.lateral_offset = a.value("offset", 0.0);
    actor.is_ego = a.value("ego", false);
    return actor;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormat, std::string("malformed actor: ") + e.what());
  }
}

Json MetadataToJsonValue(const MapMetadata& metadata) {
  return MetadataJson(metadata);
}

std::string Sha256Hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(),
                 nullptr) != 1) {
    throw Error(ErrorCode::kIo, "SHA-256 computation failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  hex.reserve(length * 2);
  for (unsigned int i = 0; i < length; ++i) {
    hex.push_back(kHex[digest[i] >> 4]);
    hex.push_back(kHex[digest[i] & 0xf]);
  }
  return hex;
}

std::string ReadFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::kIo, "error reading " + path.string());
  return buffer.str();
}

void WriteFileAtomic(const fs::path& path, std::string_view bytes) {
  static std::atomic<unsigned> counter{0};
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  if (ec) {
    throw Error(ErrorCode::kIo, "cannot create directory " +
                                    path.parent_path().string() + ": " +
                                    ec.message());
  }
  fs::path temp = path;
  temp += ".tmp." + std::to_string(::getpid()) + "." +
          std::to_string(counter.fetch_add(1));
  {
    std::ofstream out(temp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + temp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      fs::remove(temp, ec);
      throw Error(ErrorCode::kIo, "error writing " + temp.string());
    }
  }
  fs::rename(temp, path, ec);
  if (ec) {
    fs::remove(temp, ec);
    throw Error(ErrorCode::kIo, "cannot replace " + path.string());
  }
}

CachePaths CachePathsFor(const fs::path& cache_root, const std::string& map_id) {
  const fs::path dir = cache_root / map_id;
  return {dir / "meta", dir / "graph.graphml", dir / "regions", dir / "digest"};
}

IngestResult IngestMap(const fs::path& source, const fs::path& cache_root,
                       double spacing, double target_length) {
  const std::string bytes = ReadFile(source);
  IngestResult result;
  MapCatalogEntry& entry = result.entry;
  entry.map_id = source.stem().string();
  std::error_code ec;
  const fs::path absolute = fs::absolute(source, ec);
  entry.source = (ec ? source : absolute).lexically_normal().string();
  entry.digest = Sha256Hex(bytes);
  entry.spacing = spacing;
  entry.target_length = target_length;
  entry.cache = CachePathsFor(cache_root, entry.map_id);

  const fs::path dir = cache_root / entry.map_id;
  fs::create_directories(dir, ec);
  if (ec) {
    throw Error(ErrorCode::kIo,
                "cannot create cache directory " + dir.string() + ": " +
                    ec.message());
  }
  EntryLock lock(dir / ".lock");

  if (CacheCurrent(cache_root, entry)) {
    entry.metadata = ReadEntry(cache_root, entry.map_id)->metadata;
    return result;
  }

  const RoadNetwork network = ParseOpenDrive(bytes);
  entry.metadata = ExtractMetadata(network, entry.map_id);
  const LaneGraph road = BuildLaneGraph(network, entry.map_id, spacing);
  const LaneGraph pedestrian =
      BuildPedestrianGraph(network, entry.map_id, spacing, &result.warnings);
  const LaneGraph graph = MergeGraphs(road, pedestrian);
  const RegionPartition partition =
      SegmentRegions(graph, network, target_length);

  // The digest goes last: a crash part-way leaves a stale digest and the
  // next ingest rebuilds.
  fs::remove(entry.cache.digest, ec);
  WriteFileAtomic(entry.cache.graph, GraphToGraphml(graph));
  WriteFileAtomic(entry.cache.regions, PartitionToJson(partition));
  WriteFileAtomic(entry.cache.meta, MetaDocument(entry).dump(2) + "\n");
  WriteFileAtomic(entry.cache.digest, entry.digest + "\n");
  result.wrote = true;
  return result;
}

std::vector<MapCatalogEntry> ListCatalog(const fs::path& cache_root) {
  std::vector<MapCatalogEntry> entries;
  std::error_code ec;
  if (!fs::is_directory(cache_root, ec)) return entries;
  for (const auto& item : fs::directory_iterator(cache_root, ec)) {
    if (!item.is_directory()) continue;
    const std::string map_id = item.path().filename().string();
    if (auto entry = ReadEntry(cache_root, map_id)) {
      entries.push_back(std::move(*entry));
    }
  }
  std::sort(entries.begin(), entries.end(),
            [](const auto& a, const auto& b) { return a.map_id < b.map_id; });
  return entries;
}

MapData LoadMap(const fs::path& cache_root, const std::string& map_id) {
  const auto entry = ReadEntry(cache_root, map_id);
  if (!entry) throw Error(ErrorCode::kNotFound, "unknown map " + map_id);
  MapData map;
  map.map_id = entry->map_id;
  map.digest = entry->digest;
  map.graph = GraphmlToGraph(ReadFile(entry->cache.graph));
  map.partition = PartitionFromJson(ReadFile(entry->cache.regions));
  return map;
}

std::string MetadataToJson(const MapMetadata& metadata) {
  return MetadataJson(metadata).dump();
}

MapMetadata MetadataFromJson(std::string_view text) {
  try {
    return MetadataFrom(Parse(text, "map metadata"));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormat,
                std::string("malformed map metadata: ") + e.what());
  }
}

std::string PartitionToJson(const RegionPartition& partition) {
  Json j;
  j["format"] = "lanescape-regions";
  j["version"] = kPartitionVersion;
  j["map_id"] = partition.map_id;
  j["target_length"] = partition.target_length;
  j["regions"] = Json::array();
  for (const auto& [id, region] : partition.regions) {
    Json r;
    r["id"] = id;
    r["kind"] = std::string(RegionKindName(region.kind));
    r["source"] = region.source_id;
    r["s_begin"] = region.s_begin;
    r["s_end"] = region.s_end;
    r["nodes"] = region.node_ids;
    j["regions"].push_back(std::move(r));
  }
  j["adjacency"] = Json::object();
  for (const auto& [id, neighbors] : partition.adjacency) {
    j["adjacency"][id] = neighbors;
  }
  return j.dump() + "\n";
}

RegionPartition PartitionFromJson(std::string_view text) {
  const Json j = Parse(text, "region partition");
  ExpectHeader(j, "lanescape-regions", kPartitionVersion);
  RegionPartition partition;
  try {
    partition.map_id = j.at("map_id").get<std::string>();
    partition.target_length = j.at("target_length").get<double>();
    for (const Json& r : j.at("regions")) {
      Region region;
      region.region_id = r.at("id").get<std::string>();
      const std::string kind = r.at("kind").get<std::string>();
      if (kind == RegionKindName(RegionKind::kJunction)) {
        region.kind = RegionKind::kJunction;
      } else if (kind == RegionKindName(RegionKind::kRoadSegment)) {
        region.kind = RegionKind::kRoadSegment;
      } else {
        throw Error(ErrorCode::kFormat, "unknown region kind " + kind);
      }
      region.source_id = r.at("source").get<std::string>();
      region.s_begin = r.at("s_begin").get<double>();
      region.s_end = r.at("s_end").get<double>();
      region.node_ids = r.at("nodes").get<std::set<std::string>>();
      partition.regions.emplace(region.region_id, std::move(region));
    }
    for (const auto& [id, neighbors] : j.at("adjacency").items()) {
      partition.adjacency[id] = neighbors.get<std::set<std::string>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormat,
                std::string("malformed region partition: ") + e.what());
  }
  return partition;
}

std::string ScenarioToDocument(const Scenario& scenario) {
  Json j;
  j["format"] = "lanescape-scenario";
  j["version"] = kScenarioVersion;
  j["scenario_id"] = scenario.scenario_id;
  j["map_id"] = scenario.map_id;
  j["map_digest"] = scenario.map_digest;
  j["roi"] = scenario.roi.region_ids;
  j["environment"] = EnvironmentToJson(scenario.environment);
  j["actors"] = Json::array();
  for (const auto& actor : scenario.actors) {
    j["actors"].push_back(ActorToJson(actor));
  }
  j["ego"] = scenario.ego ? Json(*scenario.ego) : Json(nullptr);
  j["subgraph"] = GraphToGraphml(scenario.subgraph);
  return j.dump(2) + "\n";
}

Scenario DocumentToScenario(std::string_view document,
                            const AssetCatalog& catalog, const MapData* map) {
  const Json j = Parse(document, "scenario document");
  ExpectHeader(j, "lanescape-scenario", kScenarioVersion);
  Scenario scenario;
  try {
    scenario.scenario_id = j.at("scenario_id").get<std::string>();
    scenario.map_id = j.at("map_id").get<std::string>();
    scenario.map_digest = j.at("map_digest").get<std::string>();
    scenario.roi.region_ids = j.at("roi").get<std::vector<std::string>>();
    scenario.environment = EnvironmentFromJson(j.at("environment"));
    for (const Json& a : j.at("actors")) {
      scenario.actors.push_back(ActorFromJson(a));
    }
    if (!j.at("ego").is_null()) scenario.ego = j["ego"].get<std::string>();
    scenario.subgraph = GraphmlToGraph(j.at("subgraph").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormat,
                std::string("malformed scenario document: ") + e.what());
  }

  if (map) {
    if (map->map_id != scenario.map_id) {
      throw Error(ErrorCode::kStaleMap, "scenario refers to map " +
                                            scenario.map_id + ", not " +
                                            map->map_id);
    }
    if (map->digest != scenario.map_digest) {
      throw Error(ErrorCode::kStaleMap,
                  "map " + scenario.map_id +
                      " changed since the scenario was saved");
    }
  }

  std::vector<std::string> failures =
      CheckScenarioInvariants(scenario, catalog);
  if (map) {
    try {
      ValidateRoi(map->partition, scenario.roi);
      if (StripActors(scenario.subgraph) !=
          InducedSubgraph(map->graph, map->partition, scenario.roi)) {
        failures.push_back("subgraph differs from the roi's induced subgraph");
      }
    } catch (const Error& e) {
      failures.push_back(e.what());
    }
  }
  if (!failures.empty()) {
    throw Error(ErrorCode::kValidation,
                "scenario " + scenario.scenario_id + " is invalid", failures);
  }
  return scenario;
}

}  // namespace lanescape
