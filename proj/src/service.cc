#include "lanescape/service.h"

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "lanescape/error.h"
#include "lanescape/graphml.h"
#include "lanescape/realize.h"
#include "lanescape/regions.h"
#include "lanescape/sampler.h"

namespace lanescape {

namespace fs = std::filesystem;

namespace {

using Json = nlohmann::ordered_json;

constexpr int kMaxBatch = 1000;

HttpResponse JsonResponse(int status, const Json& body) {
  return {status, body.dump() + "\n", "application/json"};
}

int StatusFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kParse:
    case ErrorCode::kFormat:
      return 400;
    case ErrorCode::kNotFound:
      return 404;
    case ErrorCode::kRejected:
    case ErrorCode::kIdempotence:
    case ErrorCode::kConflict:
    case ErrorCode::kStaleMap:
      return 409;
    case ErrorCode::kStructural:
    case ErrorCode::kDomain:
    case ErrorCode::kValidation:
    case ErrorCode::kPlanning:
      return 422;
    case ErrorCode::kIo:
      return 500;
  }
  return 500;
}

HttpResponse ErrorResponse(const Error& error, Json extra = Json::object()) {
  Json body;
  body["code"] = ErrorCodeName(error.code());
  body["message"] = error.what();
  body["details"] = error.details();
  for (auto& [key, value] : extra.items()) body[key] = value;
  return JsonResponse(StatusFor(error.code()), body);
}

std::vector<std::string> SplitPath(const std::string& path) {
  std::vector<std::string> parts;
  std::string part;
  std::istringstream in(path);
  while (std::getline(in, part, '/')) {
    if (!part.empty()) parts.push_back(part);
  }
  return parts;
}

Json ParseBody(const std::string& body) {
  if (body.empty()) return Json::object();
  try {
    return Json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormat,
                std::string("request body is not valid JSON: ") + e.what());
  }
}

template <typename T>
T Field(const Json& body, const char* name) {
  if (!body.is_object() || !body.contains(name)) {
    throw Error(ErrorCode::kFormat,
                std::string("request body lacks field '") + name + "'");
  }
  try {
    return body[name].get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::kFormat,
                std::string("field '") + name + "' has the wrong type");
  }
}

std::optional<std::string> QueryValue(const HttpRequest& request,
                                      const std::string& key) {
  const auto it = request.query.find(key);
  if (it == request.query.end()) return std::nullopt;
  return it->second;
}

Roi RoiFromQuery(const HttpRequest& request) {
  Roi roi;
  const auto [begin, end] = request.query.equal_range("roi");
  for (auto it = begin; it != end; ++it) {
    std::istringstream in(it->second);
    std::string id;
    while (std::getline(in, id, ',')) {
      if (!id.empty()) roi.region_ids.push_back(id);
    }
  }
  return roi;
}

Json GraphJson(const LaneGraph& graph) {
  Json j;
  j["map_id"] = graph.map_id();
  j["spacing"] = graph.spacing();
  j["nodes"] = Json::array();
  for (const auto& [id, node] : graph.nodes()) {
    Json n;
    n["id"] = id;
    n["x"] = node.pose.x;
    n["y"] = node.pose.y;
    n["heading"] = node.pose.heading;
    n["s"] = node.s_coord;
    n["road"] = node.road_id;
    n["lane"] = node.lane_id;
    n["kind"] = std::string(NodeKindName(node.kind));
    j["nodes"].push_back(std::move(n));
  }
  j["edges"] = Json::array();
  for (const auto& edge : graph.edges()) {
    j["edges"].push_back({{"from", edge.from},
                          {"to", edge.to},
                          {"relation", std::string(RelationName(edge.relation))},
                          {"length", edge.length}});
  }
  return j;
}

Json EntryJson(const MapCatalogEntry& entry) {
  Json j;
  j["map_id"] = entry.map_id;
  j["source"] = entry.source;
  j["digest"] = entry.digest;
  j["spacing"] = entry.spacing;
  j["target_length"] = entry.target_length;
  j["metadata"] = MetadataToJsonValue(entry.metadata);
  return j;
}

std::string NextActorId(const Scenario& scenario) {
  for (int i = 0;; ++i) {
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "actor-%04d", i);
    if (!scenario.FindActor(buffer)) return buffer;
  }
}

void RequireMethod(const HttpRequest& request, std::string_view method) {
  if (request.method != method) {
    throw Error(ErrorCode::kNotFound,
                "no route for " + request.method + " " + request.path);
  }
}

}  // namespace

class Service::Server {
 public:
  explicit Server(Service& service) {
    auto handler = [&service](const httplib::Request& req,
                              httplib::Response& res) {
      HttpRequest request;
      request.method = req.method;
      request.path = req.path;
      for (const auto& [key, value] : req.params) {
        request.query.emplace(key, value);
      }
      request.body = req.body;
      const HttpResponse response = service.Handle(request);
      res.status = response.status;
      res.set_content(response.body, response.content_type.c_str());
    };
    http_.Get(".*", handler);
    http_.Post(".*", handler);
    http_.Put(".*", handler);
    http_.Delete(".*", handler);
  }

  ~Server() {
    http_.stop();
    if (thread_.joinable()) thread_.join();
  }

  bool Listen(const std::string& host, int port) {
    return http_.listen(host.c_str(), port);
  }

  int ListenInBackground(const std::string& host) {
    const int port = http_.bind_to_any_port(host.c_str());
    if (port < 0) return port;
    thread_ = std::thread([this] { http_.listen_after_bind(); });
    http_.wait_until_ready();
    return port;
  }

  void Stop() { http_.stop(); }

 private:
  httplib::Server http_;
  std::thread thread_;
};

Service::Service(ServiceOptions options) : options_(std::move(options)) {
  scenario_dir_ = options_.scenario_dir.value_or(options_.cache_root / "scenarios");
  catalog_ = options_.asset_catalog
                 ? LoadAssetCatalog(options_.asset_catalog->string())
                 : DefaultAssetCatalog();
  ReloadMaps();
  LoadSessions();
}

Service::~Service() = default;

void Service::ReloadMaps() {
  auto snapshot = std::make_shared<MapSnapshot>();
  for (auto& entry : ListCatalog(options_.cache_root)) {
    try {
      snapshot->maps.emplace(entry.map_id,
                             LoadMap(options_.cache_root, entry.map_id));
      snapshot->entries.push_back(std::move(entry));
    } catch (const Error& e) {
      std::cerr << "skipping map " << entry.map_id << ": " << e.what() << "\n";
    }
  }
  std::lock_guard lock(maps_mutex_);
  maps_ = std::move(snapshot);
}

std::shared_ptr<const Service::MapSnapshot> Service::Maps() const {
  std::lock_guard lock(maps_mutex_);
  return maps_;
}

const MapData& Service::MapFor(const MapSnapshot& maps,
                               const std::string& map_id) const {
  const auto it = maps.maps.find(map_id);
  if (it == maps.maps.end()) {
    throw Error(ErrorCode::kNotFound, "unknown map " + map_id);
  }
  return it->second;
}

void Service::LoadSessions() {
  std::error_code ec;
  if (!fs::is_directory(scenario_dir_, ec)) return;
  const auto maps = Maps();
  for (const auto& item : fs::directory_iterator(scenario_dir_, ec)) {
    if (item.path().extension() != ".scn") continue;
    try {
      const std::string document = ReadFile(item.path());
      Scenario probe = DocumentToScenario(document, catalog_);
      const MapData& map = MapFor(*maps, probe.map_id);
      auto session = std::make_shared<Session>();
      session->current = DocumentToScenario(document, catalog_, &map);
      sessions_.emplace(session->current.scenario_id, std::move(session));
    } catch (const Error& e) {
      std::cerr << "skipping stored scenario " << item.path() << ": "
                << e.what() << "\n";
    }
  }
}

std::shared_ptr<Service::Session> Service::FindSession(
    const std::string& scenario_id) const {
  std::shared_lock lock(sessions_mutex_);
  const auto it = sessions_.find(scenario_id);
  if (it == sessions_.end()) {
    throw Error(ErrorCode::kNotFound, "unknown scenario " + scenario_id);
  }
  return it->second;
}

std::string Service::NewScenarioId() {
  std::lock_guard lock(id_mutex_);
  static std::random_device device;
  std::string id;
  for (int i = 0; i < 4; ++i) {
    char buffer[9];
    std::snprintf(buffer, sizeof(buffer), "%08x", device());
    id += buffer;
  }
  return id;
}

std::string Service::Store(Scenario scenario) {
  auto session = std::make_shared<Session>();
  std::unique_lock lock(sessions_mutex_);
  while (scenario.scenario_id.empty() ||
         sessions_.contains(scenario.scenario_id)) {
    scenario.scenario_id = NewScenarioId();
  }
  Persist(scenario);
  const std::string id = scenario.scenario_id;
  session->current = std::move(scenario);
  sessions_.emplace(id, std::move(session));
  return id;
}

void Service::Commit(Session& session, Scenario next) {
  Persist(next);
  session.undo.push_back(std::move(session.current));
  while (session.undo.size() > options_.undo_depth) session.undo.pop_front();
  session.current = std::move(next);
}

void Service::Persist(const Scenario& scenario) const {
  WriteFileAtomic(scenario_dir_ / (scenario.scenario_id + ".scn"),
                  ScenarioToDocument(scenario));
}

HttpResponse Service::Handle(const HttpRequest& request) {
  try {
    return Route(request);
  } catch (const Error& e) {
    return ErrorResponse(e);
  } catch (const std::exception& e) {
    return ErrorResponse(Error(ErrorCode::kIo, e.what()));
  }
}

HttpResponse Service::Route(const HttpRequest& request) {
  const std::vector<std::string> parts = SplitPath(request.path);
  const std::string& method = request.method;
  const std::size_t n = parts.size();
  auto no_route = [&]() -> HttpResponse {
    throw Error(ErrorCode::kNotFound,
                "no route for " + method + " " + request.path);
  };
  if (n == 0) return no_route();

  if (parts[0] == "assets" && n == 1) {
    RequireMethod(request, "GET");
    return {200, AssetCatalogToJson(catalog_), "application/json"};
  }

  if (parts[0] == "maps") {
    const auto maps = Maps();
    if (n == 1) {
      RequireMethod(request, "GET");
      Json body;
      body["maps"] = Json::array();
      for (const auto& entry : maps->entries) body["maps"].push_back(EntryJson(entry));
      return JsonResponse(200, body);
    }
    if (n == 2 && parts[1] == "reload") {
      RequireMethod(request, "POST");
      ReloadMaps();
      return JsonResponse(200, {{"maps", Maps()->entries.size()}});
    }
    if (n == 3 && parts[2] == "regions") {
      RequireMethod(request, "GET");
      return {200, PartitionToJson(MapFor(*maps, parts[1]).partition),
              "application/json"};
    }
    if (n == 3 && parts[2] == "graph") {
      RequireMethod(request, "GET");
      const MapData& map = MapFor(*maps, parts[1]);
      const Roi roi = RoiFromQuery(request);
      const LaneGraph graph = roi.region_ids.empty()
                                  ? map.graph
                                  : InducedSubgraph(map.graph, map.partition, roi);
      if (QueryValue(request, "format") == "graphml") {
        return {200, GraphToGraphml(graph), "application/xml"};
      }
      return JsonResponse(200, GraphJson(graph));
    }
    return no_route();
  }

  if (parts[0] == "generate" && n == 1) {
    RequireMethod(request, "POST");
    const Json body = ParseBody(request.body);
    const SamplerConfig config =
        SamplerConfigFromJson(body.value("config", Json::object()));
    const int count = body.contains("count") ? Field<int>(body, "count") : 1;
    if (count < 1 || count > kMaxBatch) {
      throw Error(ErrorCode::kValidation,
                  "count must lie in [1, " + std::to_string(kMaxBatch) + "]");
    }
    const auto maps = Maps();
    std::vector<const MapData*> chosen;
    if (body.contains("maps")) {
      for (const auto& id : Field<std::set<std::string>>(body, "maps")) {
        chosen.push_back(&MapFor(*maps, id));
      }
    } else {
      for (const auto& [id, map] : maps->maps) chosen.push_back(&map);
    }
    std::vector<std::string> warnings;
    const auto batch = SampleBatch(chosen, catalog_, config, count, &warnings);
    Json response;
    response["scenarios"] = Json::array();
    for (const auto& scenario : batch) {
      response["scenarios"].push_back(Json::parse(ScenarioToDocument(scenario)));
    }
    response["warnings"] = warnings;
    return JsonResponse(200, response);
  }

  if (parts[0] != "scenarios") return no_route();

  if (n == 1) {
    if (method == "GET") {
      std::shared_lock lock(sessions_mutex_);
      Json ids = Json::array();
      for (const auto& [id, session] : sessions_) ids.push_back(id);
      return JsonResponse(200, {{"scenarios", ids}});
    }
    RequireMethod(request, "POST");
    const Json body = ParseBody(request.body);
    const auto maps = Maps();
    const MapData& map = MapFor(*maps, Field<std::string>(body, "map"));
    Roi roi{Field<std::vector<std::string>>(body, "roi")};
    EnvironmentConfig environment;
    if (body.contains("environment")) {
      environment = EnvironmentFromJson(body["environment"]);
    } else if (!catalog_.weather_presets.empty()) {
      environment.weather_preset = catalog_.weather_presets.front().id;
    }
    const std::string id = Store(
        NewScenario(map, roi, environment, catalog_, NewScenarioId()));
    return JsonResponse(201, {{"scenario_id", id}});
  }

  if (n == 2 && parts[1] == "import") {
    RequireMethod(request, "POST");
    const Scenario probe = DocumentToScenario(request.body, catalog_);
    const auto maps = Maps();
    const MapData& map = MapFor(*maps, probe.map_id);
    const std::string id =
        Store(DocumentToScenario(request.body, catalog_, &map));
    return JsonResponse(201, {{"scenario_id", id}});
  }

  const std::shared_ptr<Session> session = FindSession(parts[1]);
  std::lock_guard lock(session->mutex);
  const Scenario& current = session->current;
  auto current_map = [&]() -> std::pair<std::shared_ptr<const MapSnapshot>,
                                        const MapData*> {
    auto maps = Maps();
    const MapData* map = &MapFor(*maps, current.map_id);
    if (map->digest != current.map_digest) {
      throw Error(ErrorCode::kStaleMap,
                  "map " + current.map_id + " changed under scenario " +
                      current.scenario_id);
    }
    return {std::move(maps), map};
  };

  if (n == 2 || (n == 3 && parts[2] == "export")) {
    RequireMethod(request, "GET");
    return {200, ScenarioToDocument(current), "application/json"};
  }
  const std::string& action = parts[2];

  if (action == "export-empty" && n == 3) {
    RequireMethod(request, "GET");
    return {200, ExportEmptySubgraph(current), "application/xml"};
  }

  if (action == "roi") {
    const auto [maps, map] = current_map();
    if (n == 3) {
      RequireMethod(request, "GET");
      return JsonResponse(
          200, {{"roi", current.roi.region_ids},
                {"eligible_extensions",
                 EligibleExtensions(map->partition, current.roi)}});
    }
    if (n == 4 && parts[3] == "expand") {
      RequireMethod(request, "POST");
      const std::string region =
          Field<std::string>(ParseBody(request.body), "region");
      if (!map->partition.regions.contains(region)) {
        throw Error(ErrorCode::kNotFound, "unknown region " + region);
      }
      const auto eligible = EligibleExtensions(map->partition, current.roi);
      Roi roi;
      try {
        roi = ExpandRoi(map->partition, current.roi, region);
      } catch (const Error& e) {
        return ErrorResponse(e, {{"eligible_extensions", eligible}});
      }
      Scenario next = NewScenario(*map, roi, current.environment, catalog_,
                                  current.scenario_id);
      std::vector<std::string> failures;
      for (const auto& actor : current.actors) {
        try {
          next = PlaceActor(next, actor, catalog_);
        } catch (const Error& e) {
          failures.push_back("actor " + actor.actor_id + ": " + e.what());
        }
      }
      if (!failures.empty()) {
        throw Error(ErrorCode::kConflict,
                    "expansion would invalidate placed actors", failures);
      }
      Commit(*session, std::move(next));
      return JsonResponse(
          200, {{"roi", session->current.roi.region_ids},
                {"eligible_extensions",
                 EligibleExtensions(map->partition, session->current.roi)}});
    }
    return no_route();
  }

  if (action == "goal-candidates" && n == 3) {
    RequireMethod(request, "GET");
    const auto spawn = QueryValue(request, "spawn");
    if (!spawn) throw Error(ErrorCode::kFormat, "missing query parameter spawn");
    if (!current.subgraph.Contains(*spawn)) {
      throw Error(ErrorCode::kNotFound, "node " + *spawn + " is not in the roi");
    }
    return JsonResponse(200, {{"spawn", *spawn},
                              {"candidates", GoalCandidates(current, *spawn)}});
  }

  if (action == "spawn-candidates" && n == 3) {
    RequireMethod(request, "GET");
    return JsonResponse(
        200, {{"road", EligibleSpawnNodes(current)},
              {"pedestrian", EligiblePedestrianSpawnNodes(current)},
              {"max_allowable_actors", MaxAllowableActors(current)}});
  }

  if (action == "actors") {
    if (n == 3) {
      if (method == "GET") {
        Json actors = Json::array();
        for (const auto& actor : current.actors) actors.push_back(ActorToJson(actor));
        return JsonResponse(200, {{"actors", actors}});
      }
      RequireMethod(request, "POST");
      current_map();
      ActorSpec spec = ActorFromJson(ParseBody(request.body));
      if (spec.actor_id.empty()) spec.actor_id = NextActorId(current);
      Scenario next = PlaceActor(current, spec, catalog_);
      Commit(*session, std::move(next));
      return JsonResponse(201, {{"actor_id", spec.actor_id}});
    }
    if (n == 4) {
      RequireMethod(request, "DELETE");
      if (!current.FindActor(parts[3])) {
        throw Error(ErrorCode::kNotFound, "unknown actor " + parts[3]);
      }
      Commit(*session, RemoveActor(current, parts[3]));
      return JsonResponse(200, {{"removed", parts[3]}});
    }
    return no_route();
  }

  if (action == "ego" && n == 3) {
    RequireMethod(request, "POST");
    const std::string actor_id =
        Field<std::string>(ParseBody(request.body), "actor_id");
    if (!current.FindActor(actor_id)) {
      throw Error(ErrorCode::kNotFound, "unknown actor " + actor_id);
    }
    Commit(*session, DesignateEgo(current, actor_id));
    return JsonResponse(200, {{"ego", actor_id}});
  }

  if (action == "environment" && n == 3) {
    RequireMethod(request, "PUT");
    const auto [maps, map] = current_map();
    Scenario next = NewScenario(*map, current.roi,
                                EnvironmentFromJson(ParseBody(request.body)),
                                catalog_, current.scenario_id);
    next.actors = current.actors;
    next.ego = current.ego;
    next.subgraph = current.subgraph;
    const EnvironmentConfig applied = next.environment;
    Commit(*session, std::move(next));
    return JsonResponse(200, {{"environment", EnvironmentToJson(applied)}});
  }

  if (action == "realize" && n == 3) {
    RequireMethod(request, "POST");
    const Json body = ParseBody(request.body);
    const double dt = body.contains("dt") ? Field<double>(body, "dt") : kDefaultDt;
    return {200, TimelineToDocument(RealizeScenario(current, dt)),
            "application/x-ndjson"};
  }

  if (action == "undo" && n == 3) {
    RequireMethod(request, "POST");
    if (session->undo.empty()) {
      throw Error(ErrorCode::kConflict, "nothing to undo");
    }
    Scenario previous = std::move(session->undo.back());
    session->undo.pop_back();
    Persist(previous);
    session->current = std::move(previous);
    return {200, ScenarioToDocument(session->current), "application/json"};
  }

  return no_route();
}

bool Service::Listen(const std::string& host, int port) {
  server_ = std::make_unique<Server>(*this);
  return server_->Listen(host, port);
}

int Service::ListenInBackground(const std::string& host) {
  server_ = std::make_unique<Server>(*this);
  return server_->ListenInBackground(host);
}

void Service::Stop() {
  if (server_) server_->Stop();
}

}  // namespace lanescape
