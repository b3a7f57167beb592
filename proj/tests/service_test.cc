#include "lanescape/service.h"

#include <atomic>
#include <random>
#include <set>
#include <string>
#include <thread>

#include <gtest/gtest.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "lanescape/error.h"
#include "lanescape/graphml.h"
#include "lanescape/realize.h"
#include "testing.h"

namespace lanescape {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;
using testing::FixturePath;
using testing::TempDir;

const std::string kCar = "vehicle.tesla.model3";

std::string S(int lane, int index) {
  return "fixture_straight:1:" + std::to_string(lane) + ":" +
         std::to_string(index);
}

class ServiceTest : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = dir_.path() / "cache";
    IngestMap(FixturePath("fixture_straight.xodr"), root_, 5.0, 50.0);
    IngestMap(FixturePath("fixture_tjunction.xodr"), root_, 5.0, 40.0);
    service_ = std::make_unique<Service>(ServiceOptions{root_});
  }

  HttpResponse Call(const std::string& method, const std::string& path,
                    const std::string& body = "",
                    std::multimap<std::string, std::string> query = {}) {
    return service_->Handle({method, path, std::move(query), body});
  }
  Json CallJson(const std::string& method, const std::string& path,
                const Json& body = Json::object(), int expected = 200) {
    const HttpResponse r = Call(method, path, body.dump());
    EXPECT_EQ(r.status, expected) << method << " " << path << ": " << r.body;
    return Json::parse(r.body);
  }

  std::string NewStraight(std::vector<std::string> roi = {"road:1:0",
                                                          "road:1:1"}) {
    return CallJson("POST", "/scenarios",
                    {{"map", "fixture_straight"}, {"roi", roi}}, 201)
        .at("scenario_id");
  }
  static Json Car(const std::string& spawn, const std::string& goal,
                  double velocity = 8.0) {
    return {{"category", "normal_vehicle"}, {"model", kCar},
            {"spawn", spawn},               {"goal", goal},
            {"velocity", velocity},         {"offset", 0.0}};
  }
  std::string Export(const std::string& id) {
    return Call("GET", "/scenarios/" + id + "/export").body;
  }
  MapData Map(const std::string& id) const { return LoadMap(root_, id); }

  // The stored document must load cleanly against its map.
  void ExpectStoredValid(const std::string& id) {
    const std::string doc = Export(id);
    const Scenario probe = DocumentToScenario(doc, DefaultAssetCatalog());
    const MapData map = Map(probe.map_id);
    EXPECT_NO_THROW(DocumentToScenario(doc, DefaultAssetCatalog(), &map));
  }

  TempDir dir_;
  fs::path root_;
  std::unique_ptr<Service> service_;
};

TEST_F(ServiceTest, MapsAndRegions) {
  const Json maps = CallJson("GET", "/maps");
  ASSERT_EQ(maps["maps"].size(), 2u);
  EXPECT_EQ(maps["maps"][0]["map_id"], "fixture_straight");
  EXPECT_EQ(maps["maps"][1]["metadata"]["junction_count"], 1);

  const HttpResponse regions = Call("GET", "/maps/fixture_tjunction/regions");
  ASSERT_EQ(regions.status, 200);
  EXPECT_EQ(PartitionFromJson(regions.body), Map("fixture_tjunction").partition);

  const HttpResponse missing = Call("GET", "/maps/nowhere/regions");
  EXPECT_EQ(missing.status, 404);
  EXPECT_EQ(Json::parse(missing.body)["code"], "not_found");
  EXPECT_EQ(Call("GET", "/nothing").status, 404);
  EXPECT_EQ(Call("DELETE", "/maps").status, 404);
  EXPECT_EQ(Call("GET", "/assets").status, 200);
}

TEST_F(ServiceTest, GraphEndpointReturnsInducedSubgraph) {
  const MapData map = Map("fixture_straight");
  const LaneGraph induced =
      InducedSubgraph(map.graph, map.partition, Roi{{"road:1:1"}});
  const HttpResponse r = Call("GET", "/maps/fixture_straight/graph", "",
                              {{"roi", "road:1:1"}});
  const Json j = Json::parse(r.body);
  EXPECT_EQ(j["nodes"].size(), induced.nodes().size());
  EXPECT_EQ(j["edges"].size(), induced.edges().size());
  const HttpResponse xml = Call("GET", "/maps/fixture_straight/graph", "",
                                {{"roi", "road:1:1"}, {"format", "graphml"}});
  EXPECT_EQ(GraphmlToGraph(xml.body), induced);
  EXPECT_EQ(Call("GET", "/maps/fixture_straight/graph", "",
                 {{"roi", "road:9:9"}}).status,
            422);
}

TEST_F(ServiceTest, RoiExpansionRules) {
  const MapData map = Map("fixture_tjunction");
  std::string start;
  std::string far;
  for (const auto& [id, region] : map.partition.regions) {
    for (const auto& [other, r] : map.partition.regions) {
      if (id != other && !map.partition.adjacency.at(id).contains(other)) {
        start = id;
        far = other;
      }
    }
  }
  ASSERT_FALSE(far.empty());
  const std::string id =
      CallJson("POST", "/scenarios", {{"map", "fixture_tjunction"}, {"roi", {start}}},
               201)["scenario_id"];
  const Json roi = CallJson("GET", "/scenarios/" + id + "/roi");
  const auto eligible = roi["eligible_extensions"].get<std::set<std::string>>();
  EXPECT_EQ(eligible, map.partition.adjacency.at(start));

  const HttpResponse rejected =
      Call("POST", "/scenarios/" + id + "/roi/expand", Json{{"region", far}}.dump());
  EXPECT_EQ(rejected.status, 409);
  const Json body = Json::parse(rejected.body);
  EXPECT_EQ(body["code"], "ineligible_region");
  EXPECT_EQ(body["eligible_extensions"].get<std::set<std::string>>(), eligible);

  EXPECT_EQ(Call("POST", "/scenarios/" + id + "/roi/expand",
                 Json{{"region", start}}.dump()).status,
            409);
  EXPECT_EQ(Call("POST", "/scenarios/" + id + "/roi/expand",
                 Json{{"region", "road:404:0"}}.dump()).status,
            404);

  const Json grown = CallJson("POST", "/scenarios/" + id + "/roi/expand",
                              {{"region", *eligible.begin()}});
  EXPECT_EQ(grown["roi"].size(), 2u);
  ExpectStoredValid(id);
}

TEST_F(ServiceTest, ActorLifecycle) {
  const std::string id = NewStraight();
  const std::string base = "/scenarios/" + id;
  EXPECT_EQ(Call("GET", base + "/goal-candidates").status, 400);
  const HttpResponse candidates =
      Call("GET", base + "/goal-candidates", "", {{"spawn", S(-1, 0)}});
  ASSERT_EQ(candidates.status, 200);
  EXPECT_EQ(Json::parse(candidates.body)["candidates"],
            Json({S(-1, 20), S(-2, 20)}));

  EXPECT_EQ(CallJson("POST", base + "/actors", Car(S(-1, 0), S(-1, 20)), 201)
                ["actor_id"],
            "actor-0000");
  const HttpResponse occupied =
      Call("POST", base + "/actors", Car(S(-1, 0), S(-2, 20)).dump());
  EXPECT_EQ(occupied.status, 409);
  EXPECT_EQ(Json::parse(occupied.body)["code"], "conflict");

  Json bad = Car(S(-2, 0), S(-1, 0), -1.0);
  const HttpResponse invalid = Call("POST", base + "/actors", bad.dump());
  EXPECT_EQ(invalid.status, 422);
  EXPECT_GE(Json::parse(invalid.body)["details"].size(), 2u);
  EXPECT_EQ(Call("POST", base + "/actors", "{").status, 400);

  Json named = Car(S(-2, 4), S(-2, 20));
  named["id"] = "blue";
  EXPECT_EQ(CallJson("POST", base + "/actors", named, 201)["actor_id"], "blue");
  EXPECT_EQ(CallJson("GET", base + "/actors")["actors"].size(), 2u);

  EXPECT_EQ(CallJson("POST", base + "/ego", {{"actor_id", "blue"}})["ego"], "blue");
  EXPECT_EQ(Call("POST", base + "/ego", Json{{"actor_id", "red"}}.dump()).status,
            404);
  const Json spawns = CallJson("GET", base + "/spawn-candidates");
  EXPECT_EQ(spawns["max_allowable_actors"], 38);
  EXPECT_FALSE(spawns["road"].get<std::set<std::string>>().contains(S(-1, 0)));

  EXPECT_EQ(CallJson("DELETE", base + "/actors/actor-0000")["removed"],
            "actor-0000");
  EXPECT_EQ(Call("DELETE", base + "/actors/actor-0000").status, 404);
  EXPECT_EQ(Call("GET", "/scenarios/nope/actors").status, 404);
  ExpectStoredValid(id);
}

TEST_F(ServiceTest, UndoRestoresExactPriorDocument) {
  const std::string id = NewStraight();
  const std::string base = "/scenarios/" + id;
  EXPECT_EQ(Call("POST", base + "/undo").status, 409);
  std::vector<std::string> history = {Export(id)};
  CallJson("POST", base + "/actors", Car(S(-1, 0), S(-1, 20)), 201);
  history.push_back(Export(id));
  CallJson("POST", base + "/actors", Car(S(-2, 3), S(-2, 20)), 201);
  history.push_back(Export(id));
  CallJson("POST", base + "/ego", {{"actor_id", "actor-0001"}});
  history.push_back(Export(id));
  CallJson("PUT", base + "/environment",
           {{"weather_preset", "HardRainNight"}, {"time_of_day", "noon"}});
  EXPECT_EQ(CallJson("GET", base)["environment"]["time_of_day"], "night");
  for (auto it = history.rbegin(); it != history.rend(); ++it) {
    const HttpResponse undo = Call("POST", base + "/undo");
    ASSERT_EQ(undo.status, 200);
    EXPECT_EQ(undo.body, *it);
    EXPECT_EQ(Export(id), *it);
  }
  EXPECT_EQ(Call("POST", base + "/undo").status, 409);
}

TEST_F(ServiceTest, ExpansionThatBreaksAnActorIsAConflict) {
  const std::string id = NewStraight({"road:1:0"});
  const std::string base = "/scenarios/" + id;
  const HttpResponse goals =
      Call("GET", base + "/goal-candidates", "", {{"spawn", S(-1, 0)}});
  const std::string goal = Json::parse(goals.body)["candidates"][0];
  CallJson("POST", base + "/actors", Car(S(-1, 0), goal), 201);
  const std::string before = Export(id);
  const HttpResponse r =
      Call("POST", base + "/roi/expand", Json{{"region", "road:1:1"}}.dump());
  EXPECT_EQ(r.status, 409);
  EXPECT_EQ(Json::parse(r.body)["code"], "conflict");
  EXPECT_EQ(Export(id), before);
}

TEST_F(ServiceTest, RealizeStreamsTimeline) {
  const std::string id = NewStraight();
  const std::string base = "/scenarios/" + id;
  CallJson("POST", base + "/actors", Car(S(-1, 0), S(-1, 20), 10.0), 201);
  const HttpResponse r = Call("POST", base + "/realize", Json{{"dt", 0.1}}.dump());
  ASSERT_EQ(r.status, 200);
  EXPECT_EQ(r.content_type, "application/x-ndjson");
  EXPECT_EQ(TimelineFromDocument(r.body).frames.size(), 101u);
  EXPECT_EQ(Call("POST", base + "/realize", Json{{"dt", 0}}.dump()).status, 422);
}

TEST_F(ServiceTest, ExportImportAndEmptyExport) {
  const std::string id = NewStraight();
  CallJson("POST", "/scenarios/" + id + "/actors", Car(S(-1, 0), S(-1, 20)), 201);
  const std::string doc = Export(id);
  const std::string copy =
      CallJson("POST", "/scenarios/import", Json::parse(doc), 201)["scenario_id"];
  EXPECT_NE(copy, id);
  Scenario a = DocumentToScenario(doc, DefaultAssetCatalog());
  Scenario b = DocumentToScenario(Export(copy), DefaultAssetCatalog());
  b.scenario_id = a.scenario_id;
  EXPECT_EQ(a, b);

  const HttpResponse empty = Call("GET", "/scenarios/" + id + "/export-empty");
  EXPECT_EQ(GraphmlToGraph(empty.body), StripActors(a.subgraph));

  TempDir other;
  const fs::path other_root = other.path() / "cache";
  IngestMap(FixturePath("fixture_straight.xodr"), other_root, 5.0, 50.0);
  Service fresh(ServiceOptions{other_root});
  const HttpResponse imported = fresh.Handle({"POST", "/scenarios/import", {}, doc});
  ASSERT_EQ(imported.status, 201);
  EXPECT_EQ(Json::parse(imported.body)["scenario_id"], id);

  auto tampered = Json::parse(doc);
  tampered["actors"][0]["velocity"] = -1;
  EXPECT_EQ(Call("POST", "/scenarios/import", tampered.dump()).status, 422);
  tampered = Json::parse(doc);
  tampered["map_digest"] = std::string(64, '0');
  EXPECT_EQ(Call("POST", "/scenarios/import", tampered.dump()).status, 409);
}

TEST_F(ServiceTest, SessionsSurviveRestart) {
  const std::string id = NewStraight();
  CallJson("POST", "/scenarios/" + id + "/actors", Car(S(-1, 0), S(-1, 20)), 201);
  const std::string doc = Export(id);
  service_.reset();
  service_ = std::make_unique<Service>(ServiceOptions{root_});
  EXPECT_EQ(Export(id), doc);
  EXPECT_EQ(CallJson("GET", "/scenarios")["scenarios"], Json::array({id}));
}

TEST_F(ServiceTest, StaleMapBlocksMutation) {
  const std::string id = NewStraight();
  const fs::path source = dir_.path() / "fixture_straight.xodr";
  std::string text = testing::FixtureText("fixture_straight.xodr");
  text += "\n<!-- edited -->\n";
  WriteFileAtomic(source, text);
  IngestMap(source, root_, 5.0, 50.0);
  CallJson("POST", "/maps/reload");
  const HttpResponse r = Call("POST", "/scenarios/" + id + "/actors",
                              Car(S(-1, 0), S(-1, 20)).dump());
  EXPECT_EQ(r.status, 409);
  EXPECT_EQ(Json::parse(r.body)["code"], "stale_map");
}

TEST_F(ServiceTest, GenerateIsDeterministic) {
  const Json request = {{"config", {{"seed", 42}, {"fill_percentage", 0.5}}},
                        {"count", 3}};
  const HttpResponse a = Call("POST", "/generate", request.dump());
  const HttpResponse b = Call("POST", "/generate", request.dump());
  ASSERT_EQ(a.status, 200);
  EXPECT_EQ(a.body, b.body);
  const Json j = Json::parse(a.body);
  ASSERT_EQ(j["scenarios"].size(), 3u);
  for (const auto& doc : j["scenarios"]) {
    const Scenario s = DocumentToScenario(doc.dump(), DefaultAssetCatalog());
    const MapData map = Map(s.map_id);
    EXPECT_NO_THROW(DocumentToScenario(doc.dump(), DefaultAssetCatalog(), &map));
  }
  EXPECT_EQ(Call("POST", "/generate", Json{{"count", 0}}.dump()).status, 422);
  EXPECT_EQ(Call("POST", "/generate",
                 Json{{"config", {{"fill_percentage", 2.0}}}}.dump()).status,
            422);
  EXPECT_EQ(Call("POST", "/generate", Json{{"maps", {"absent"}}}.dump()).status,
            404);
  EXPECT_EQ(Call("POST", "/generate", "[").status, 400);
}

// Random API call sequences; every intermediate state must satisfy the
// scenario invariants.
TEST_F(ServiceTest, FuzzedCallSequencesKeepInvariants) {
  std::mt19937_64 rng(99);
  const MapData straight = Map("fixture_straight");
  const MapData tjunction = Map("fixture_tjunction");
  const std::vector<std::string> categories = {
      "normal_vehicle", "pedestrian", "bicycle", "motorcycle", "van", "truck",
      "bus"};
  for (int run = 0; run < 6; ++run) {
    const MapData& map = run % 2 == 0 ? straight : tjunction;
    const std::string first = map.partition.regions.begin()->first;
    const std::string id = CallJson("POST", "/scenarios",
                                    {{"map", map.map_id}, {"roi", {first}}},
                                    201)["scenario_id"];
    const std::string base = "/scenarios/" + id;
    std::vector<std::string> nodes;
    for (const auto& [node, n] : map.graph.nodes()) nodes.push_back(node);
    std::vector<std::string> regions;
    for (const auto& [region, r] : map.partition.regions) regions.push_back(region);
    auto pick = [&](const auto& items) { return items[rng() % items.size()]; };
    for (int step = 0; step < 60; ++step) {
      HttpResponse r;
      switch (rng() % 7) {
        case 0:
          r = Call("POST", base + "/roi/expand", Json{{"region", pick(regions)}}.dump());
          break;
        case 1:
        case 2: {
          Json spec = {{"category", pick(categories)},
                       {"spawn", pick(nodes)},
                       {"goal", pick(nodes)},
                       {"velocity", static_cast<double>(rng() % 20) - 2.0},
                       {"offset", static_cast<double>(rng() % 5) * 0.25 - 0.5}};
          r = Call("POST", base + "/actors", spec.dump());
          break;
        }
        case 3: {
          const Json actors = CallJson("GET", base + "/actors")["actors"];
          const std::string aid =
              actors.empty() ? "actor-0000" : actors[rng() % actors.size()]["id"];
          r = Call("DELETE", base + "/actors/" + aid);
          break;
        }
        case 4: {
          const Json actors = CallJson("GET", base + "/actors")["actors"];
          const std::string aid =
              actors.empty() ? "ghost" : actors[rng() % actors.size()]["id"];
          r = Call("POST", base + "/ego", Json{{"actor_id", aid}}.dump());
          break;
        }
        case 5:
          r = Call("POST", base + "/undo");
          break;
        default: {
          // Place a guaranteed-valid actor through the candidate endpoints.
          const Json spawns = CallJson("GET", base + "/spawn-candidates");
          if (spawns["road"].empty()) continue;
          const std::string spawn = spawns["road"][rng() % spawns["road"].size()];
          const Json goals = Json::parse(
              Call("GET", base + "/goal-candidates", "", {{"spawn", spawn}}).body);
          r = Call("POST", base + "/actors",
                   Car(spawn, goals["candidates"][0], 5.0).dump());
          EXPECT_EQ(r.status, 201) << r.body;
        }
      }
      EXPECT_TRUE(r.status == 200 || r.status == 201 || r.status == 404 ||
                  r.status == 409 || r.status == 422)
          << r.status << " " << r.body;
      const Scenario s = DocumentToScenario(Export(id), DefaultAssetCatalog(), &map);
      EXPECT_TRUE(CheckScenarioInvariants(s, DefaultAssetCatalog()).empty());
    }
  }
}

TEST_F(ServiceTest, ConcurrentWritesSerialize) {
  const std::string id = NewStraight();
  const std::string base = "/scenarios/" + id;
  std::atomic<int> created{0};
  std::vector<std::thread> threads;
  for (int t = 0; t < 8; ++t) {
    threads.emplace_back([&, t] {
      for (int i = 0; i < 10; ++i) {
        // Threads collide on spawn nodes on purpose.
        const int index = (t * 3 + i) % 20;
        const int lane = (t + i) % 2 == 0 ? -1 : -2;
        const HttpResponse r =
            Call("POST", base + "/actors", Car(S(lane, index), S(lane, 20)).dump());
        if (r.status == 201) ++created;
        EXPECT_TRUE(r.status == 201 || r.status == 409) << r.body;
      }
    });
  }
  for (auto& thread : threads) thread.join();
  const Scenario s = DocumentToScenario(Export(id), DefaultAssetCatalog());
  EXPECT_EQ(static_cast<int>(s.actors.size()), created.load());
  EXPECT_TRUE(CheckScenarioInvariants(s, DefaultAssetCatalog()).empty());
  std::set<std::string> ids;
  for (const auto& actor : s.actors) ids.insert(actor.actor_id);
  EXPECT_EQ(ids.size(), s.actors.size());
}

TEST_F(ServiceTest, ServesOverHttp) {
  const int port = service_->ListenInBackground("127.0.0.1");
  ASSERT_GT(port, 0);
  httplib::Client client("127.0.0.1", port);
  auto maps = client.Get("/maps");
  ASSERT_TRUE(maps);
  EXPECT_EQ(maps->status, 200);
  EXPECT_EQ(Json::parse(maps->body)["maps"].size(), 2u);

  auto created = client.Post(
      "/scenarios",
      Json({{"map", "fixture_straight"}, {"roi", {"road:1:0", "road:1:1"}}}).dump(),
      "application/json");
  ASSERT_TRUE(created);
  EXPECT_EQ(created->status, 201);
  const std::string id = Json::parse(created->body)["scenario_id"];

  auto goals = client.Get("/scenarios/" + id + "/goal-candidates?spawn=" + S(-1, 0));
  ASSERT_TRUE(goals);
  EXPECT_EQ(Json::parse(goals->body)["candidates"].size(), 2u);

  auto graph = client.Get("/maps/fixture_straight/graph?roi=road:1:0,road:1:1");
  ASSERT_TRUE(graph);
  EXPECT_EQ(Json::parse(graph->body)["nodes"].size(),
            Map("fixture_straight").graph.nodes().size());

  auto missing = client.Get("/scenarios/unknown");
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 404);
  EXPECT_EQ(Json::parse(missing->body)["code"], "not_found");
  service_->Stop();
}

}  // namespace
}  // namespace lanescape
