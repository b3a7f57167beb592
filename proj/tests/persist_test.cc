#include "lanescape/persist.h"

#include <filesystem>
#include <functional>
#include <string>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "lanescape/error.h"
#include "lanescape/graphml.h"
#include "testing.h"

namespace lanescape {
namespace {

namespace fs = std::filesystem;
using testing::BuildFixtureMap;
using testing::FixtureMap;
using testing::FixturePath;
using testing::TempDir;

const std::string kCar = "vehicle.tesla.model3";

ErrorCode CodeOf(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kIo;
}

std::string S(int lane, int index) {
  return "fixture_straight:1:" + std::to_string(lane) + ":" +
         std::to_string(index);
}

TEST(Sha256Test, KnownVectors) {
  EXPECT_EQ(Sha256Hex(""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(Sha256Hex("abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(FileTest, AtomicWriteAndRead) {
  TempDir dir;
  const fs::path path = dir.path() / "sub" / "f.txt";
  WriteFileAtomic(path, "one");
  WriteFileAtomic(path, "two");
  EXPECT_EQ(ReadFile(path), "two");
  std::size_t entries = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(path.parent_path())) {
    ++entries;
  }
  EXPECT_EQ(entries, 1u);
  EXPECT_EQ(CodeOf([&] { ReadFile(dir.path() / "absent"); }), ErrorCode::kIo);
}

TEST(IngestTest, IngestIsIdempotent) {
  TempDir dir;
  const fs::path root = dir.path() / "cache";
  const IngestResult first =
      IngestMap(FixturePath("fixture_straight.xodr"), root, 5.0, 50.0);
  EXPECT_TRUE(first.wrote);
  EXPECT_EQ(first.entry.map_id, "fixture_straight");
  EXPECT_EQ(first.entry.digest,
            Sha256Hex(testing::FixtureText("fixture_straight.xodr")));
  const CachePaths paths = CachePathsFor(root, "fixture_straight");
  std::vector<fs::file_time_type> before;
  for (const auto& p : {paths.meta, paths.graph, paths.regions, paths.digest}) {
    ASSERT_TRUE(fs::exists(p)) << p;
    before.push_back(fs::last_write_time(p));
  }
  const std::string graph_bytes = ReadFile(paths.graph);

  const IngestResult second =
      IngestMap(FixturePath("fixture_straight.xodr"), root, 5.0, 50.0);
  EXPECT_FALSE(second.wrote);
  EXPECT_EQ(second.entry.digest, first.entry.digest);
  std::size_t i = 0;
  for (const auto& p : {paths.meta, paths.graph, paths.regions, paths.digest}) {
    EXPECT_EQ(fs::last_write_time(p), before[i++]) << p;
  }
  EXPECT_EQ(ReadFile(paths.graph), graph_bytes);
}

TEST(IngestTest, ChangedParametersOrSourceRebuild) {
  TempDir dir;
  const fs::path root = dir.path() / "cache";
  const fs::path source = dir.path() / "m.xodr";
  fs::copy_file(FixturePath("fixture_straight.xodr"), source);
  const IngestResult first = IngestMap(source, root, 5.0, 50.0);
  EXPECT_TRUE(IngestMap(source, root, 4.0, 50.0).wrote);
  EXPECT_FALSE(IngestMap(source, root, 4.0, 50.0).wrote);

  std::string text = ReadFile(source);
  for (std::size_t at = text.find("length=\"100.0\"");
       at != std::string::npos; at = text.find("length=\"100.0\"", at)) {
    text.replace(at, 14, "length=\"120.0\"");
  }
  WriteFileAtomic(source, text);
  const IngestResult edited = IngestMap(source, root, 4.0, 50.0);
  EXPECT_TRUE(edited.wrote);
  EXPECT_NE(edited.entry.digest, first.entry.digest);
  EXPECT_EQ(LoadMap(root, "m").digest, edited.entry.digest);
}

TEST(IngestTest, MissingOrMalformedSource) {
  TempDir dir;
  EXPECT_EQ(CodeOf([&] { IngestMap(dir.path() / "none.xodr", dir.path()); }),
            ErrorCode::kIo);
  WriteFileAtomic(dir.path() / "bad.xodr", "<OpenDRIVE><road");
  EXPECT_EQ(CodeOf([&] { IngestMap(dir.path() / "bad.xodr", dir.path()); }),
            ErrorCode::kParse);
  EXPECT_TRUE(ListCatalog(dir.path()).empty());
}

TEST(IngestTest, InterruptedWriteIsNotCurrent) {
  TempDir dir;
  const fs::path root = dir.path() / "cache";
  const fs::path source = FixturePath("fixture_straight.xodr");
  IngestMap(source, root, 5.0, 50.0);
  fs::remove(CachePathsFor(root, "fixture_straight").digest);
  EXPECT_TRUE(IngestMap(source, root, 5.0, 50.0).wrote);
}

TEST(CatalogTest, ListAndLoad) {
  TempDir dir;
  const fs::path root = dir.path() / "cache";
  IngestMap(FixturePath("fixture_tjunction.xodr"), root, 5.0, 100.0);
  IngestMap(FixturePath("fixture_straight.xodr"), root, 5.0, 50.0);
  fs::create_directories(root / "junk");
  const auto entries = ListCatalog(root);
  ASSERT_EQ(entries.size(), 2u);
  EXPECT_EQ(entries[0].map_id, "fixture_straight");
  EXPECT_EQ(entries[1].map_id, "fixture_tjunction");
  EXPECT_EQ(entries[1].metadata.junction_count, 1);
  EXPECT_EQ(entries[0].spacing, 5.0);

  for (const auto& [name, target] :
       {std::pair{"fixture_straight", 50.0}, {"fixture_tjunction", 100.0}}) {
    const MapData loaded = LoadMap(root, name);
    const FixtureMap built =
        BuildFixtureMap(std::string(name) + ".xodr", 5.0, target);
    EXPECT_EQ(loaded.map_id, built.map.map_id);
    EXPECT_EQ(loaded.digest, built.map.digest);
    EXPECT_EQ(loaded.graph, built.map.graph);
    EXPECT_EQ(loaded.partition, built.map.partition);
  }
  EXPECT_EQ(CodeOf([&] { LoadMap(root, "nope"); }), ErrorCode::kNotFound);
}

TEST(CodecTest, PartitionAndMetadataRoundTrip) {
  const FixtureMap f = BuildFixtureMap("fixture_tjunction.xodr", 4.0, 30.0);
  EXPECT_EQ(PartitionFromJson(PartitionToJson(f.map.partition)),
            f.map.partition);
  EXPECT_EQ(MetadataFromJson(MetadataToJson(ExtractMetadata(f.network, "t"))),
            ExtractMetadata(f.network, "t"));
  EXPECT_EQ(CodeOf([] { PartitionFromJson("{\"format\":\"other\"}"); }),
            ErrorCode::kFormat);
}

TEST(CodecTest, EnvironmentTimeForms) {
  for (const EnvironmentConfig& env :
       {EnvironmentConfig{"ClearNoon", {DayPhase::kNoon}},
        EnvironmentConfig{"WetSunset", {DayPhase::kSunset}},
        EnvironmentConfig{"ClearNoon", {605}}}) {
    EXPECT_EQ(EnvironmentFromJson(EnvironmentToJson(env)), env);
  }
  EXPECT_EQ(CodeOf([] {
              EnvironmentFromJson(nlohmann::ordered_json{{"weather", 3}});
            }),
            ErrorCode::kFormat);
}

class ScenarioDocumentTest : public ::testing::Test {
 protected:
  ScenarioDocumentTest()
      : fixture_(BuildFixtureMap("fixture_straight.xodr", 5.0, 50.0)),
        catalog_(DefaultAssetCatalog()) {}

  Scenario WithActors() const {
    Scenario s = NewScenario(fixture_.map, Roi{{"road:1:0", "road:1:1"}},
                             {"WetNoon", {DayPhase::kDawn}}, catalog_,
                             "doc-1");
    ActorSpec car{"a", ActorCategory::kNormalVehicle, kCar, S(-1, 0),
                  S(-1, 20), 8.25, 0.125, false};
    ActorSpec bus{"b", ActorCategory::kBus, std::nullopt, S(-2, 3), S(-2, 20),
                  6.0, -0.5, false};
    s = PlaceActor(s, car, catalog_);
    s = PlaceActor(s, bus, catalog_);
    const std::string walker_spawn = *EligiblePedestrianSpawnNodes(s).begin();
    const std::string walker_goal =
        *GoalCandidates(s, walker_spawn).rbegin();
    s = PlaceActor(s,
                   {"c", ActorCategory::kPedestrian, std::nullopt,
                    walker_spawn, walker_goal, 1.25, 0.0, false},
                   catalog_);
    return DesignateEgo(s, "b");
  }

  FixtureMap fixture_;
  const AssetCatalog& catalog_;
};

TEST_F(ScenarioDocumentTest, RoundTripIsExact) {
  const Scenario s = WithActors();
  const std::string doc = ScenarioToDocument(s);
  const Scenario back = DocumentToScenario(doc, catalog_, &fixture_.map);
  EXPECT_EQ(back, s);
  EXPECT_EQ(ScenarioToDocument(back), doc);
  EXPECT_EQ(back.actors.size(), 3u);
  EXPECT_EQ(back.ego, std::optional<std::string>("b"));
}

TEST_F(ScenarioDocumentTest, EmptyScenarioRoundTrip) {
  const Scenario s = NewScenario(fixture_.map, Roi{{"road:1:1"}},
                                 {"ClearNoon", {720}}, catalog_, "e");
  EXPECT_EQ(DocumentToScenario(ScenarioToDocument(s), catalog_, &fixture_.map),
            s);
}

TEST_F(ScenarioDocumentTest, InvalidActorIsRejectedWithEveryFailure) {
  auto doc = nlohmann::ordered_json::parse(ScenarioToDocument(WithActors()));
  doc["actors"][0]["velocity"] = -1.0;
  doc["actors"][1]["offset"] = 9.0;
  try {
    DocumentToScenario(doc.dump(), catalog_);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kValidation);
    EXPECT_GE(e.details().size(), 2u);
  }
}

TEST_F(ScenarioDocumentTest, SubgraphMustMatchTheActorList) {
  auto doc = nlohmann::ordered_json::parse(ScenarioToDocument(WithActors()));
  doc["actors"].erase(doc["actors"].begin());
  EXPECT_EQ(CodeOf([&] { DocumentToScenario(doc.dump(), catalog_); }),
            ErrorCode::kValidation);
}

TEST_F(ScenarioDocumentTest, StaleAndUnsupportedDocuments) {
  const std::string doc = ScenarioToDocument(WithActors());
  MapData changed = fixture_.map;
  changed.digest = Sha256Hex("something else");
  EXPECT_EQ(CodeOf([&] { DocumentToScenario(doc, catalog_, &changed); }),
            ErrorCode::kStaleMap);

  auto j = nlohmann::ordered_json::parse(doc);
  j["version"] = kScenarioVersion + 1;
  EXPECT_EQ(CodeOf([&] { DocumentToScenario(j.dump(), catalog_); }),
            ErrorCode::kFormat);
  EXPECT_EQ(CodeOf([&] { DocumentToScenario("{not json", catalog_); }),
            ErrorCode::kFormat);
}

TEST_F(ScenarioDocumentTest, TamperedSubgraphIsRejectedAgainstTheMap) {
  auto j = nlohmann::ordered_json::parse(ScenarioToDocument(WithActors()));
  std::string graphml = j["subgraph"].get<std::string>();
  const std::string from = "<data key=\"x\">0</data>";
  graphml.replace(graphml.find(from), from.size(), "<data key=\"x\">0.5</data>");
  j["subgraph"] = graphml;
  EXPECT_NO_THROW(DocumentToScenario(j.dump(), catalog_));
  EXPECT_EQ(CodeOf([&] { DocumentToScenario(j.dump(), catalog_, &fixture_.map); }),
            ErrorCode::kValidation);
}

}  // namespace
}  // namespace lanescape
