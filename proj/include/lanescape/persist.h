#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "lanescape/assets.h"
#include "lanescape/opendrive.h"
#include "lanescape/regions.h"
#include "lanescape/scenario.h"

namespace lanescape {

inline constexpr int kMapCacheVersion = 1;
inline constexpr int kScenarioVersion = 1;

// Lowercase hex SHA-256.
std::string Sha256Hex(std::string_view bytes);

// Throws Error(kIo).
std::string ReadFile(const std::filesystem::path& path);
// Writes to a sibling temporary and renames it over `path`.
void WriteFileAtomic(const std::filesystem::path& path, std::string_view bytes);

struct CachePaths {
  std::filesystem::path meta;
  std::filesystem::path graph;
  std::filesystem::path regions;
  std::filesystem::path digest;
};

CachePaths CachePathsFor(const std::filesystem::path& cache_root,
                         const std::string& map_id);

struct MapCatalogEntry {
  std::string map_id;
  std::string source;
  MapMetadata metadata;
  CachePaths cache;
  std::string digest;
  double spacing = kDefaultSpacing;
  double target_length = kDefaultTargetLength;
};

struct IngestResult {
  MapCatalogEntry entry;
  bool wrote = false;  // false when the cache was already current
  std::vector<std::string> warnings;
};

// The map id is the file stem. Re-ingesting an unchanged source with the
// same parameters touches nothing.
IngestResult IngestMap(const std::filesystem::path& source,
                       const std::filesystem::path& cache_root,
                       double spacing = kDefaultSpacing,
                       double target_length = kDefaultTargetLength);

// Entries sorted by map id; directories without a readable meta document are
// skipped.
std::vector<MapCatalogEntry> ListCatalog(const std::filesystem::path& cache_root);

// Throws Error(kNotFound) when the map is not cached.
MapData LoadMap(const std::filesystem::path& cache_root,
                const std::string& map_id);

std::string MetadataToJson(const MapMetadata& metadata);
MapMetadata MetadataFromJson(std::string_view text);

std::string PartitionToJson(const RegionPartition& partition);
RegionPartition PartitionFromJson(std::string_view text);

// Field-level codecs shared by the scenario document and the HTTP API. They
// throw Error(kFormat) on missing or mistyped fields.
nlohmann::ordered_json EnvironmentToJson(const EnvironmentConfig& environment);
EnvironmentConfig EnvironmentFromJson(const nlohmann::ordered_json& j);
nlohmann::ordered_json ActorToJson(const ActorSpec& actor);
ActorSpec ActorFromJson(const nlohmann::ordered_json& j);
nlohmann::ordered_json MetadataToJsonValue(const MapMetadata& metadata);

std::string ScenarioToDocument(const Scenario& scenario);

// With `map`, the digest must match (else Error(kStaleMap)) and the
// actor-free subgraph must equal the roi's induced subgraph. Invariant
// failures raise Error(kValidation) listing all of them.
Scenario DocumentToScenario(std::string_view document,
                            const AssetCatalog& catalog,
                            const MapData* map = nullptr);

}  // namespace lanescape
