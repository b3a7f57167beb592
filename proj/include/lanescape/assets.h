#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "lanescape/actor.h"

namespace lanescape {

enum class DayPhase { kDawn, kNoon, kSunset, kNight };

std::string_view DayPhaseName(DayPhase phase);
std::optional<DayPhase> TryParseDayPhase(std::string_view name);

struct WeatherPreset {
  std::string id;
  std::string display_name;
  // Presets such as HardRainNight pin the time of day.
  std::optional<DayPhase> implies_time;
  bool operator==(const WeatherPreset&) const = default;
};

struct ActorModel {
  std::string id;
  ActorCategory category = ActorCategory::kNormalVehicle;
  std::string display_name;
  double length = 0.0;  // bounding box, m
  double width = 0.0;
  bool operator==(const ActorModel&) const = default;
};

// Static replacement for live simulator asset retrieval.
struct AssetCatalog {
  std::vector<WeatherPreset> weather_presets;
  std::vector<ActorModel> models;

  const WeatherPreset* FindPreset(std::string_view id) const;
  const ActorModel* FindModel(std::string_view id) const;
  std::vector<const ActorModel*> ModelsOf(ActorCategory category) const;

  bool operator==(const AssetCatalog&) const = default;
};

inline constexpr int kAssetCatalogVersion = 1;

// Throws Error(kFormat) on malformed documents, duplicate ids or unknown
// categories.
AssetCatalog AssetCatalogFromJson(std::string_view text);
std::string AssetCatalogToJson(const AssetCatalog& catalog);
AssetCatalog LoadAssetCatalog(const std::string& path);

// The catalog shipped in data/assets.json.
const AssetCatalog& DefaultAssetCatalog();

}  // namespace lanescape
