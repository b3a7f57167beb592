#include "lanescape/assets.h"

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "lanescape/error.h"

namespace lanescape {

// Generated from data/assets.json at configure time.
extern const char* const kDefaultAssetCatalogJson;

namespace {

using Json = nlohmann::ordered_json;

}  // namespace

std::string_view DayPhaseName(DayPhase phase) {
  switch (phase) {
    case DayPhase::kDawn: return "dawn";
    case DayPhase::kNoon: return "noon";
    case DayPhase::kSunset: return "sunset";
    case DayPhase::kNight: return "night";
  }
  return "";
}

std::optional<DayPhase> TryParseDayPhase(std::string_view name) {
  for (auto phase :
       {DayPhase::kDawn, DayPhase::kNoon, DayPhase::kSunset, DayPhase::kNight}) {
    if (DayPhaseName(phase) == name) return phase;
  }
  return std::nullopt;
}

const WeatherPreset* AssetCatalog::FindPreset(std::string_view id) const {
  for (const auto& preset : weather_presets) {
    if (preset.id == id) return &preset;
  }
  return nullptr;
}

const ActorModel* AssetCatalog::FindModel(std::string_view id) const {
  for (const auto& model : models) {
    if (model.id == id) return &model;
  }
  return nullptr;
}

std::vector<const ActorModel*> AssetCatalog::ModelsOf(
    ActorCategory category) const {
  std::vector<const ActorModel*> result;
  for (const auto& model : models) {
    if (model.category == category) result.push_back(&model);
  }
  return result;
}

AssetCatalog AssetCatalogFromJson(std::string_view text) {
  AssetCatalog catalog;
  try {
    const Json doc = Json::parse(text);
    if (doc.at("format") != "lanescape-assets") {
      throw Error(ErrorCode::kFormat, "not an asset catalog document");
    }
    if (doc.at("version") != kAssetCatalogVersion) {
      throw Error(ErrorCode::kFormat, "unsupported asset catalog version");
    }
    std::set<std::string> ids;
    for (const auto& item : doc.at("weather_presets")) {
      WeatherPreset preset;
      preset.id = item.at("id").get<std::string>();
      preset.display_name = item.value("name", preset.id);
      if (item.contains("implies_time")) {
        const auto phase =
            TryParseDayPhase(item.at("implies_time").get<std::string>());
        if (!phase) {
          throw Error(ErrorCode::kFormat,
                      "preset " + preset.id + " implies an unknown time");
        }
        preset.implies_time = phase;
      }
      if (!ids.insert(preset.id).second) {
        throw Error(ErrorCode::kFormat, "duplicate asset id " + preset.id);
      }
      catalog.weather_presets.push_back(std::move(preset));
    }
    for (const auto& item : doc.at("models")) {
      ActorModel model;
      model.id = item.at("id").get<std::string>();
      model.category = ParseCategory(item.at("category").get<std::string>());
      model.display_name = item.value("name", model.id);
      model.length = item.value("length", 0.0);
      model.width = item.value("width", 0.0);
      if (!ids.insert(model.id).second) {
        throw Error(ErrorCode::kFormat, "duplicate asset id " + model.id);
      }
      catalog.models.push_back(std::move(model));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormat,
                std::string("malformed asset catalog: ") + e.what());
  }
  return catalog;
}

std::string AssetCatalogToJson(const AssetCatalog& catalog) {
  Json doc;
  doc["format"] = "lanescape-assets";
  doc["version"] = kAssetCatalogVersion;
  doc["weather_presets"] = Json::array();
  for (const auto& preset : catalog.weather_presets) {
    Json item;
    item["id"] = preset.id;
    item["name"] = preset.display_name;
    if (preset.implies_time) {
      item["implies_time"] = DayPhaseName(*preset.implies_time);
    }
    doc["weather_presets"].push_back(std::move(item));
  }
  doc["models"] = Json::array();
  for (const auto& model : catalog.models) {
    doc["models"].push_back({{"id", model.id},
                             {"category", CategoryName(model.category)},
                             {"name", model.display_name},
                             {"length", model.length},
                             {"width", model.width}});
  }
  return doc.dump(2) + "\n";
}

AssetCatalog LoadAssetCatalog(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read asset catalog " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return AssetCatalogFromJson(buffer.str());
}

const AssetCatalog& DefaultAssetCatalog() {
  static const AssetCatalog catalog =
      AssetCatalogFromJson(kDefaultAssetCatalogJson);
  return catalog;
}

}  // namespace lanescape
