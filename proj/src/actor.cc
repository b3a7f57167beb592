#include "lanescape/actor.h"

#include "lanescape/error.h"

namespace lanescape {

std::string_view CategoryName(ActorCategory category) {
  switch (category) {
    case ActorCategory::kNormalVehicle: return "normal_vehicle";
    case ActorCategory::kPedestrian: return "pedestrian";
    case ActorCategory::kBicycle: return "bicycle";
    case ActorCategory::kMotorcycle: return "motorcycle";
    case ActorCategory::kVan: return "van";
    case ActorCategory::kTruck: return "truck";
    case ActorCategory::kBus: return "bus";
  }
  return "";
}

std::optional<ActorCategory> TryParseCategory(std::string_view name) {
  for (const auto category : kAllCategories) {
    if (CategoryName(category) == name) return category;
  }
  return std::nullopt;
}

ActorCategory ParseCategory(std::string_view name) {
  if (auto category = TryParseCategory(name)) return *category;
  throw Error(ErrorCode::kFormat,
              "unknown actor category '" + std::string(name) + "'");
}

}  // namespace lanescape
