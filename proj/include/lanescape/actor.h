#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace lanescape {

enum class ActorCategory {
  kNormalVehicle,
  kPedestrian,
  kBicycle,
  kMotorcycle,
  kVan,
  kTruck,
  kBus,
};

inline constexpr std::array<ActorCategory, 7> kAllCategories = {
    ActorCategory::kNormalVehicle, ActorCategory::kPedestrian,
    ActorCategory::kBicycle,       ActorCategory::kMotorcycle,
    ActorCategory::kVan,           ActorCategory::kTruck,
    ActorCategory::kBus,
};

std::string_view CategoryName(ActorCategory category);
// Throws Error(kFormat) for unknown names.
ActorCategory ParseCategory(std::string_view name);
std::optional<ActorCategory> TryParseCategory(std::string_view name);

inline bool IsVehicle(ActorCategory category) {
  return category != ActorCategory::kPedestrian;
}

}  // namespace lanescape
