#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "lanescape/actor.h"
#include "lanescape/assets.h"
#include "lanescape/scenario.h"

namespace lanescape {

// std::mt19937_64 output is fixed by the C++ standard; the distributions
// below are written out by hand because the standard library ones are not
// portable across implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t Next() { return engine_(); }
  // Uniform in [0, n), by rejection. n > 0.
  std::size_t UniformIndex(std::size_t n);
  // Uniform in [lo, hi] from the top 53 bits.
  double UniformReal(double lo, double hi);
  // Index drawn proportionally to non-negative weights (at least one > 0).
  std::size_t Weighted(std::span<const double> weights);

 private:
  std::mt19937_64 engine_;
};

// SplitMix64 finalizer; derives the per-scenario seed of a batch.
std::uint64_t MixSeed(std::uint64_t seed, std::uint64_t index);

struct Range {
  double min = 0.0;
  double max = 0.0;
  bool operator==(const Range&) const = default;
};

struct SamplerConfig {
  std::uint64_t seed = 0;
  double fill_percentage = 0.5;
  std::map<ActorCategory, double> category_weights = {
      {ActorCategory::kNormalVehicle, 0.5}, {ActorCategory::kPedestrian, 0.2},
      {ActorCategory::kBicycle, 0.05},      {ActorCategory::kMotorcycle, 0.05},
      {ActorCategory::kVan, 0.1},           {ActorCategory::kTruck, 0.05},
      {ActorCategory::kBus, 0.05},
  };
  std::map<ActorCategory, Range> velocity_ranges = {
      {ActorCategory::kNormalVehicle, {3.0, 14.0}},
      {ActorCategory::kPedestrian, {0.5, 2.0}},
      {ActorCategory::kBicycle, {2.0, 7.0}},
      {ActorCategory::kMotorcycle, {3.0, 14.0}},
      {ActorCategory::kVan, {3.0, 14.0}},
      {ActorCategory::kTruck, {3.0, 14.0}},
      {ActorCategory::kBus, {3.0, 14.0}},
  };
  Range lateral_offset_range = {-0.3, 0.3};
  std::pair<int, int> roi_region_count_range = {1, 3};

  bool operator==(const SamplerConfig&) const = default;
};

// Missing fields keep their defaults. Throws Error(kFormat) on mistyped
// fields or unknown categories.
SamplerConfig SamplerConfigFromJson(const nlohmann::ordered_json& j);
nlohmann::ordered_json SamplerConfigToJson(const SamplerConfig& config);

// Throws Error(kValidation) listing every problem.
void ValidateSamplerConfig(const SamplerConfig& config,
                           const PlacementLimits& limits = {});

// Deterministic in (maps, catalog, config). `maps` is sampled in the order
// given; callers pass it sorted by map id.
Scenario SampleScenario(std::span<const MapData* const> maps,
                        const AssetCatalog& catalog,
                        const SamplerConfig& config,
                        std::vector<std::string>* warnings = nullptr);

// Scenario i uses seed MixSeed(config.seed, i).
std::vector<Scenario> SampleBatch(std::span<const MapData* const> maps,
                                  const AssetCatalog& catalog,
                                  const SamplerConfig& config, int count,
                                  std::vector<std::string>* warnings = nullptr);

}  // namespace lanescape
