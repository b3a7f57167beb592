#include "lanescape/sampler.h"

#include <cmath>
#include <algorithm>
#include <cstdio>
#include <iterator>
#include <limits>
#include <set>

#include "lanescape/error.h"

namespace lanescape {

namespace {

template <typename Set>
const std::string& PickFrom(Rng& rng, const Set& items) {
  auto it = items.begin();
  std::advance(it, static_cast<long>(rng.UniformIndex(items.size())));
  return *it;
}

std::string HexId(Rng& rng) {
  char buffer[33];
  std::snprintf(buffer, sizeof(buffer), "%016llx%016llx",
                static_cast<unsigned long long>(rng.Next()),
                static_cast<unsigned long long>(rng.Next()));
  return buffer;
}

std::string ActorId(std::size_t index) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "actor-%04zu", index);
  return buffer;
}

}  // namespace

std::size_t Rng::UniformIndex(std::size_t n) {
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t limit =
      std::numeric_limits<std::uint64_t>::max() -
      std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x = Next();
  while (x >= limit) x = Next();
  return static_cast<std::size_t>(x % bound);
}

double Rng::UniformReal(double lo, double hi) {
  const double unit = static_cast<double>(Next() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * unit;
}

std::size_t Rng::Weighted(std::span<const double> weights) {
  double total = 0.0;
  for (const double w : weights) total += w;
  const double target = UniformReal(0.0, total);
  double running = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    last_positive = i;
    running += weights[i];
    if (target < running) return i;
  }
  return last_positive;
}

std::uint64_t MixSeed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + (index + 1) * 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

SamplerConfig SamplerConfigFromJson(const nlohmann::ordered_json& j) {
  SamplerConfig config;
  if (!j.is_object()) {
    throw Error(ErrorCode::kFormat, "sampler configuration must be an object");
  }
  auto range = [](const nlohmann::ordered_json& r) {
    return Range{r.at("min").get<double>(), r.at("max").get<double>()};
  };
  try {
    if (j.contains("seed")) config.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("fill_percentage")) {
      config.fill_percentage = j["fill_percentage"].get<double>();
    }
    if (j.contains("category_weights")) {
      config.category_weights.clear();
      for (const auto& [name, weight] : j["category_weights"].items()) {
        config.category_weights[ParseCategory(name)] = weight.get<double>();
      }
    }
    if (j.contains("velocity_ranges")) {
      for (const auto& [name, r] : j["velocity_ranges"].items()) {
        config.velocity_ranges[ParseCategory(name)] = range(r);
      }
    }
    if (j.contains("lateral_offset_range")) {
      config.lateral_offset_range = range(j["lateral_offset_range"]);
    }
    if (j.contains("roi_region_count_range")) {
      const auto& r = j["roi_region_count_range"];
      config.roi_region_count_range = {r.at("min").get<int>(),
                                       r.at("max").get<int>()};
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kFormat,
                std::string("malformed sampler configuration: ") + e.what());
  }
  return config;
}

nlohmann::ordered_json SamplerConfigToJson(const SamplerConfig& config) {
  nlohmann::ordered_json j;
  j["seed"] = config.seed;
  j["fill_percentage"] = config.fill_percentage;
  j["category_weights"] = nlohmann::ordered_json::object();
  for (const auto& [category, weight] : config.category_weights) {
    j["category_weights"][std::string(CategoryName(category))] = weight;
  }
  j["velocity_ranges"] = nlohmann::ordered_json::object();
  for (const auto& [category, r] : config.velocity_ranges) {
    j["velocity_ranges"][std::string(CategoryName(category))] = {
        {"min", r.min}, {"max", r.max}};
  }
  j["lateral_offset_range"] = {{"min", config.lateral_offset_range.min},
                               {"max", config.lateral_offset_range.max}};
  j["roi_region_count_range"] = {{"min", config.roi_region_count_range.first},
                                 {"max", config.roi_region_count_range.second}};
  return j;
}

void ValidateSamplerConfig(const SamplerConfig& config,
                           const PlacementLimits& limits) {
  std::vector<std::string> failures;
  if (!(config.fill_percentage >= 0.0 && config.fill_percentage <= 1.0)) {
    failures.push_back("fill percentage must lie in [0, 1]");
  }
  bool any_positive = false;
  for (const auto& [category, weight] : config.category_weights) {
    if (!(weight >= 0.0) || !std::isfinite(weight)) {
      failures.push_back("weight of " + std::string(CategoryName(category)) +
                         " must be non-negative");
    }
    any_positive = any_positive || weight > 0.0;
  }
  if (!any_positive) failures.push_back("at least one weight must be positive");
  for (const auto& [category, weight] : config.category_weights) {
    if (weight <= 0.0) continue;
    const auto range = config.velocity_ranges.find(category);
    if (range == config.velocity_ranges.end()) {
      failures.push_back("no velocity range for " +
                         std::string(CategoryName(category)));
    } else if (!(range->second.min > 0.0 &&
                 range->second.min <= range->second.max)) {
      failures.push_back("velocity range of " +
                         std::string(CategoryName(category)) +
                         " must satisfy 0 < min <= max");
    }
  }
  const Range& offset = config.lateral_offset_range;
  if (!(offset.min <= offset.max)) {
    failures.push_back("lateral offset range is not ordered");
  }
  if (std::abs(offset.min) > limits.lateral_offset_margin ||
      std::abs(offset.max) > limits.lateral_offset_margin) {
    failures.push_back("lateral offset range exceeds the lane margin");
  }
  const auto [lo, hi] = config.roi_region_count_range;
  if (!(lo >= 1 && lo <= hi)) {
    failures.push_back("roi region count range must satisfy 1 <= min <= max");
  }
  if (!failures.empty()) {
    throw Error(ErrorCode::kValidation, "invalid sampler configuration",
                failures);
  }
}

Scenario SampleScenario(std::span<const MapData* const> maps,
                        const AssetCatalog& catalog,
                        const SamplerConfig& config,
                        std::vector<std::string>* warnings) {
  ValidateSamplerConfig(config);
  if (maps.empty()) {
    throw Error(ErrorCode::kDomain, "map catalog is empty");
  }
  if (catalog.weather_presets.empty()) {
    throw Error(ErrorCode::kDomain, "asset catalog has no weather presets");
  }
  Rng rng(config.seed);

  const MapData& map = *maps[rng.UniformIndex(maps.size())];
  if (map.partition.regions.empty()) {
    throw Error(ErrorCode::kDomain, "map " + map.map_id + " has no regions");
  }
  std::vector<std::string> region_ids;
  for (const auto& [id, region] : map.partition.regions) region_ids.push_back(id);
  Roi roi = InitialRoi(map.partition, PickFrom(rng, region_ids));
  const auto [lo, hi] = config.roi_region_count_range;
  const int target =
      lo + static_cast<int>(rng.UniformIndex(static_cast<std::size_t>(hi - lo + 1)));
  while (static_cast<int>(roi.region_ids.size()) < target) {
    const auto eligible = EligibleExtensions(map.partition, roi);
    if (eligible.empty()) break;
    roi = ExpandRoi(map.partition, roi, PickFrom(rng, eligible));
  }

  EnvironmentConfig environment;
  environment.weather_preset =
      catalog.weather_presets[rng.UniformIndex(catalog.weather_presets.size())].id;
  environment.time_of_day =
      TimeOfDay{static_cast<DayPhase>(rng.UniformIndex(4))};
  Scenario scenario =
      NewScenario(map, roi, environment, catalog, HexId(rng));

  const int max_actors = MaxAllowableActors(scenario);
  const auto count = static_cast<std::size_t>(
      std::floor(config.fill_percentage * static_cast<double>(max_actors)));
  if (count == 0 && config.fill_percentage > 0.0 && warnings) {
    warnings->push_back("map " + map.map_id +
                        ": no eligible spawn nodes in the sampled roi");
  }

  std::vector<ActorCategory> categories;
  std::vector<double> weights;
  std::vector<double> vehicle_weights;
  for (const auto& [category, weight] : config.category_weights) {
    categories.push_back(category);
    weights.push_back(weight);
    vehicle_weights.push_back(IsVehicle(category) ? weight : 0.0);
  }
  const bool vehicles_possible =
      std::any_of(vehicle_weights.begin(), vehicle_weights.end(),
                  [](double w) { return w > 0.0; });

  for (std::size_t i = 0; i < count; ++i) {
    ActorCategory category = categories[rng.Weighted(weights)];
    std::set<std::string> spawns;
    if (category == ActorCategory::kPedestrian) {
      spawns = EligiblePedestrianSpawnNodes(scenario);
      if (spawns.empty()) {
        if (!vehicles_possible) {
          if (warnings) {
            warnings->push_back("no pedestrian spawn nodes left; stopped after " +
                                std::to_string(i) + " actors");
          }
          break;
        }
        category = categories[rng.Weighted(vehicle_weights)];
      }
    }
    if (category != ActorCategory::kPedestrian) {
      spawns = EligibleSpawnNodes(scenario);
    }
    if (spawns.empty()) break;  // cannot happen: count <= max_actors

    ActorSpec spec;
    spec.actor_id = ActorId(i);
    spec.category = category;
    spec.spawn_node = PickFrom(rng, spawns);
    const auto models = catalog.ModelsOf(category);
    if (!models.empty()) spec.model = models[rng.UniformIndex(models.size())]->id;
    const Range& velocity = config.velocity_ranges.at(category);
    spec.desired_velocity = rng.UniformReal(velocity.min, velocity.max);
    spec.lateral_offset = rng.UniformReal(config.lateral_offset_range.min,
                                          config.lateral_offset_range.max);
    spec.goal_node = PickFrom(rng, GoalCandidates(scenario, spec.spawn_node));
    scenario = PlaceActor(scenario, spec, catalog);
  }

  // The first vehicle becomes the ego.
  for (const auto& actor : scenario.actors) {
    if (IsVehicle(actor.category)) {
      scenario = DesignateEgo(scenario, actor.actor_id);
      break;
    }
  }
  return scenario;
}

std::vector<Scenario> SampleBatch(std::span<const MapData* const> maps,
                                  const AssetCatalog& catalog,
                                  const SamplerConfig& config, int count,
                                  std::vector<std::string>* warnings) {
  std::vector<Scenario> batch;
  for (int i = 0; i < count; ++i) {
    SamplerConfig item = config;
    item.seed = MixSeed(config.seed, static_cast<std::uint64_t>(i));
    batch.push_back(SampleScenario(maps, catalog, item, warnings));
  }
  return batch;
}

}  // namespace lanescape
