// Command-line front end: ingest maps, list the catalog, generate scenario
// batches, realize timelines and run the HTTP service.

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lanescape/assets.h"
#include "lanescape/error.h"
#include "lanescape/persist.h"
#include "lanescape/realize.h"
#include "lanescape/sampler.h"
#include "lanescape/scenario.h"
#include "lanescape/service.h"

namespace fs = std::filesystem;
using namespace lanescape;

namespace {

struct Options {
  std::string cache_root = "lanescape-cache";
  std::string assets;
};

AssetCatalog Catalog(const Options& options) {
  return options.assets.empty() ? DefaultAssetCatalog()
                                : LoadAssetCatalog(options.assets);
}

void WriteOutput(const std::string& out, const std::string& text) {
  if (out.empty() || out == "-") {
    std::cout << text;
  } else {
    WriteFileAtomic(out, text);
  }
}

// Validates against the cached map when it exists.
Scenario LoadScenario(const Options& options, const std::string& path,
                      const AssetCatalog& catalog) {
  const std::string document = ReadFile(path);
  const Scenario probe = DocumentToScenario(document, catalog);
  try {
    const MapData map = LoadMap(options.cache_root, probe.map_id);
    return DocumentToScenario(document, catalog, &map);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kNotFound) throw;
    std::cerr << "warning: map " << probe.map_id << " is not in "
              << options.cache_root << "; skipped map validation\n";
    return probe;
  }
}

int RunIngest(const Options& options, const std::vector<std::string>& files,
              double spacing, double target_length) {
  for (const auto& file : files) {
    const IngestResult result =
        IngestMap(file, options.cache_root, spacing, target_length);
    for (const auto& warning : result.warnings) {
      std::cerr << "warning: " << result.entry.map_id << ": " << warning << "\n";
    }
    std::cout << result.entry.map_id << ": "
              << (result.wrote ? "ingested" : "up to date") << " ("
              << result.entry.digest.substr(0, 12) << ")\n";
  }
  return 0;
}

int RunCatalog(const Options& options, bool json) {
  const auto entries = ListCatalog(options.cache_root);
  if (json) {
    nlohmann::ordered_json list = nlohmann::ordered_json::array();
    for (const auto& entry : entries) {
      list.push_back({{"map_id", entry.map_id},
                      {"source", entry.source},
                      {"digest", entry.digest},
                      {"metadata", MetadataToJsonValue(entry.metadata)}});
    }
    std::cout << list.dump(2) << "\n";
    return 0;
  }
  std::printf("%-24s %9s %10s %14s %12s\n", "map", "junctions", "crosswalks",
              "traffic_lights", "drivable_m");
  for (const auto& entry : entries) {
    const MapMetadata& m = entry.metadata;
    std::printf("%-24s %9d %10d %14d %12.1f\n", entry.map_id.c_str(),
                m.junction_count, m.crosswalk_count, m.traffic_light_count,
                m.total_drivable_length);
  }
  return 0;
}

int RunGenerate(const Options& options, SamplerConfig config,
                const std::string& config_file,
                std::optional<std::uint64_t> seed, std::optional<double> fill,
                int count, const std::string& out,
                const std::vector<std::string>& map_ids) {
  if (!config_file.empty()) {
    try {
      config = SamplerConfigFromJson(
          nlohmann::ordered_json::parse(ReadFile(config_file)));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kFormat, "malformed sampler configuration " +
                                          config_file + ": " + e.what());
    }
  }
  if (seed) config.seed = *seed;
  if (fill) config.fill_percentage = *fill;
  if (count < 1) throw Error(ErrorCode::kDomain, "--count must be positive");

  std::vector<MapData> maps;
  if (map_ids.empty()) {
    for (const auto& entry : ListCatalog(options.cache_root)) {
      maps.push_back(LoadMap(options.cache_root, entry.map_id));
    }
  } else {
    for (const auto& id : map_ids) maps.push_back(LoadMap(options.cache_root, id));
    std::sort(maps.begin(), maps.end(),
              [](const auto& a, const auto& b) { return a.map_id < b.map_id; });
  }
  if (maps.empty()) {
    throw Error(ErrorCode::kNotFound,
                "no maps in " + options.cache_root + "; run ingest first");
  }
  std::vector<const MapData*> pointers;
  for (const auto& map : maps) pointers.push_back(&map);

  std::vector<std::string> warnings;
  const auto batch =
      SampleBatch(pointers, Catalog(options), config, count, &warnings);
  for (const auto& warning : warnings) std::cerr << "warning: " << warning << "\n";
  fs::create_directories(out);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "scenario-%04zu.scn", i);
    const fs::path path = fs::path(out) / name;
    WriteFileAtomic(path, ScenarioToDocument(batch[i]));
    std::cout << path.string() << "\n";
  }
  return 0;
}

int RunRealize(const Options& options, const std::string& scenario_path,
               double dt, const std::string& out) {
  const Scenario scenario =
      LoadScenario(options, scenario_path, Catalog(options));
  WriteOutput(out, TimelineToDocument(RealizeScenario(scenario, dt)));
  return 0;
}

int RunExportEmpty(const Options& options, const std::string& scenario_path,
                   const std::string& out) {
  const Scenario scenario =
      LoadScenario(options, scenario_path, Catalog(options));
  WriteOutput(out, ExportEmptySubgraph(scenario));
  return 0;
}

Service* active_service = nullptr;

int RunServe(const Options& options, const std::string& host, int port) {
  ServiceOptions service_options;
  service_options.cache_root = options.cache_root;
  if (!options.assets.empty()) service_options.asset_catalog = options.assets;
  Service service(service_options);
  active_service = &service;
  std::signal(SIGINT, [](int) {
    if (active_service) active_service->Stop();
  });
  std::signal(SIGTERM, [](int) {
    if (active_service) active_service->Stop();
  });
  std::cerr << "listening on " << host << ":" << port << "\n";
  const bool ok = service.Listen(host, port);
  active_service = nullptr;
  if (!ok) {
    throw Error(ErrorCode::kIo, "cannot listen on " + host + ":" +
                                    std::to_string(port));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scenario generation on OpenDRIVE lane graphs"};
  app.require_subcommand(1);
  app.fallthrough();

  Options options;
  app.add_option("--cache-root", options.cache_root, "Map cache directory")
      ->envname("LANESCAPE_CACHE_ROOT");
  app.add_option("--assets", options.assets, "Asset catalog (JSON)");

  std::vector<std::string> files;
  double spacing = kDefaultSpacing;
  double target_length = kDefaultTargetLength;
  auto* ingest = app.add_subcommand("ingest", "Parse maps into the cache");
  ingest->add_option("files", files, "OpenDRIVE files")->required();
  ingest->add_option("--spacing", spacing, "Node spacing in metres");
  ingest->add_option("--target-length", target_length,
                     "Region target length in metres");

  bool json = false;
  auto* catalog = app.add_subcommand("catalog", "List cached maps");
  catalog->add_flag("--json", json, "Print JSON");

  SamplerConfig config;
  std::string config_file;
  std::optional<std::uint64_t> seed;
  std::optional<double> fill;
  int count = 1;
  std::string out_dir = "scenarios";
  std::vector<std::string> map_ids;
  auto* generate = app.add_subcommand("generate", "Sample random scenarios");
  generate->add_option("--seed", seed, "Random seed");
  generate->add_option("--fill", fill, "Fill percentage in [0, 1]");
  generate->add_option("--count", count, "Number of scenarios");
  generate->add_option("--out", out_dir, "Output directory");
  generate->add_option("--config", config_file, "Sampler configuration (JSON)");
  generate->add_option("--map", map_ids, "Restrict to these map ids");

  std::string scenario_path;
  double dt = kDefaultDt;
  std::string out;
  auto* realize = app.add_subcommand("realize", "Compute a scenario timeline");
  realize->add_option("scenario", scenario_path, "Scenario document")
      ->required();
  realize->add_option("--dt", dt, "Time step in seconds");
  realize->add_option("--out", out, "Timeline file (default stdout)");

  auto* export_empty = app.add_subcommand(
      "export-empty", "Write the actor-free subgraph as GraphML");
  export_empty->add_option("scenario", scenario_path, "Scenario document")
      ->required();
  export_empty->add_option("--out", out, "GraphML file (default stdout)");

  std::string host = "127.0.0.1";
  int port = 8080;
  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  serve->add_option("--port", port, "TCP port");
  serve->add_option("--host", host, "Bind address");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest) return RunIngest(options, files, spacing, target_length);
    if (*catalog) return RunCatalog(options, json);
    if (*generate) {
      return RunGenerate(options, config, config_file, seed, fill, count,
                         out_dir, map_ids);
    }
    if (*realize) return RunRealize(options, scenario_path, dt, out);
    if (*export_empty) return RunExportEmpty(options, scenario_path, out);
    if (*serve) return RunServe(options, host, port);
  } catch (const Error& e) {
    std::cerr << "lanescape: " << ErrorCodeName(e.code()) << ": " << e.what()
              << "\n";
    for (const auto& detail : e.details()) std::cerr << "  - " << detail << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "lanescape: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
