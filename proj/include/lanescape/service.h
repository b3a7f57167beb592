#pragma once

#include <cstddef>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "lanescape/assets.h"
#include "lanescape/persist.h"
#include "lanescape/scenario.h"

namespace lanescape {

struct ServiceOptions {
  std::filesystem::path cache_root;
  // Defaults to <cache_root>/scenarios.
  std::optional<std::filesystem::path> scenario_dir;
  std::optional<std::filesystem::path> asset_catalog;
  std::size_t undo_depth = 50;
};

struct HttpRequest {
  std::string method;
  std::string path;
  std::multimap<std::string, std::string> query;
  std::string body;
};

struct HttpResponse {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

// HTTP front end over the engine. Handle() is the whole API and is safe to
// call from many threads; Listen() only adapts it to a socket.
class Service {
 public:
  explicit Service(ServiceOptions options);
  ~Service();

  HttpResponse Handle(const HttpRequest& request);

  // Re-reads the map cache and swaps the snapshot.
  void ReloadMaps();

  // Blocks until Stop(). Returns false if the port cannot be bound.
  bool Listen(const std::string& host, int port);
  // Binds an ephemeral port and returns it; serving starts on a background
  // thread.
  int ListenInBackground(const std::string& host);
  void Stop();

 private:
  struct MapSnapshot {
    std::vector<MapCatalogEntry> entries;
    std::map<std::string, MapData> maps;
  };
  struct Session {
    std::mutex mutex;
    Scenario current;
    std::deque<Scenario> undo;
  };
  class Server;

  std::shared_ptr<const MapSnapshot> Maps() const;
  const MapData& MapFor(const MapSnapshot& maps, const std::string& map_id) const;
  std::shared_ptr<Session> FindSession(const std::string& scenario_id) const;
  std::string NewScenarioId();
  std::string Store(Scenario scenario);
  void Commit(Session& session, Scenario next);
  void Persist(const Scenario& scenario) const;
  void LoadSessions();

  HttpResponse Route(const HttpRequest& request);

  ServiceOptions options_;
  std::filesystem::path scenario_dir_;
  AssetCatalog catalog_;

  mutable std::mutex maps_mutex_;
  std::shared_ptr<const MapSnapshot> maps_;

  mutable std::shared_mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;

  std::mutex id_mutex_;
  std::unique_ptr<Server> server_;
};

}  // namespace lanescape
