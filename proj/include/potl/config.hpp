#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "potl/engine.hpp"
#include "potl/feedback.hpp"

namespace potl {

/// Engine configuration file (JSON). Relative paths resolve against the
/// config file's directory; every referenced path must exist at startup.
struct EngineConfig {
  std::string model_path;
  std::string layout_path;                       // optional
  std::map<std::string, std::string> aliases;    // region label -> layout label

  struct FetcherSpec {
    std::string type;  // "catalog" | "const" | "http"
    std::string path;
    std::string url;
    int timeout_ms = 2000;
    std::vector<Item> items;  // const fetcher payload
  };
  std::map<std::string, FetcherSpec> fetchers;   // handler name -> spec

  EngineOptions engine;                          // policies, R, columns
  std::uint64_t seed = 0;
  std::optional<std::int64_t> now;               // fixed clock when set

  std::string journal_path;                      // optional persistence
  std::string snapshot_path;
  std::size_t dedup_window = 65'536;
  std::size_t instance_capacity = 100'000;

  std::string user_model_path;                   // optional, for simulate
  std::uint64_t sync_every = 1;
  std::size_t report_window = 1000;

  std::string base_dir;  // directory the config was loaded from
};

/// Throws Error{ConfigError} on shape problems and Error{IoError} on
/// missing files.
EngineConfig load_config_file(const std::string& path);
EngineConfig parse_config_json(std::string_view text,
                               const std::string& base_dir);

}  // namespace potl
