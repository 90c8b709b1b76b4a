#include "potl/config.hpp"

#include <filesystem>
#include <nlohmann/json.hpp>

#include "potl/errors.hpp"
#include "potl/fetchers.hpp"
#include "potl/util.hpp"

namespace potl {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

std::string resolve_path(const std::string& base_dir, const std::string& path) {
  if (path.empty() || fs::path(path).is_absolute() || base_dir.empty()) {
    return path;
  }
  return (fs::path(base_dir) / path).string();
}

void require_exists(const std::string& path, const std::string& what) {
  if (!fs::exists(path)) {
    raise(ErrorCode::ConfigError, what + " does not exist: " + path);
  }
}

[[noreturn]] void bad_shape(const std::string& what) {
  raise(ErrorCode::ConfigError, "config: " + what);
}

}  // namespace

EngineConfig parse_config_json(std::string_view text,
                               const std::string& base_dir) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    bad_shape("not a JSON object");
  }
  EngineConfig config;
  config.base_dir = base_dir;

  if (!j.contains("model") || !j["model"].is_string()) {
    bad_shape("'model' path is required");
  }
  config.model_path = resolve_path(base_dir, j["model"].get<std::string>());

  if (j.contains("layout")) {
    config.layout_path = resolve_path(base_dir, j["layout"].get<std::string>());
  }
  if (j.contains("aliases")) {
    for (auto it = j["aliases"].begin(); it != j["aliases"].end(); ++it) {
      config.aliases[it.key()] = it.value().get<std::string>();
    }
  }

  if (j.contains("fetchers")) {
    if (!j["fetchers"].is_object()) bad_shape("'fetchers' must be an object");
    for (auto it = j["fetchers"].begin(); it != j["fetchers"].end(); ++it) {
      const json& spec = it.value();
      EngineConfig::FetcherSpec out;
      out.type = spec.value("type", std::string("catalog"));
      if (out.type == "catalog") {
        if (!spec.contains("path")) {
          bad_shape("catalog fetcher '" + it.key() + "' needs a path");
        }
        out.path = resolve_path(base_dir, spec["path"].get<std::string>());
      } else if (out.type == "const") {
        if (!spec.contains("items") || !spec["items"].is_array()) {
          bad_shape("const fetcher '" + it.key() + "' needs an items array");
        }
        try {
          out.items = parse_catalog_json(spec["items"].dump(),
                                         "config fetcher " + it.key());
        } catch (const Error& e) {
          bad_shape("const fetcher '" + it.key() + "': " + e.message());
        }
      } else if (out.type == "http") {
        if (!spec.contains("url")) {
          bad_shape("http fetcher '" + it.key() + "' needs a url");
        }
        out.url = spec["url"].get<std::string>();
        out.timeout_ms = spec.value("timeout_ms", 2000);
      } else {
        bad_shape("fetcher '" + it.key() + "' has unknown type '" + out.type +
                  "'");
      }
      config.fetchers[it.key()] = std::move(out);
    }
  }

  if (j.contains("policies")) {
    const json& policies = j["policies"];
    config.engine.default_policy =
        policies.value("default", std::string("thompson"));
    if (policies.contains("aliases")) {
      for (auto it = policies["aliases"].begin();
           it != policies["aliases"].end(); ++it) {
        config.engine.policy_aliases[it.key()] = it.value().get<std::string>();
      }
    }
    if (policies.contains("overrides")) {
      for (auto it = policies["overrides"].begin();
           it != policies["overrides"].end(); ++it) {
        config.engine.policy_overrides[it.key()] =
            it.value().get<std::string>();
      }
    }
  }

  config.engine.max_rejections = j.value("max_rejections", 100);
  if (config.engine.max_rejections < 1) {
    bad_shape("max_rejections must be >= 1");
  }
  if (j.contains("columns")) {
    for (auto it = j["columns"].begin(); it != j["columns"].end(); ++it) {
      int columns = it.value().get<int>();
      if (columns < 1) bad_shape("columns must be positive");
      config.engine.columns_overrides[it.key()] = columns;
    }
  }

  config.seed = j.value("seed", std::uint64_t{0});
  if (j.contains("now")) {
    auto now = parse_iso8601(j["now"].get<std::string>());
    if (!now) bad_shape("'now' is not ISO-8601 UTC");
    config.now = *now;
  }

  if (j.contains("persistence")) {
    const json& persistence = j["persistence"];
    if (persistence.contains("journal")) {
      config.journal_path =
          resolve_path(base_dir, persistence["journal"].get<std::string>());
    }
    if (persistence.contains("snapshot")) {
      config.snapshot_path =
          resolve_path(base_dir, persistence["snapshot"].get<std::string>());
    }
  }
  config.dedup_window = j.value("dedup_window", std::size_t{65'536});
  config.instance_capacity =
      j.value("instance_capacity", std::size_t{100'000});

  if (j.contains("user_model")) {
    config.user_model_path =
        resolve_path(base_dir, j["user_model"].get<std::string>());
  }
  config.sync_every = j.value("sync_every", std::uint64_t{1});
  config.report_window = j.value("report_window", std::size_t{1000});

  // Every referenced input must exist at startup.
  require_exists(config.model_path, "model file");
  if (!config.layout_path.empty()) {
    require_exists(config.layout_path, "layout file");
  }
  for (const auto& [name, spec] : config.fetchers) {
    if (spec.type == "catalog") {
      require_exists(spec.path, "catalog of fetcher '" + name + "'");
    }
  }
  if (!config.user_model_path.empty()) {
    require_exists(config.user_model_path, "user model file");
  }
  return config;
}

EngineConfig load_config_file(const std::string& path) {
  std::string text = read_file(path);
  std::string base_dir = fs::path(path).parent_path().string();
  return parse_config_json(text, base_dir);
}

}  // namespace potl
