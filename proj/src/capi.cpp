#include "potl.h"

#include <cstring>
#include <mutex>
#include <nlohmann/json.hpp>
#include <string>

#include "potl/errors.hpp"
#include "potl/service.hpp"
#include "potl/util.hpp"

using nlohmann::json;

struct potl_engine {
  std::unique_ptr<potl::Engine> impl;
  std::mutex mu;  // serializes C-API calls on one handle
};

namespace {

thread_local std::string t_last_error;

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

potl_status status_of(const potl::Error& e) {
  using potl::ErrorCode;
  switch (e.code()) {
    case ErrorCode::IoError: return POTL_E_IO;
    case ErrorCode::MalformedDocument: return POTL_E_PARSE;
    case ErrorCode::SchemaViolation: return POTL_E_VALIDATION;
    case ErrorCode::DuplicateLabel: return POTL_E_PARSE;
    case ErrorCode::SyntaxError: return POTL_E_PARSE;
    case ErrorCode::TypeError: return POTL_E_PARSE;
    case ErrorCode::ConfigError: return POTL_E_CONFIG;
    case ErrorCode::UnknownHandler: return POTL_E_UNKNOWN_HANDLER;
    case ErrorCode::UnknownPolicy: return POTL_E_UNKNOWN_POLICY;
    case ErrorCode::FetchFailed: return POTL_E_FETCH;
    case ErrorCode::Infeasible: return POTL_E_INFEASIBLE;
    case ErrorCode::PoolTooSmall: return POTL_E_POOL_TOO_SMALL;
    case ErrorCode::SearchSpaceTooLarge: return POTL_E_SEARCH_SPACE;
    case ErrorCode::TooLarge: return POTL_E_SEARCH_SPACE;
    case ErrorCode::DuplicateInstance: return POTL_E_DUPLICATE;
    case ErrorCode::StorageError: return POTL_E_STORAGE;
    case ErrorCode::DomainError: return POTL_E_DOMAIN;
    case ErrorCode::MissingItem:
    case ErrorCode::MissingFragment:
    case ErrorCode::Internal: return POTL_E_INTERNAL;
  }
  return POTL_E_INTERNAL;
}

template <typename Fn>
potl_status guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const potl::Error& e) {
    t_last_error = e.what();
    return status_of(e);
  } catch (const std::exception& e) {
    t_last_error = e.what();
    return POTL_E_INTERNAL;
  }
}

}  // namespace

extern "C" {

const char* potl_version(void) { return "1.0.0"; }

const char* potl_status_name(int status) {
  switch (status) {
    case POTL_OK: return "ok";
    case POTL_E_USAGE: return "usage";
    case POTL_E_IO: return "io";
    case POTL_E_PARSE: return "parse";
    case POTL_E_VALIDATION: return "validation";
    case POTL_E_CONFIG: return "config";
    case POTL_E_UNKNOWN_HANDLER: return "unknown_handler";
    case POTL_E_UNKNOWN_POLICY: return "unknown_policy";
    case POTL_E_FETCH: return "fetch";
    case POTL_E_INFEASIBLE: return "infeasible";
    case POTL_E_POOL_TOO_SMALL: return "pool_too_small";
    case POTL_E_SEARCH_SPACE: return "search_space";
    case POTL_E_DUPLICATE: return "duplicate";
    case POTL_E_STORAGE: return "storage";
    case POTL_E_DOMAIN: return "domain";
    case POTL_E_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* potl_last_error(void) { return t_last_error.c_str(); }

void potl_string_free(char* s) { delete[] s; }

potl_status potl_validate_file(const char* model_path, int include_dump,
                               char** out_report_json) {
  if (!model_path || !out_report_json) {
    t_last_error = "model_path and out_report_json are required";
    return POTL_E_USAGE;
  }
  *out_report_json = nullptr;
  return guarded([&]() -> potl_status {
    std::string text = potl::read_file(model_path);
    json report{{"ok", false}, {"issues", json::array()}};
    potl::PageModel model;
    try {
      model = potl::parse_potl(text);
    } catch (const potl::Error& e) {
      if (e.code() != potl::ErrorCode::SchemaViolation) throw;
      // Structural violations still produce a report, like validation
      // findings, so callers can list them.
      report["issues"].push_back({{"severity", "error"},
                                  {"path", e.path()},
                                  {"message", e.message()}});
      *out_report_json = dup_string(report.dump());
      t_last_error = e.what();
      return POTL_E_VALIDATION;
    }
    potl::ValidationReport validation = potl::validate_model(model);
    report["ok"] = validation.ok();
    for (const auto& issue : validation.issues) {
      report["issues"].push_back(
          {{"severity",
            issue.severity == potl::ValidationIssue::Severity::Error
                ? "error"
                : "warning"},
           {"path", issue.path},
           {"message", issue.message}});
    }
    if (include_dump) {
      report["model"] = json::parse(potl::dump_model_json(model));
    }
    *out_report_json = dup_string(report.dump());
    return POTL_OK;
  });
}

potl_status potl_engine_create(const char* config_path, potl_engine** out) {
  if (!config_path || !out) {
    t_last_error = "config_path and out are required";
    return POTL_E_USAGE;
  }
  *out = nullptr;
  return guarded([&]() -> potl_status {
    auto engine = std::make_unique<potl_engine>();
    engine->impl = potl::Engine::from_config_file(config_path);
    *out = engine.release();
    return POTL_OK;
  });
}

void potl_engine_destroy(potl_engine* engine) {
  if (!engine) return;
  try {
    engine->impl->flush();
  } catch (...) {
    // Destruction must not throw; a failed flush loses only the snapshot.
  }
  delete engine;
}

potl_status potl_engine_instantiate(potl_engine* engine,
                                    const char* request_json, int record,
                                    char** out_instance_json) {
  if (!engine || !request_json || !out_instance_json) {
    t_last_error = "engine, request_json and out_instance_json are required";
    return POTL_E_USAGE;
  }
  *out_instance_json = nullptr;
  json j = json::parse(request_json, nullptr, false);
  if (j.is_discarded() || !j.is_object() || !j.contains("request_id") ||
      !j["request_id"].is_string()) {
    t_last_error = "request JSON needs a string request_id";
    return POTL_E_USAGE;
  }
  return guarded([&]() -> potl_status {
    potl::InstantiateRequest request;
    request.request_id = j["request_id"].get<std::string>();
    if (j.contains("user_id") && j["user_id"].is_string()) {
      request.user_id = j["user_id"].get<std::string>();
    }
    if (j.contains("seed")) {
      request.seed = j["seed"].get<std::uint64_t>();
    }
    if (j.contains("extra") && j["extra"].is_object()) {
      for (auto it = j["extra"].begin(); it != j["extra"].end(); ++it) {
        request.extra[it.key()] = it.value().get<std::string>();
      }
    }
    std::lock_guard<std::mutex> lock(engine->mu);
    *out_instance_json =
        dup_string(engine->impl->instantiate_json(request, record != 0));
    return POTL_OK;
  });
}

potl_status potl_engine_render_html(potl_engine* engine,
                                    const char* instance_json,
                                    char** out_html) {
  if (!engine || !instance_json || !out_html) {
    t_last_error = "engine, instance_json and out_html are required";
    return POTL_E_USAGE;
  }
  *out_html = nullptr;
  return guarded([&]() -> potl_status {
    potl::PageInstance instance = potl::parse_instance_json(instance_json);
    std::lock_guard<std::mutex> lock(engine->mu);
    *out_html = dup_string(engine->impl->render_instance_html(instance));
    return POTL_OK;
  });
}

potl_status potl_engine_ingest_event(potl_engine* engine,
                                     const char* event_json,
                                     char** out_result_json) {
  if (!engine || !event_json) {
    t_last_error = "engine and event_json are required";
    return POTL_E_USAGE;
  }
  if (out_result_json) *out_result_json = nullptr;
  std::string reason;
  auto event = potl::event_from_json(event_json, &reason);
  if (!event) {
    t_last_error = "malformed event: " + reason;
    return POTL_E_USAGE;
  }
  return guarded([&]() -> potl_status {
    std::lock_guard<std::mutex> lock(engine->mu);
    potl::AttributionResult result = engine->impl->ingest(*event);
    if (out_result_json) {
      json updated = json::array();
      for (const auto& key : result.updated) updated.push_back(key.serialize());
      json out{{"updated", updated}, {"dead_lettered", result.dead_lettered}};
      if (result.dead_lettered) out["reason"] = result.reason;
      *out_result_json = dup_string(out.dump());
    }
    return POTL_OK;
  });
}

potl_status potl_engine_stats(potl_engine* engine, const char* dof_id,
                              char** out_json) {
  if (!engine || !out_json) {
    t_last_error = "engine and out_json are required";
    return POTL_E_USAGE;
  }
  *out_json = nullptr;
  return guarded([&]() -> potl_status {
    std::optional<std::string> dof;
    if (dof_id) dof = std::string(dof_id);
    std::lock_guard<std::mutex> lock(engine->mu);
    *out_json = dup_string(engine->impl->stats_json(dof));
    return POTL_OK;
  });
}

potl_status potl_engine_dead_letters(potl_engine* engine, char** out_json) {
  if (!engine || !out_json) {
    t_last_error = "engine and out_json are required";
    return POTL_E_USAGE;
  }
  *out_json = nullptr;
  return guarded([&]() -> potl_status {
    std::lock_guard<std::mutex> lock(engine->mu);
    json entries = json::array();
    for (const auto& letter : engine->impl->store().dead_letters()) {
      entries.push_back({{"reason", letter.reason},
                         {"event", json::parse(letter.event_json)}});
    }
    json out{{"count", engine->impl->store().dead_letter_count()},
             {"entries", entries}};
    *out_json = dup_string(out.dump());
    return POTL_OK;
  });
}

potl_status potl_engine_simulate(potl_engine* engine, uint64_t serves,
                                 const char* policy, int has_seed,
                                 uint64_t seed, char** out_report_json,
                                 char** out_series_csv) {
  if (!engine) {
    t_last_error = "engine is required";
    return POTL_E_USAGE;
  }
  if (out_report_json) *out_report_json = nullptr;
  if (out_series_csv) *out_series_csv = nullptr;
  return guarded([&]() -> potl_status {
    potl::SimOptions options;
    options.serves = serves;
    options.seed = has_seed ? seed : engine->impl->config().seed;
    options.sync_every = engine->impl->config().sync_every;
    options.window = engine->impl->config().report_window;
    if (policy) options.policy_override = std::string(policy);
    std::lock_guard<std::mutex> lock(engine->mu);
    potl::SimReport report = engine->impl->run_simulation(options);
    if (out_report_json) *out_report_json = dup_string(report.to_json());
    if (out_series_csv) *out_series_csv = dup_string(report.series_csv());
    return POTL_OK;
  });
}

potl_status potl_engine_flush(potl_engine* engine) {
  if (!engine) {
    t_last_error = "engine is required";
    return POTL_E_USAGE;
  }
  return guarded([&]() -> potl_status {
    std::lock_guard<std::mutex> lock(engine->mu);
    engine->impl->flush();
    return POTL_OK;
  });
}

}  // extern "C"
