// potl command-line front end. Talks to the engine exclusively through
// the C API in potl.h; the HTTP facade below delegates every request the
// same way and computes nothing itself.

#include <CLI11.hpp>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <httplib.h>
#include <iostream>
#include <nlohmann/json.hpp>
#include <string>

#include "potl.h"

namespace {

using nlohmann::json;

// 0 success, 1 domain error, 2 usage/IO error.
int exit_code_for(potl_status status) {
  switch (status) {
    case POTL_OK:
      return 0;
    case POTL_E_USAGE:
    case POTL_E_IO:
    case POTL_E_PARSE:
    case POTL_E_CONFIG:
      return 2;
    default:
      return 1;
  }
}

std::string take_string(char* s) {
  std::string out = s ? s : "";
  potl_string_free(s);
  return out;
}

bool write_file_or_complain(const std::string& path,
                            const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
  if (!out) {
    std::cerr << "error: cannot write " << path << "\n";
    return false;
  }
  return true;
}

struct EngineHandle {
  potl_engine* engine = nullptr;
  ~EngineHandle() { potl_engine_destroy(engine); }
};

int open_engine(const std::string& config_path, EngineHandle& handle) {
  potl_status status = potl_engine_create(config_path.c_str(), &handle.engine);
  if (status != POTL_OK) {
    std::cerr << "error (" << potl_status_name(status)
              << "): " << potl_last_error() << "\n";
  }
  return exit_code_for(status);
}

int run_validate(const std::string& model_path, bool as_json, bool dump) {
  char* report_raw = nullptr;
  potl_status status =
      potl_validate_file(model_path.c_str(), dump ? 1 : 0, &report_raw);
  std::string report = take_string(report_raw);
  if (status != POTL_OK && status != POTL_E_VALIDATION) {
    std::cerr << "error (" << potl_status_name(status)
              << "): " << potl_last_error() << "\n";
    return exit_code_for(status);
  }
  json j = json::parse(report);
  bool ok = j.value("ok", false);
  if (as_json || dump) {
    std::cout << report << "\n";
  } else {
    std::cout << (ok ? "ok" : "invalid") << " (" << j["issues"].size()
              << " issue(s))\n";
    for (const json& issue : j["issues"]) {
      std::cout << "  [" << issue["severity"].get<std::string>() << "] "
                << issue["path"].get<std::string>() << ": "
                << issue["message"].get<std::string>() << "\n";
    }
  }
  return ok ? 0 : 1;
}

int run_instantiate(const std::string& config_path,
                    const std::string& request_id, bool has_seed,
                    std::uint64_t seed, const std::string& out_path,
                    const std::string& html_path, bool record) {
  EngineHandle handle;
  if (int rc = open_engine(config_path, handle)) return rc;

  json request{{"request_id", request_id}};
  if (has_seed) request["seed"] = seed;
  char* instance_raw = nullptr;
  potl_status status = potl_engine_instantiate(
      handle.engine, request.dump().c_str(), record ? 1 : 0, &instance_raw);
  std::string instance = take_string(instance_raw);
  if (status != POTL_OK) {
    std::cerr << "error (" << potl_status_name(status)
              << "): " << potl_last_error() << "\n";
    return exit_code_for(status);
  }
  if (out_path.empty()) {
    std::cout << instance << "\n";
  } else if (!write_file_or_complain(out_path, instance + "\n")) {
    return 2;
  }
  if (!html_path.empty()) {
    char* html_raw = nullptr;
    status = potl_engine_render_html(handle.engine, instance.c_str(),
                                     &html_raw);
    std::string html = take_string(html_raw);
    if (status != POTL_OK) {
      std::cerr << "error (" << potl_status_name(status)
                << "): " << potl_last_error() << "\n";
      return exit_code_for(status);
    }
    if (!write_file_or_complain(html_path, html)) return 2;
  }
  return 0;
}

int run_simulate(const std::string& config_path, std::uint64_t serves,
                 const std::string& policy, bool has_seed, std::uint64_t seed,
                 const std::string& report_path, const std::string& csv_path) {
  EngineHandle handle;
  if (int rc = open_engine(config_path, handle)) return rc;

  char* report_raw = nullptr;
  char* csv_raw = nullptr;
  potl_status status = potl_engine_simulate(
      handle.engine, serves, policy.empty() ? nullptr : policy.c_str(),
      has_seed ? 1 : 0, seed, &report_raw,
      csv_path.empty() ? nullptr : &csv_raw);
  std::string report = take_string(report_raw);
  std::string csv = take_string(csv_raw);
  if (status != POTL_OK) {
    std::cerr << "error (" << potl_status_name(status)
              << "): " << potl_last_error() << "\n";
    return exit_code_for(status);
  }
  if (report_path.empty()) {
    std::cout << report << "\n";
  } else if (!write_file_or_complain(report_path, report + "\n")) {
    return 2;
  }
  if (!csv_path.empty() && !write_file_or_complain(csv_path, csv)) return 2;
  return 0;
}

int run_stats(const std::string& config_path, const std::string& dof) {
  EngineHandle handle;
  if (int rc = open_engine(config_path, handle)) return rc;
  char* stats_raw = nullptr;
  potl_status status = potl_engine_stats(
      handle.engine, dof.empty() ? nullptr : dof.c_str(), &stats_raw);
  std::string stats = take_string(stats_raw);
  if (status != POTL_OK) {
    std::cerr << "error (" << potl_status_name(status)
              << "): " << potl_last_error() << "\n";
    return exit_code_for(status);
  }
  std::cout << stats << "\n";
  return 0;
}

httplib::Server* g_server = nullptr;

void handle_shutdown(int) {
  if (g_server) g_server->stop();
}

bool json_content(const httplib::Request& req) {
  std::string type = req.get_header_value("Content-Type");
  return type.empty() || type.find("application/json") != std::string::npos;
}

void reply_error(httplib::Response& res, int http_status, potl_status status) {
  json body{{"error", potl_status_name(status)},
            {"message", potl_last_error()}};
  res.status = http_status;
  res.set_content(body.dump(), "application/json");
}

int run_serve(const std::string& config_path, int port) {
  EngineHandle handle;
  if (int rc = open_engine(config_path, handle)) return rc;
  potl_engine* engine = handle.engine;

  httplib::Server server;
  g_server = &server;
  std::signal(SIGINT, handle_shutdown);
  std::signal(SIGTERM, handle_shutdown);

  server.Get("/v1/healthz", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(json{{"status", "ok"}}.dump(), "application/json");
  });

  server.Post("/v1/instantiate", [engine](const httplib::Request& req,
                                          httplib::Response& res) {
    if (!json_content(req)) {
      res.status = 400;
      res.set_content(json{{"error", "content-type must be application/json"}}
                          .dump(),
                      "application/json");
      return;
    }
    char* instance_raw = nullptr;
    potl_status status =
        potl_engine_instantiate(engine, req.body.c_str(), 1, &instance_raw);
    std::string instance = take_string(instance_raw);
    if (status == POTL_OK) {
      res.status = 200;
      res.set_content(instance, "application/json");
    } else if (status == POTL_E_DUPLICATE) {
      reply_error(res, 409, status);
    } else if (status == POTL_E_USAGE) {
      reply_error(res, 400, status);
    } else {
      reply_error(res, 500, status);
    }
  });

  server.Post("/v1/events", [engine](const httplib::Request& req,
                                     httplib::Response& res) {
    if (!json_content(req)) {
      res.status = 400;
      res.set_content(json{{"error", "content-type must be application/json"}}
                          .dump(),
                      "application/json");
      return;
    }
    char* result_raw = nullptr;
    potl_status status =
        potl_engine_ingest_event(engine, req.body.c_str(), &result_raw);
    std::string result = take_string(result_raw);
    if (status == POTL_OK) {
      res.status = 202;  // queued
      res.set_content(result, "application/json");
    } else if (status == POTL_E_USAGE) {
      reply_error(res, 400, status);
    } else {
      reply_error(res, 500, status);
    }
  });

  auto stats_handler = [engine](const httplib::Request& req,
                                httplib::Response& res) {
    const char* dof = nullptr;
    std::string dof_value;
    if (req.matches.size() > 1) {
      dof_value = req.matches[1];
      dof = dof_value.c_str();
    }
    char* stats_raw = nullptr;
    potl_status status = potl_engine_stats(engine, dof, &stats_raw);
    std::string stats = take_string(stats_raw);
    if (status == POTL_OK) {
      res.set_content(stats, "application/json");
    } else {
      reply_error(res, 500, status);
    }
  };
  server.Get("/v1/stats", stats_handler);
  server.Get(R"(/v1/stats/(.+))", stats_handler);

  server.Get("/v1/dead_letters", [engine](const httplib::Request&,
                                          httplib::Response& res) {
    char* letters_raw = nullptr;
    potl_status status = potl_engine_dead_letters(engine, &letters_raw);
    std::string letters = take_string(letters_raw);
    if (status == POTL_OK) {
      res.set_content(letters, "application/json");
    } else {
      reply_error(res, 500, status);
    }
  });

  std::cerr << "listening on port " << port << "\n";
  if (!server.listen("0.0.0.0", port)) {
    std::cerr << "error: cannot bind port " << port << "\n";
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"potl page-optimization engine"};
  app.require_subcommand(1);

  // validate
  std::string model_path;
  bool as_json = false;
  bool dump = false;
  CLI::App* validate = app.add_subcommand("validate", "parse and validate a POTL model");
  validate->add_option("model", model_path, "POTL document")->required();
  validate->add_flag("--json", as_json, "print the report as JSON");
  validate->add_flag("--dump", dump, "include the canonical model dump");

  // instantiate
  std::string config_path;
  std::string request_id = "cli";
  std::uint64_t seed = 0;
  std::string out_path;
  std::string html_path;
  bool record = false;
  CLI::App* instantiate =
      app.add_subcommand("instantiate", "serve one page instance");
  instantiate->add_option("--config", config_path, "engine config")->required();
  instantiate->add_option("--request-id", request_id, "request id");
  CLI::Option* seed_opt =
      instantiate->add_option("--seed", seed, "root seed for this serve");
  instantiate->add_option("--out", out_path, "write instance JSON here");
  instantiate->add_option("--html", html_path, "write layout-bound HTML here");
  instantiate->add_flag("--record", record,
                        "record the serve for feedback attribution");

  // simulate
  std::string sim_config;
  std::uint64_t serves = 1000;
  std::string policy;
  std::uint64_t sim_seed = 0;
  std::string report_path;
  std::string csv_path;
  CLI::App* simulate =
      app.add_subcommand("simulate", "run the closed-loop simulator");
  simulate->add_option("--config", sim_config, "engine config")->required();
  simulate->add_option("--serves", serves, "number of serves");
  simulate->add_option("--policy", policy, "force one policy everywhere");
  CLI::Option* sim_seed_opt =
      simulate->add_option("--seed", sim_seed, "simulation seed");
  simulate->add_option("--report", report_path, "write report JSON here");
  simulate->add_option("--csv", csv_path, "write per-serve series here");

  // stats
  std::string stats_config;
  std::string dof;
  CLI::App* stats = app.add_subcommand("stats", "print the arm table");
  stats->add_option("--config", stats_config, "engine config")->required();
  stats->add_option("--dof", dof, "restrict to one DoF");

  // serve
  std::string serve_config;
  int port = 8080;
  CLI::App* serve = app.add_subcommand("serve", "run the HTTP facade");
  serve->add_option("--config", serve_config, "engine config")->required();
  serve->add_option("--port", port, "listen port");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  if (validate->parsed()) {
    return run_validate(model_path, as_json, dump);
  }
  if (instantiate->parsed()) {
    return run_instantiate(config_path, request_id, seed_opt->count() > 0,
                           seed, out_path, html_path, record);
  }
  if (simulate->parsed()) {
    return run_simulate(sim_config, serves, policy, sim_seed_opt->count() > 0,
                        sim_seed, report_path, csv_path);
  }
  if (stats->parsed()) {
    return run_stats(stats_config, dof);
  }
  if (serve->parsed()) {
    return run_serve(serve_config, port);
  }
  return 2;
}
