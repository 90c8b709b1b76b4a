#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <nlohmann/json.hpp>
#include <string>

#include "potl.h"
#include "support.hpp"

using nlohmann::json;
using testsupport::fixture_path;

namespace {

std::string take(char* s) {
  std::string out = s ? s : "";
  potl_string_free(s);
  return out;
}

struct Handle {
  potl_engine* engine = nullptr;
  ~Handle() { potl_engine_destroy(engine); }
};

}  // namespace

TEST_CASE("validate: clean fixture, dump on request") {
  char* report_raw = nullptr;
  potl_status status = potl_validate_file(
      fixture_path("mainpage.potl").c_str(), 0, &report_raw);
  REQUIRE(status == POTL_OK);
  json report = json::parse(take(report_raw));
  CHECK(report["ok"] == true);
  CHECK_FALSE(report.contains("model"));

  status = potl_validate_file(fixture_path("mainpage.potl").c_str(), 1,
                              &report_raw);
  REQUIRE(status == POTL_OK);
  report = json::parse(take(report_raw));
  CHECK(report.contains("model"));
  CHECK(report["model"]["regions"].size() == 8);
}

TEST_CASE("validate: missing file and malformed input status codes") {
  char* out = nullptr;
  CHECK(potl_validate_file("/no/such/file.potl", 0, &out) == POTL_E_IO);
  CHECK(out == nullptr);
  CHECK(std::string(potl_last_error()).find("file") != std::string::npos);

  testsupport::TempDir dir("capi");
  potl::write_file(dir.file("broken.potl"), "<layout label=\"L\">");
  CHECK(potl_validate_file(dir.file("broken.potl").c_str(), 0, &out) ==
        POTL_E_PARSE);

  // Structural violations still return a listable report.
  potl::write_file(
      dir.file("dup.potl"),
      "<layout label=\"L\"><region label=\"R\"><module label=\"M\">"
      "<source label=\"S\"><apl:operator id=\"o\" handler=\"h\"/></source>"
      "<renderer label=\"rr\"/></module></region>"
      "<region label=\"R2\"><module label=\"M2\"><source label=\"S2\">"
      "<apl:operator id=\"o\" handler=\"h\"/></source>"
      "<renderer label=\"r2\"/></module></region></layout>");
  CHECK(potl_validate_file(dir.file("dup.potl").c_str(), 0, &out) ==
        POTL_E_VALIDATION);
  json report = json::parse(take(out));
  CHECK(report["ok"] == false);
  CHECK(report["issues"].size() == 1);
}

TEST_CASE("engine lifecycle, instantiate, render, events, stats") {
  Handle handle;
  REQUIRE(potl_engine_create(fixture_path("mainpage/config.json").c_str(),
                             &handle.engine) == POTL_OK);

  char* instance_raw = nullptr;
  REQUIRE(potl_engine_instantiate(handle.engine,
                                  "{\"request_id\": \"capi-1\", \"seed\": 42}",
                                  1, &instance_raw) == POTL_OK);
  std::string instance_text = take(instance_raw);
  json instance = json::parse(instance_text);
  CHECK(instance["slots"].size() == 37);

  char* html_raw = nullptr;
  REQUIRE(potl_engine_render_html(handle.engine, instance_text.c_str(),
                                  &html_raw) == POTL_OK);
  std::string html = take(html_raw);
  std::size_t tokens = 0;
  for (std::size_t at = 0; (at = html.find("data-token", at)) != std::string::npos;
       at += 10) {
    ++tokens;
  }
  CHECK(tokens == 8);

  // A recorded duplicate request id is a conflict.
  CHECK(potl_engine_instantiate(handle.engine,
                                "{\"request_id\": \"capi-1\", \"seed\": 42}",
                                1, &instance_raw) == POTL_E_DUPLICATE);

  // Click a decision-backed slot through the pinned event-line schema
  // (the first slot belongs to a plain operator module and has no arm).
  std::string token;
  for (const json& slot : instance["slots"]) {
    if (slot.contains("dof")) {
      token = slot["token"].get<std::string>();
      break;
    }
  }
  REQUIRE_FALSE(token.empty());
  json event{{"instance_id", instance["instance_id"]},
             {"token", token},
             {"type", "click"},
             {"at", "2026-01-01T12:00:05Z"}};
  char* result_raw = nullptr;
  REQUIRE(potl_engine_ingest_event(handle.engine, event.dump().c_str(),
                                   &result_raw) == POTL_OK);
  json result = json::parse(take(result_raw));
  CHECK(result["dead_lettered"] == false);
  CHECK(result["updated"].size() == 1);

  // Malformed shapes are usage errors (never queued).
  CHECK(potl_engine_ingest_event(handle.engine, "{\"type\": \"click\"}",
                                 nullptr) == POTL_E_USAGE);

  char* stats_raw = nullptr;
  REQUIRE(potl_engine_stats(handle.engine, "YahooSiteMap", &stats_raw) ==
          POTL_OK);
  json stats = json::parse(take(stats_raw));
  CHECK(stats["arms"].size() == 18);  // 18 (item, position) pairs served once

  char* letters_raw = nullptr;
  REQUIRE(potl_engine_dead_letters(handle.engine, &letters_raw) == POTL_OK);
  json letters = json::parse(take(letters_raw));
  CHECK(letters["count"] == 0);
}

TEST_CASE("engine create: missing config is a config/io error") {
  potl_engine* engine = nullptr;
  potl_status status = potl_engine_create("/no/such/config.json", &engine);
  CHECK((status == POTL_E_IO || status == POTL_E_CONFIG));
  CHECK(engine == nullptr);
}

TEST_CASE("simulate through the C surface") {
  Handle handle;
  REQUIRE(potl_engine_create(fixture_path("demo/config.json").c_str(),
                             &handle.engine) == POTL_OK);
  char* report_raw = nullptr;
  char* csv_raw = nullptr;
  REQUIRE(potl_engine_simulate(handle.engine, 50, nullptr, 1, 5, &report_raw,
                               &csv_raw) == POTL_OK);
  json report = json::parse(take(report_raw));
  CHECK(report["serves"] == 50);
  std::string csv = take(csv_raw);
  CHECK(csv.find("serve,expected,clicks,cumulative_regret") == 0);

  // An unknown forced policy surfaces with its own status.
  CHECK(potl_engine_simulate(handle.engine, 10, "no-such-policy", 1, 5,
                             &report_raw, nullptr) == POTL_E_UNKNOWN_POLICY);
}

TEST_CASE("status names are stable strings") {
  CHECK(std::string(potl_status_name(POTL_OK)) == "ok");
  CHECK(std::string(potl_status_name(POTL_E_INFEASIBLE)) == "infeasible");
  CHECK(std::string(potl_status_name(9999)) == "unknown");
  CHECK(std::string(potl_version()) == "1.0.0");
}
