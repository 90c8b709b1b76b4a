// End-to-end facade test: spawns `potl serve` and exercises the wire
// contract with an HTTP client. Every behavior checked here is also
// covered through the library API elsewhere; this verifies delegation.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <csignal>
#include <httplib.h>
#include <nlohmann/json.hpp>
#include <spawn.h>
#include <sys/wait.h>
#include <thread>
#include <unistd.h>

#include "potl/util.hpp"
#include "support.hpp"

using nlohmann::json;
using testsupport::TempDir;
using testsupport::fixture_path;

extern char** environ;

namespace {

struct ServerProcess {
  pid_t pid = -1;
  int port = 0;
  std::unique_ptr<httplib::Client> client;

  bool start(const std::string& config_path) {
    port = 18000 + static_cast<int>(getpid() % 4000);
    std::string port_text = std::to_string(port);
    const char* argv[] = {POTL_CLI_PATH, "serve",  "--config",
                          config_path.c_str(),     "--port",
                          port_text.c_str(),       nullptr};
    if (posix_spawn(&pid, POTL_CLI_PATH, nullptr, nullptr,
                    const_cast<char**>(argv), environ) != 0) {
      return false;
    }
    client = std::make_unique<httplib::Client>("127.0.0.1", port);
    client->set_connection_timeout(2, 0);
    client->set_read_timeout(5, 0);
    for (int attempt = 0; attempt < 100; ++attempt) {
      auto res = client->Get("/v1/healthz");
      if (res && res->status == 200) return true;
      std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
    return false;
  }

  ~ServerProcess() {
    if (pid > 0) {
      kill(pid, SIGTERM);
      int status = 0;
      for (int attempt = 0; attempt < 100; ++attempt) {
        if (waitpid(pid, &status, WNOHANG) == pid) return;
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
      }
      kill(pid, SIGKILL);
      waitpid(pid, &status, 0);
    }
  }
};

json post_json(httplib::Client& client, const std::string& path,
               const json& body, int expected_status) {
  auto res = client.Post(path, body.dump(), "application/json");
  REQUIRE(res);
  CHECK(res->status == expected_status);
  return res->body.empty() ? json{} : json::parse(res->body);
}

}  // namespace

TEST_CASE("http facade: the full serve-and-feedback loop") {
  ServerProcess server;
  REQUIRE(server.start(fixture_path("demo/config.json")));
  httplib::Client& client = *server.client;

  // healthz
  auto health = client.Get("/v1/healthz");
  REQUIRE(health);
  CHECK(health->status == 200);
  CHECK(json::parse(health->body)["status"] == "ok");

  // Serve a page; the body is the canonical instance JSON.
  json instance = post_json(client, "/v1/instantiate",
                            {{"request_id", "http-1"}}, 200);
  CHECK(instance.contains("instance_id"));
  CHECK(instance["assignment"].size() == 4);
  CHECK(instance["trace"].size() == 4);

  // Duplicate request ids conflict.
  post_json(client, "/v1/instantiate", {{"request_id", "http-1"}}, 409);

  // Malformed instantiate shape.
  post_json(client, "/v1/instantiate", {{"user_id", "nobody"}}, 400);

  // Click a decision-backed slot.
  std::string token;
  for (const json& slot : instance["slots"]) {
    if (slot.contains("dof") && slot["dof"] == "VerticalChoice") {
      token = slot["token"].get<std::string>();
    }
  }
  REQUIRE_FALSE(token.empty());
  json accepted = post_json(client, "/v1/events",
                            {{"instance_id", instance["instance_id"]},
                             {"token", token},
                             {"type", "click"},
                             {"at", "2026-01-01T12:00:09Z"}},
                            202);
  CHECK(accepted["dead_lettered"] == false);
  CHECK(accepted["updated"].size() == 1);

  // Malformed event shape is a 400, not queued.
  post_json(client, "/v1/events", {{"type", "click"}}, 400);

  // Event for an unknown (or evicted) instance: accepted, dead-lettered.
  auto letters_before = client.Get("/v1/dead_letters");
  REQUIRE(letters_before);
  auto count_before = json::parse(letters_before->body)["count"].get<int>();
  post_json(client, "/v1/events",
            {{"instance_id", "gone"},
             {"type", "click"},
             {"token", "t"},
             {"at", "2026-01-01T12:00:10Z"}},
            202);
  auto letters_after = client.Get("/v1/dead_letters");
  REQUIRE(letters_after);
  CHECK(json::parse(letters_after->body)["count"].get<int>() ==
        count_before + 1);

  // Serve a few more pages, then read per-DoF stats.
  for (int i = 2; i <= 10; ++i) {
    post_json(client, "/v1/instantiate",
              {{"request_id", "http-" + std::to_string(i)}}, 200);
  }
  auto stats = client.Get("/v1/stats/VerticalChoice");
  REQUIRE(stats);
  CHECK(stats->status == 200);
  json table = json::parse(stats->body);
  std::uint64_t impressions = 0;
  std::uint64_t clicks = 0;
  for (auto it = table["arms"].begin(); it != table["arms"].end(); ++it) {
    impressions += it.value()["impressions"].get<std::uint64_t>();
    clicks += it.value()["clicks"].get<std::uint64_t>();
  }
  CHECK(impressions == 10);  // one choice decision per serve
  CHECK(clicks == 1);

  // Unknown routes are 404s.
  auto missing = client.Get("/v1/nope");
  REQUIRE(missing);
  CHECK(missing->status == 404);

  // Wrong content type is rejected.
  auto wrong = client.Post("/v1/events", "instance_id=x", "text/plain");
  REQUIRE(wrong);
  CHECK(wrong->status == 400);
}
