#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "potl/errors.hpp"
#include "potl/simulator.hpp"
#include "support.hpp"

using namespace potl;
using testsupport::make_choice_model;
using testsupport::make_map_model;
using testsupport::make_pool_registries;
using testsupport::numbered_items;
using testsupport::slope_of;

namespace {

UserModel three_alt_user() {
  UserModel user;
  user.alternative_ctr = {{"alt1", 0.05}, {"alt2", 0.10}, {"alt3", 0.15}};
  return user;
}

// Share of serves in the final `window` that picked `alt`.
double final_share(const SimReport& report, const std::string& alt,
                   std::size_t window) {
  std::size_t start = report.serve_log.size() - window;
  std::size_t hits = 0;
  for (std::size_t i = start; i < report.serve_log.size(); ++i) {
    if (report.serve_log[i].decisions.at("TheChoice") == alt) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(window);
}

}  // namespace

TEST_CASE("oracle_best_choice: argmax with expected clicks") {
  OracleResult best =
      oracle_best_choice(three_alt_user(), {"alt1", "alt2", "alt3"});
  CHECK(best.choice_index == 2);
  CHECK(best.expected_clicks == doctest::Approx(0.15));
}

TEST_CASE("oracle_best_map: enumerated optimum under position bias") {
  UserModel user;
  user.item_ctr = {{"i1", 0.3}, {"i2", 0.2}, {"i3", 0.1}};
  user.position_bias = {1.0, 0.5};
  std::vector<Item> items = numbered_items(3);

  OracleResult best = oracle_best_map(user, items, 2, {});
  REQUIRE(best.assignment.size() == 2);
  CHECK(items[best.assignment[0]].id == "i1");
  CHECK(items[best.assignment[1]].id == "i2");
  CHECK(best.expected_clicks == doctest::Approx(0.3 + 0.2 * 0.5));

  // Pinning i3 to position 1 moves the optimum.
  std::vector<CompiledConstraint> pin = {
      {"pin", compile_constraint("position(\"i3\") = 1")}};
  OracleResult pinned = oracle_best_map(user, items, 2, pin);
  CHECK(items[pinned.assignment[0]].id == "i3");
  CHECK(items[pinned.assignment[1]].id == "i1");
  CHECK(pinned.expected_clicks == doctest::Approx(0.1 + 0.3 * 0.5));
}

TEST_CASE("simulate: a single serve produces a minimal report") {
  PageModel model = make_choice_model(3);
  auto holder = make_pool_registries(numbered_items(2));
  SimOptions options;
  options.serves = 1;
  options.seed = 4;
  SimReport report = simulate(model, holder->view(), three_alt_user(), options);
  CHECK(report.serves == 1);
  CHECK(report.regret.size() == 1);
  CHECK(report.window_ctr.size() == 1);
  CHECK(report.serve_log.size() == 1);
}

TEST_CASE("simulate: uniform policy ignores feedback") {
  PageModel model = make_choice_model(3);
  auto holder = make_pool_registries(numbered_items(2));
  SimOptions options;
  options.serves = 20'000;
  options.seed = 11;
  options.policy_override = "uniform";
  SimReport report = simulate(model, holder->view(), three_alt_user(), options);
  CHECK(std::fabs(final_share(report, "alt3", 2'000) - 1.0 / 3.0) < 0.05);

  // Regret slope approximates 0.15 - mean(ctr) = 0.05 per serve.
  CHECK(slope_of(report.regret) == doctest::Approx(0.05).epsilon(0.10));
}

TEST_CASE("simulate: thompson converges to the best alternative") {
  PageModel model = make_choice_model(3);
  auto holder = make_pool_registries(numbered_items(2));
  SimOptions options;
  options.serves = 20'000;
  options.seed = 11;
  SimReport report = simulate(model, holder->view(), three_alt_user(), options);
  CHECK(final_share(report, "alt3", 2'000) >= 0.85);
  CHECK(report.regret.back() < 0.6 * (0.05 * 20'000));
}

TEST_CASE("simulate: an always-best policy accumulates zero regret") {
  // inorder picks index 0; make alt1 the best alternative.
  PageModel model = make_choice_model(3);
  auto holder = make_pool_registries(numbered_items(2));
  UserModel user;
  user.alternative_ctr = {{"alt1", 0.15}, {"alt2", 0.10}, {"alt3", 0.05}};
  SimOptions options;
  options.serves = 500;
  options.seed = 2;
  options.policy_override = "inorder";
  SimReport report = simulate(model, holder->view(), user, options);
  for (double r : report.regret) CHECK(r == doctest::Approx(0.0));
}

TEST_CASE("regret series is non-decreasing and matches regret_curve") {
  PageModel model = make_choice_model(3);
  auto holder = make_pool_registries(numbered_items(2));
  SimOptions options;
  options.serves = 3'000;
  options.seed = 21;
  SimReport report = simulate(model, holder->view(), three_alt_user(), options);
  std::vector<double> curve = regret_curve(report);
  REQUIRE(curve.size() == report.regret.size());
  double previous = 0.0;
  for (std::size_t i = 0; i < curve.size(); ++i) {
    CHECK(curve[i] == doctest::Approx(report.regret[i]));
    CHECK(curve[i] >= previous - 1e-12);
    previous = curve[i];
  }
}

TEST_CASE("simulate: determinism in report bytes") {
  PageModel model = make_choice_model(3);
  auto holder = make_pool_registries(numbered_items(2));
  SimOptions options;
  options.serves = 2'000;
  options.seed = 33;
  SimReport a = simulate(model, holder->view(), three_alt_user(), options);
  SimReport b = simulate(model, holder->view(), three_alt_user(), options);
  CHECK(a.to_json() == b.to_json());
  CHECK(a.series_csv() == b.series_csv());
}

TEST_CASE("simulate: click conservation against the final arm table") {
  PageModel model = make_choice_model(3);
  auto holder = make_pool_registries(numbered_items(2));
  SimOptions options;
  options.serves = 5'000;
  options.seed = 8;
  SimReport report = simulate(model, holder->view(), three_alt_user(), options);

  std::uint64_t arm_clicks = 0;
  std::uint64_t arm_impressions = 0;
  for (const auto& [key, stats] : report.final_arms) {
    arm_clicks += stats.clicks;
    arm_impressions += stats.impressions;
    CHECK(stats.clicks <= stats.impressions);
  }
  CHECK(arm_clicks == report.total_clicks);
  CHECK(arm_impressions == report.serves);  // one choice decision per serve
}

TEST_CASE("simulate: position bias shapes map learning") {
  PageModel model = make_map_model(2);
  std::vector<Item> items = numbered_items(3);
  auto holder = make_pool_registries(items);
  UserModel user;
  user.item_ctr = {{"i1", 0.3}, {"i2", 0.2}, {"i3", 0.1}};
  user.position_bias = {1.0, 0.5};

  SimOptions options;
  options.serves = 8'000;
  options.seed = 13;
  SimReport report = simulate(model, holder->view(), user, options);

  // The learned mean for the best item at position 1 dominates.
  ArmStats best = report.final_arms[ArmKey{"TheMap", DofKind::Map, "i1", 1}];
  CHECK(best.impressions > 1'000);
  CHECK(ctr(best) == doctest::Approx(0.3).epsilon(0.25));
  CHECK(report.oracle_expected == doctest::Approx(0.4));
}

TEST_CASE("user model: bias indexing clamps to the last entry") {
  UserModel user;
  user.position_bias = {1.0, 0.5};
  CHECK(user.bias(1) == doctest::Approx(1.0));
  CHECK(user.bias(2) == doctest::Approx(0.5));
  CHECK(user.bias(9) == doctest::Approx(0.5));
  UserModel empty;
  CHECK(empty.bias(3) == doctest::Approx(1.0));
}

TEST_CASE("user model JSON: probabilities validated") {
  CHECK_THROWS_AS(parse_user_model_json("{\"item_ctr\": {\"a\": 1.5}}"), Error);
  UserModel user = parse_user_model_json(
      "{\"item_ctr\": {\"a\": 0.5}, \"position_bias\": [1.0, 0.25],"
      " \"alternative_ctr\": {\"x\": 0.1}}");
  CHECK(user.item_ctr.at("a") == doctest::Approx(0.5));
  CHECK(user.position_bias.size() == 2);
}
