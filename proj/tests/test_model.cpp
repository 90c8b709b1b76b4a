#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "potl/errors.hpp"
#include "potl/model.hpp"
#include "support.hpp"

using namespace potl;
using testsupport::read_fixture;

namespace {

const PageModel& mainpage() {
  static PageModel model = parse_potl(read_fixture("mainpage.potl"));
  return model;
}

const MapDoF* find_map(const PageModel& model, const std::string& id) {
  for (const DofRef& dof : enumerate_dofs(model)) {
    if (dof.id == id && dof.kind == DofKind::Map) return dof.map;
  }
  return nullptr;
}

const ChoiceDoF* find_choice(const PageModel& model, const std::string& id) {
  for (const DofRef& dof : enumerate_dofs(model)) {
    if (dof.id == id && dof.kind == DofKind::Choice) return dof.choice;
  }
  return nullptr;
}

constexpr const char* kMinimalDoc =
    "<layout label=\"L\"><region label=\"R\"><module label=\"M\">"
    "<source label=\"S\"><apl:operator id=\"o\" handler=\"h\"/></source>"
    "<renderer label=\"rr\"/></module></region></layout>";

}  // namespace

TEST_CASE("mainpage fixture: eight top-level regions in document order") {
  const PageModel& model = mainpage();
  std::vector<std::string> labels;
  for (const RegionNode& region : model.regions) labels.push_back(region.label);
  CHECK(labels == std::vector<std::string>{
                      "YahooHeader", "YahooSitesRegion", "TodayRegion",
                      "TrendingNowRegion", "DisplayAds", "VeritcalHeadlines",
                      "LatestVideo", "YahooVertical"});
  CHECK(model.layout_label == "MainPage");
}

TEST_CASE("mainpage fixture: the three maps and their parameters") {
  const PageModel& model = mainpage();

  const MapDoF* sites = find_map(model, "YahooSiteMap");
  REQUIRE(sites);
  CHECK(sites->positions() == 18);
  CHECK(sites->position_count == 18);
  CHECK(sites->pool_size_hint == 30);
  CHECK(sites->position_regions.empty());
  CHECK(sites->handler == "SiteSelectorSearcherChain");
  CHECK(sites->item_source.handler == "YahooSiteSearcherChain");

  const MapDoF* today = find_map(model, "TodayMap");
  REQUIRE(today);
  CHECK(today->positions() == 4);
  CHECK_FALSE(today->position_count.has_value());
  CHECK_FALSE(today->pool_size_hint.has_value());
  CHECK(today->position_ids() ==
        std::vector<std::string>{"news1", "news2", "news3", "news4"});
  // Position-slot regions carry their markers and no modules.
  for (const RegionNode& slot : today->position_regions) {
    CHECK(slot.position_marker.has_value());
    CHECK(slot.modules.empty());
  }

  const MapDoF* trending = find_map(model, "TrendingNowMap");
  REQUIRE(trending);
  CHECK(trending->positions() == 10);
  CHECK(trending->pool_size_hint == 300);
}

TEST_CASE("mainpage fixture: one choice with three verticals") {
  const ChoiceDoF* choice = find_choice(mainpage(), "ImageColorChoice");
  REQUIRE(choice);
  REQUIRE(choice->alternatives.size() == 3);
  std::vector<std::string> verticals;
  for (const ChoiceAlternative& alt : choice->alternatives) {
    const OperatorDef* op = alt.operator_body();
    REQUIRE(op);
    const std::string* vertical = op->property("verticalId");
    REQUIRE(vertical);
    verticals.push_back(*vertical);
  }
  CHECK(verticals == std::vector<std::string>{"cars", "jobs", "games"});
}

TEST_CASE("mainpage fixture: eight constraints grouped 3/3/2") {
  const PageModel& model = mainpage();
  CHECK(model.root_constraints.empty());
  std::map<std::string, std::size_t> per_scope;
  std::size_t total = 0;
  for (const RegionNode& region : model.regions) {
    for (const ModuleDef& module : region.modules) {
      per_scope[region.label] = module.source.constraints.size();
      total += module.source.constraints.size();
    }
  }
  CHECK(total == 8);
  CHECK(per_scope["YahooSitesRegion"] == 3);
  CHECK(per_scope["TodayRegion"] == 3);
  CHECK(per_scope["TrendingNowRegion"] == 2);
}

TEST_CASE("parse_potl: minimal schema-valid document") {
  PageModel model = parse_potl(kMinimalDoc);
  CHECK(model.regions.size() == 1);
  CHECK(enumerate_dofs(model).empty());
  CHECK(model.root_constraints.empty());
}

TEST_CASE("parse_potl is deterministic: equal digests, equal dumps") {
  std::string text = read_fixture("mainpage.potl");
  PageModel a = parse_potl(text);
  PageModel b = parse_potl(text);
  CHECK(a.source_digest == b.source_digest);
  CHECK(dump_model_json(a) == dump_model_json(b));
}

TEST_CASE("parse_potl: malformed and schema-violating documents") {
  try {
    parse_potl("<layout label=\"L\">");
    FAIL("expected MalformedDocument");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MalformedDocument);
  }

  try {
    parse_potl("<region label=\"R\"/>");
    FAIL("expected SchemaViolation");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SchemaViolation);
  }

  // A choice needs at least two alternatives.
  std::string one_alt =
      "<layout label=\"L\"><region label=\"R\"><module label=\"M\">"
      "<source label=\"S\"><apl:choice id=\"c\">"
      "<apl:alternative id=\"a\"><apl:operator id=\"o\" handler=\"h\"/>"
      "</apl:alternative></apl:choice></source>"
      "<renderer label=\"rr\"/></module></region></layout>";
  try {
    parse_potl(one_alt);
    FAIL("expected SchemaViolation");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SchemaViolation);
    CHECK(std::string(e.what()).find("2 alternatives") != std::string::npos);
  }

  // Duplicate ids are rejected with the document path.
  std::string dup_id =
      "<layout label=\"L\"><region label=\"R\"><module label=\"M\">"
      "<source label=\"S\"><apl:operator id=\"o\" handler=\"h\"/>"
      "</source><renderer label=\"rr\"/></module></region>"
      "<region label=\"R2\"><module label=\"M2\"><source label=\"S2\">"
      "<apl:operator id=\"o\" handler=\"h\"/></source>"
      "<renderer label=\"rr2\"/></module></region></layout>";
  try {
    parse_potl(dup_id);
    FAIL("expected SchemaViolation");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SchemaViolation);
    CHECK(std::string(e.what()).find("duplicate id 'o'") != std::string::npos);
  }
}

TEST_CASE("parse_potl: unknown elements become warnings, not silent drops") {
  std::string doc =
      "<layout label=\"L\"><region label=\"R\"><module label=\"M\">"
      "<source label=\"S\"><apl:operator id=\"o\" handler=\"h\">"
      "<proprty key=\"x\" value=\"y\"/></apl:operator></source>"
      "<renderer label=\"rr\"/></module></region></layout>";
  PageModel model = parse_potl(doc);
  REQUIRE(model.warnings.size() == 1);
  CHECK(model.warnings[0].message.find("proprty") != std::string::npos);
}

TEST_CASE("validate_model: fixture validates clean") {
  ValidationReport report = validate_model(mainpage());
  CHECK(report.ok());
  CHECK(report.error_count() == 0);
}

TEST_CASE("validate_model: duplicate labels are listed, not thrown") {
  PageModel model = parse_potl(kMinimalDoc);

  // Duplicate label, built by hand (the parser would reject the text).
  RegionNode copy;
  copy.label = "R";
  copy.position_marker = "p";
  model.regions.push_back(copy);
  ValidationReport report = validate_model(model);
  CHECK_FALSE(report.ok());
  bool found = false;
  for (const auto& issue : report.issues) {
    if (issue.message.find("duplicate label 'R'") != std::string::npos) {
      found = true;
      CHECK(issue.path == "L");
    }
  }
  CHECK(found);
}

TEST_CASE("validate_model: map with zero positions") {
  PageModel model = parse_potl(kMinimalDoc);
  MapDoF map;
  map.id = "m";
  map.handler = "h";
  map.item_source = OperatorDef{"o2", "h", {}};
  map.position_count = 0;
  model.regions[0].modules[0].source.body = map;
  ValidationReport report = validate_model(model);
  CHECK_FALSE(report.ok());
  bool found = false;
  for (const auto& issue : report.issues) {
    if (issue.message.find("positions must be >= 1") != std::string::npos) {
      found = true;
    }
  }
  CHECK(found);
}

TEST_CASE("validate_model: non-compiling constraint is an error at its path") {
  PageModel model = parse_potl(kMinimalDoc);
  model.regions[0].modules[0].source.constraints.push_back(
      {"bad", "count(", "L/R/M/S"});
  ValidationReport report = validate_model(model);
  CHECK_FALSE(report.ok());
  bool found = false;
  for (const auto& issue : report.issues) {
    if (issue.message.find("does not compile") != std::string::npos) {
      found = true;
      CHECK(issue.path == "L/R/M/S/bad");
    }
  }
  CHECK(found);
}

TEST_CASE("enumerate_dofs: fixture order is document order") {
  std::vector<std::string> ids;
  for (const DofRef& dof : enumerate_dofs(mainpage())) ids.push_back(dof.id);
  CHECK(ids == std::vector<std::string>{"YahooSiteMap", "TodayMap",
                                        "TrendingNowMap", "ImageColorChoice"});
}

TEST_CASE("enumerate_dofs: map before later choice, and count matches markup") {
  std::string doc =
      "<layout label=\"L\">"
      "<region label=\"A\"><module label=\"MA\"><source label=\"SA\">"
      "<apl:map id=\"m1\" handler=\"p\"><apl:operator id=\"o1\" handler=\"h\">"
      "<property key=\"number of regions\" value=\"2\"/></apl:operator>"
      "</apl:map></source><renderer label=\"ra\"/></module></region>"
      "<region label=\"B\"><module label=\"MB\"><source label=\"SB\">"
      "<apl:choice id=\"c1\">"
      "<apl:alternative id=\"a1\"><apl:operator id=\"o2\" handler=\"h\"/>"
      "</apl:alternative>"
      "<apl:alternative id=\"a2\"><apl:operator id=\"o3\" handler=\"h\"/>"
      "</apl:alternative></apl:choice></source>"
      "<renderer label=\"rb\"/></module></region></layout>";
  std::vector<DofRef> dofs = enumerate_dofs(parse_potl(doc));
  REQUIRE(dofs.size() == 2);
  CHECK(dofs[0].id == "m1");
  CHECK(dofs[1].id == "c1");

  // Length equals the number of apl:map plus apl:choice elements.
  std::string fixture = read_fixture("mainpage.potl");
  std::size_t markup_count = 0;
  for (std::string_view needle : {"<apl:map ", "<apl:choice "}) {
    std::size_t at = 0;
    while ((at = fixture.find(needle, at)) != std::string::npos) {
      ++markup_count;
      at += needle.size();
    }
  }
  CHECK(enumerate_dofs(mainpage()).size() == markup_count);
}

TEST_CASE("enumerate_dofs: nested map inside a choice alternative") {
  std::string doc =
      "<layout label=\"L\"><region label=\"R\"><module label=\"M\">"
      "<source label=\"S\"><apl:choice id=\"c\">"
      "<apl:alternative id=\"a1\">"
      "<apl:map id=\"inner\" handler=\"p\">"
      "<apl:operator id=\"oi\" handler=\"h\">"
      "<property key=\"number of regions\" value=\"2\"/></apl:operator>"
      "</apl:map></apl:alternative>"
      "<apl:alternative id=\"a2\"><apl:operator id=\"o2\" handler=\"h\"/>"
      "</apl:alternative></apl:choice></source>"
      "<renderer label=\"rr\"/></module></region></layout>";
  std::vector<DofRef> dofs = enumerate_dofs(parse_potl(doc));
  REQUIRE(dofs.size() == 2);
  CHECK(dofs[0].id == "c");
  CHECK(dofs[1].id == "inner");
  CHECK(dofs[1].ancestor_choices == std::vector<std::string>{"c"});
}

TEST_CASE("constraints_in_scope: root declarations precede source ones") {
  std::string doc =
      "<layout label=\"L\">"
      "<apl:constraint id=\"root1\"><![CDATA[1 = 1]]></apl:constraint>"
      "<region label=\"R\"><module label=\"M\"><source label=\"S\">"
      "<apl:map id=\"m\" handler=\"p\"><apl:operator id=\"o\" handler=\"h\">"
      "<property key=\"number of regions\" value=\"1\"/></apl:operator>"
      "</apl:map>"
      "<apl:constraint id=\"own\"><![CDATA[2 = 2]]></apl:constraint>"
      "</source><renderer label=\"rr\"/></module></region></layout>";
  PageModel model = parse_potl(doc);
  REQUIRE(model.root_constraints.size() == 1);
  std::vector<DofRef> dofs = enumerate_dofs(model);
  REQUIRE(dofs.size() == 1);
  std::vector<ConstraintDecl> scoped = constraints_in_scope(model, dofs[0]);
  REQUIRE(scoped.size() == 2);
  CHECK(scoped[0].id == "root1");
  CHECK(scoped[1].id == "own");
}
