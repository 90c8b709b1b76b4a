#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <functional>
#include <set>

#include "potl/engine.hpp"
#include "potl/errors.hpp"
#include "potl/layout.hpp"
#include "potl/model.hpp"
#include "support.hpp"

using namespace potl;
using testsupport::read_fixture;

namespace {

const LayoutTree& skeleton() {
  static LayoutTree tree = parse_layout_html(read_fixture("layout.html"));
  return tree;
}

const PageModel& mainpage() {
  static PageModel model = parse_potl(read_fixture("mainpage.potl"));
  return model;
}

// Independent oracle: walk the tree by hand collecting labeled nodes
// whose subtrees hold no further labeled node.
void collect_leaf_slots(const LayoutNode& node, std::vector<std::string>& out) {
  std::function<bool(const LayoutNode&)> has_labeled_descendant =
      [&](const LayoutNode& n) {
        for (const LayoutNode& child : n.children) {
          if (child.label || has_labeled_descendant(child)) return true;
        }
        return false;
      };
  if (node.label && !has_labeled_descendant(node)) out.push_back(*node.label);
  for (const LayoutNode& child : node.children) {
    collect_leaf_slots(child, out);
  }
}

const std::map<std::string, std::string>& appendix_alias() {
  static const std::map<std::string, std::string> alias = {
      {"YahooHeader", "header"},
      {"YahooSitesRegion", "westRegtion"},
      {"TodayRegion", "centerUpRegion"},
      {"TrendingNowRegion", "centerButtomRegion"},
      {"DisplayAds", "East1Region"},
      {"VeritcalHeadlines", "East2Region"},
      {"LatestVideo", "East3Region"},
      {"YahooVertical", "East4Region"},
  };
  return alias;
}

}  // namespace

TEST_CASE("layout fixture: twelve labeled nodes, verbatim spellings") {
  std::set<std::string> labels;
  for (const auto& [label, path] : skeleton().labeled_nodes()) {
    labels.insert(label);
  }
  CHECK(labels == std::set<std::string>{
                      "layout", "header", "body", "westRegtion",
                      "centerRegtion", "centerUpRegion", "centerButtomRegion",
                      "eastRegtion", "East1Region", "East2Region",
                      "East3Region", "East4Region"});
  CHECK(labels.size() == 12);
}

TEST_CASE("layout fixture: eight leaf placement slots (brute-force oracle)") {
  std::vector<std::string> oracle;
  collect_leaf_slots(skeleton().root, oracle);
  std::vector<std::string> expected = {
      "header",      "westRegtion", "centerUpRegion", "centerButtomRegion",
      "East1Region", "East2Region", "East3Region",    "East4Region"};
  CHECK(oracle == expected);
  CHECK(skeleton().leaf_slots() == oracle);
}

TEST_CASE("parse_layout_html: trivial two-label document") {
  LayoutTree tree = parse_layout_html(
      "<html><body><table label=\"layout\"><tr label=\"a\"/></table>"
      "</body></html>");
  CHECK(tree.labeled_nodes().size() == 2);
}

TEST_CASE("parse_layout_html: duplicate label and unsupported element") {
  try {
    parse_layout_html("<html><body><table label=\"x\"><tr label=\"x\"/>"
                      "</table></body></html>");
    FAIL("expected DuplicateLabel");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DuplicateLabel);
  }
  try {
    parse_layout_html("<html><body><div label=\"x\"/></body></html>");
    FAIL("expected MalformedDocument");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MalformedDocument);
  }
}

TEST_CASE("parse/serialize round-trip is idempotent at the tree level") {
  std::string text = read_fixture("layout.html");
  LayoutTree once = parse_layout_html(text);
  LayoutTree twice = parse_layout_html(serialize_layout(once));
  CHECK(serialize_layout(once) == serialize_layout(twice));
}

TEST_CASE("bind_regions: empty alias leaves all eight regions unbound") {
  BindingMap binding = bind_regions(skeleton(), mainpage(), {});
  CHECK(binding.entries.empty());
  CHECK(binding.unbound_regions.size() == 8);
  CHECK(binding.unfilled_slots.size() == 8);
  CHECK(binding.entries.size() + binding.unbound_regions.size() ==
        mainpage().regions.size());
}

TEST_CASE("bind_regions: the appendix alias binds everything") {
  BindingMap binding = bind_regions(skeleton(), mainpage(), appendix_alias());
  CHECK(binding.entries.size() == 8);
  CHECK(binding.unbound_regions.empty());
  CHECK(binding.unfilled_slots.empty());

  const LayoutNode* node = skeleton().at(binding.entries.at("TodayRegion"));
  REQUIRE(node);
  REQUIRE(node->label);
  CHECK(*node->label == "centerUpRegion");
}

TEST_CASE("bind_regions: identical label sets bind bijectively") {
  PageModel model = parse_potl(
      "<layout label=\"L\"><region label=\"header\"><module label=\"M\">"
      "<source label=\"S\"><apl:operator id=\"o\" handler=\"h\"/></source>"
      "<renderer label=\"rr\"/></module></region></layout>");
  BindingMap binding = bind_regions(skeleton(), model, {});
  CHECK(binding.entries.size() == 1);
  CHECK(binding.unbound_regions.empty());
}

TEST_CASE("render_html: empty binding renders the bare skeleton") {
  PageInstance instance;
  instance.instance_id = "deadbeef";
  std::string html = render_html(skeleton(), BindingMap{}, instance);
  CHECK(html.find("data-token") == std::string::npos);
  CHECK(html.find("<table label=\"layout\">") != std::string::npos);
}

TEST_CASE("render_html: one bound region yields exactly one filled cell") {
  PageModel model = parse_potl(
      "<layout label=\"L\"><region label=\"header\"><module label=\"M\">"
      "<source label=\"S\"><apl:operator id=\"o\" handler=\"h\"/></source>"
      "<renderer label=\"rr\"/></module></region></layout>");
  BindingMap binding = bind_regions(skeleton(), model, {});

  PageInstance instance;
  instance.instance_id = "deadbeef";
  SlotEntry slot;
  slot.region = "header";
  slot.host_region = "header";
  slot.token = "tok-1";
  slot.fragment = "<span>hello</span>";
  instance.slots.push_back(slot);

  std::string html = render_html(skeleton(), binding, instance);
  std::size_t count = 0;
  std::size_t at = 0;
  while ((at = html.find("data-token", at)) != std::string::npos) {
    ++count;
    at += 10;
  }
  CHECK(count == 1);
  CHECK(html.find("data-token=\"tok-1\"") != std::string::npos);
  CHECK(html.find("<span>hello</span>") != std::string::npos);
}

TEST_CASE("render_html: bound region without a fragment is an error") {
  PageModel model = parse_potl(
      "<layout label=\"L\"><region label=\"header\"><module label=\"M\">"
      "<source label=\"S\"><apl:operator id=\"o\" handler=\"h\"/></source>"
      "<renderer label=\"rr\"/></module></region></layout>");
  BindingMap binding = bind_regions(skeleton(), model, {});
  PageInstance instance;  // no slots at all
  try {
    render_html(skeleton(), binding, instance);
    FAIL("expected MissingFragment");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingFragment);
  }
}
