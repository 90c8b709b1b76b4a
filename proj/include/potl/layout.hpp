#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace potl {

struct PageModel;
struct PageInstance;

enum class LayoutKind { Html, Body, Table, Row, Cell };

struct LayoutNode {
  LayoutKind kind;
  std::optional<std::string> label;
  std::vector<LayoutNode> children;
};

struct LayoutTree {
  LayoutNode root;

  const LayoutNode* at(const std::vector<int>& path) const;
  /// Labeled nodes in document order, paired with their paths.
  std::vector<std::pair<std::string, std::vector<int>>> labeled_nodes() const;
  /// Labeled nodes whose subtree holds no further labeled node.
  std::vector<std::string> leaf_slots() const;
};

struct BindingMap {
  std::map<std::string, std::vector<int>> entries;  // region label -> node path
  std::vector<std::string> unbound_regions;
  std::vector<std::string> unfilled_slots;  // leaf slots left empty
};

/// Parses the layout-HTML skeleton (html/body/table/tr/td with optional
/// label attributes). Throws Error{MalformedDocument} on anything else
/// and Error{DuplicateLabel} on repeated labels.
LayoutTree parse_layout_html(std::string_view text);

/// Structure-only serialization; parse(serialize(parse(x))) == parse(x).
std::string serialize_layout(const LayoutTree& tree);

/// Matches model regions to layout slots by exact label equality after
/// alias substitution. Mismatches are reported, never fatal.
BindingMap bind_regions(const LayoutTree& layout, const PageModel& model,
                        const std::map<std::string, std::string>& alias);

/// Fills every bound slot's cell with the region's rendered fragment
/// wrapped in a div carrying one data-token attribute; unbound slots
/// render empty. Throws Error{MissingFragment} when the instance carries
/// no output for a bound region.
std::string render_html(const LayoutTree& layout, const BindingMap& binding,
                        const PageInstance& instance);

}  // namespace potl
