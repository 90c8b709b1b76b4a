#include "potl/layout.hpp"

#include <functional>
#include <set>

#include "potl/engine.hpp"
#include "potl/errors.hpp"
#include "potl/model.hpp"
#include "potl/util.hpp"
#include "potl/xml.hpp"

namespace potl {

namespace {

const char* tag_of(LayoutKind kind) {
  switch (kind) {
    case LayoutKind::Html: return "html";
    case LayoutKind::Body: return "body";
    case LayoutKind::Table: return "table";
    case LayoutKind::Row: return "tr";
    case LayoutKind::Cell: return "td";
  }
  return "?";
}

LayoutKind kind_of(const std::string& name, std::size_t line) {
  if (name == "html") return LayoutKind::Html;
  if (name == "body") return LayoutKind::Body;
  if (name == "table") return LayoutKind::Table;
  if (name == "tr") return LayoutKind::Row;
  if (name == "td") return LayoutKind::Cell;
  raise(ErrorCode::MalformedDocument,
        "unsupported element <" + name + "> at line " + std::to_string(line) +
            " (layout skeletons use html/body/table/tr/td only)");
}

LayoutNode convert(const xml::Node& node, std::set<std::string>& labels) {
  LayoutNode out;
  out.kind = kind_of(node.name, node.line);
  for (const auto& [key, value] : node.attributes) {
    if (key == "label") {
      if (!labels.insert(value).second) {
        raise(ErrorCode::DuplicateLabel, "duplicate label '" + value + "'");
      }
      out.label = value;
    }
    // Other attributes are presentation noise and carried nowhere.
  }
  for (const xml::Node& child : node.children) {
    out.children.push_back(convert(child, labels));
  }
  return out;
}

void walk(const LayoutNode& node, std::vector<int>& path,
          const std::function<void(const LayoutNode&, const std::vector<int>&)>&
              visit) {
  visit(node, path);
  for (std::size_t i = 0; i < node.children.size(); ++i) {
    path.push_back(static_cast<int>(i));
    walk(node.children[i], path, visit);
    path.pop_back();
  }
}

bool subtree_has_label(const LayoutNode& node) {
  for (const LayoutNode& child : node.children) {
    if (child.label || subtree_has_label(child)) return true;
  }
  return false;
}

void serialize_node(const LayoutNode& node, std::string& out, int depth) {
  out.append(static_cast<std::size_t>(depth), ' ');
  out += '<';
  out += tag_of(node.kind);
  if (node.label) {
    out += " label=\"";
    out += *node.label;
    out += '"';
  }
  if (node.children.empty()) {
    out += " />\n";
    return;
  }
  out += ">\n";
  for (const LayoutNode& child : node.children) {
    serialize_node(child, out, depth + 1);
  }
  out.append(static_cast<std::size_t>(depth), ' ');
  out += "</";
  out += tag_of(node.kind);
  out += ">\n";
}

}  // namespace

const LayoutNode* LayoutTree::at(const std::vector<int>& path) const {
  const LayoutNode* node = &root;
  for (int index : path) {
    if (index < 0 || static_cast<std::size_t>(index) >= node->children.size()) {
      return nullptr;
    }
    node = &node->children[static_cast<std::size_t>(index)];
  }
  return node;
}

std::vector<std::pair<std::string, std::vector<int>>> LayoutTree::labeled_nodes()
    const {
  std::vector<std::pair<std::string, std::vector<int>>> out;
  std::vector<int> path;
  walk(root, path, [&](const LayoutNode& node, const std::vector<int>& p) {
    if (node.label) out.emplace_back(*node.label, p);
  });
  return out;
}

std::vector<std::string> LayoutTree::leaf_slots() const {
  std::vector<std::string> out;
  std::vector<int> path;
  walk(root, path, [&](const LayoutNode& node, const std::vector<int>&) {
    if (node.label && !subtree_has_label(node)) out.push_back(*node.label);
  });
  return out;
}

LayoutTree parse_layout_html(std::string_view text) {
  xml::Node root = xml::parse(text);
  std::set<std::string> labels;
  LayoutTree tree{convert(root, labels)};
  if (tree.root.kind == LayoutKind::Cell || tree.root.kind == LayoutKind::Row) {
    raise(ErrorCode::MalformedDocument,
          "layout root must be a container element");
  }
  return tree;
}

std::string serialize_layout(const LayoutTree& tree) {
  std::string out;
  serialize_node(tree.root, out, 0);
  return out;
}

BindingMap bind_regions(const LayoutTree& layout, const PageModel& model,
                        const std::map<std::string, std::string>& alias) {
  BindingMap binding;
  std::map<std::string, std::vector<int>> by_label;
  for (auto& [label, path] : layout.labeled_nodes()) {
    by_label.emplace(label, path);
  }
  std::set<std::string> bound_labels;
  for (const RegionNode& region : model.regions) {
    std::string target = region.label;
    if (auto it = alias.find(region.label); it != alias.end()) {
      target = it->second;
    }
    auto slot = by_label.find(target);
    if (slot == by_label.end()) {
      binding.unbound_regions.push_back(region.label);
    } else {
      binding.entries[region.label] = slot->second;
      bound_labels.insert(target);
    }
  }
  for (const std::string& label : layout.leaf_slots()) {
    if (!bound_labels.count(label)) binding.unfilled_slots.push_back(label);
  }
  return binding;
}

std::string render_html(const LayoutTree& layout, const BindingMap& binding,
                        const PageInstance& instance) {
  // Slot fragments grouped under their hosting region, serve order kept.
  std::map<std::string, std::vector<const SlotEntry*>> by_region;
  for (const SlotEntry& slot : instance.slots) {
    by_region[slot.host_region].push_back(&slot);
  }

  std::map<const LayoutNode*, const std::string*> fill;  // node -> region label
  for (const auto& [region, path] : binding.entries) {
    const LayoutNode* node = layout.at(path);
    if (!node) continue;
    auto slots = by_region.find(region);
    if (slots == by_region.end() || slots->second.empty()) {
      raise(ErrorCode::MissingFragment,
            "instance carries no fragment for bound region '" + region + "'");
    }
    fill[node] = &region;
  }

  std::string out;
  std::function<void(const LayoutNode&, int)> emit = [&](const LayoutNode& node,
                                                         int depth) {
    out.append(static_cast<std::size_t>(depth), ' ');
    out += '<';
    out += tag_of(node.kind);
    if (node.label) {
      out += " label=\"";
      out += *node.label;
      out += '"';
    }
    auto filled = fill.find(&node);
    if (node.children.empty() && filled == fill.end()) {
      out += " />\n";
      return;
    }
    out += ">\n";
    if (filled != fill.end()) {
      const auto& slots = by_region.at(*filled->second);
      // One instrumentation token per bound slot: the cell's wrapper div
      // carries the region's lead token.
      out.append(static_cast<std::size_t>(depth + 1), ' ');
      out += "<div data-token=\"" + slots.front()->token + "\">";
      for (const SlotEntry* slot : slots) {
        out += slot->fragment;
      }
      out += "</div>\n";
    }
    for (const LayoutNode& child : node.children) {
      emit(child, depth + 1);
    }
    out.append(static_cast<std::size_t>(depth), ' ');
    out += "</";
    out += tag_of(node.kind);
    out += ">\n";
  };
  emit(layout.root, 0);
  return out;
}

}  // namespace potl
