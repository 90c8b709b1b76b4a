#include "potl/model.hpp"

#include <functional>
#include <nlohmann/json.hpp>
#include <set>

#include "potl/constraints.hpp"
#include "potl/errors.hpp"
#include "potl/util.hpp"
#include "potl/xml.hpp"

namespace potl {

namespace {

using nlohmann::json;

// Collects document-wide uniqueness state and warnings during the walk.
struct ParseState {
  std::set<std::string> ids;
  std::set<std::string> labels;
  std::vector<ParseWarning>* warnings;

  void claim_id(const std::string& id, const std::string& path) {
    if (id.empty()) {
      raise(ErrorCode::SchemaViolation, "empty id", path);
    }
    if (!ids.insert(id).second) {
      raise(ErrorCode::SchemaViolation, "duplicate id '" + id + "'", path);
    }
  }
  void claim_label(const std::string& label, const std::string& path) {
    if (label.empty()) {
      raise(ErrorCode::SchemaViolation, "empty label", path);
    }
    if (!labels.insert(label).second) {
      raise(ErrorCode::SchemaViolation, "duplicate label '" + label + "'",
            path);
    }
  }
  void warn(const std::string& path, std::string message) {
    warnings->push_back({path, std::move(message)});
  }
  void warn_unknown_attrs(const xml::Node& node, const std::string& path,
                          std::initializer_list<std::string_view> known) {
    for (const auto& [key, _] : node.attributes) {
      bool found = false;
      for (auto k : known) {
        if (key == k) { found = true; break; }
      }
      if (!found) {
        warn(path, "unknown attribute '" + key + "' on <" + node.name + ">");
      }
    }
  }
};

std::string join_path(const std::string& base, const std::string& leaf) {
  return base.empty() ? leaf : base + "/" + leaf;
}

std::string require_attr(const xml::Node& node, std::string_view key,
                         const std::string& path) {
  const std::string* value = node.attribute(key);
  if (!value) {
    raise(ErrorCode::SchemaViolation,
          "<" + node.name + "> missing attribute '" + std::string(key) + "'",
          path);
  }
  return *value;
}

OperatorDef parse_operator(const xml::Node& node, const std::string& path,
                           ParseState& state) {
  OperatorDef op;
  op.id = require_attr(node, "id", path);
  std::string op_path = join_path(path, op.id);
  state.claim_id(op.id, path);
  op.handler = require_attr(node, "handler", op_path);
  if (op.handler.empty()) {
    raise(ErrorCode::SchemaViolation, "empty handler", op_path);
  }
  state.warn_unknown_attrs(node, op_path, {"id", "handler"});
  std::set<std::string> keys;
  for (const auto& child : node.children) {
    if (child.name == "property") {
      std::string key = require_attr(child, "key", op_path);
      if (!keys.insert(key).second) {
        raise(ErrorCode::SchemaViolation,
              "duplicate property key '" + key + "'", op_path);
      }
      op.properties.emplace_back(key, require_attr(child, "value", op_path));
    } else {
      state.warn(op_path, "unknown element <" + child.name + "> in operator");
    }
  }
  return op;
}

RegionNode parse_position_region(const xml::Node& node, const std::string& path,
                                 ParseState& state) {
  RegionNode region;
  region.label = require_attr(node, "label", path);
  std::string region_path = join_path(path, region.label);
  state.claim_label(region.label, path);
  for (const auto& child : node.children) {
    if (child.name == "apl:position") {
      if (region.position_marker) {
        raise(ErrorCode::SchemaViolation, "multiple apl:position markers",
              region_path);
      }
      std::string id = require_attr(child, "id", region_path);
      state.claim_id(id, region_path);
      region.position_marker = id;
    } else if (child.name == "module") {
      raise(ErrorCode::SchemaViolation,
            "position-slot region cannot hold modules", region_path);
    } else {
      state.warn(region_path,
                 "unknown element <" + child.name + "> in position region");
    }
  }
  if (!region.position_marker) {
    raise(ErrorCode::SchemaViolation,
          "region inside a map must declare an apl:position", region_path);
  }
  return region;
}

MapDoF parse_map(const xml::Node& node, const std::string& path,
                 ParseState& state) {
  MapDoF map;
  map.id = require_attr(node, "id", path);
  std::string map_path = join_path(path, map.id);
  state.claim_id(map.id, path);
  map.handler = require_attr(node, "handler", map_path);
  state.warn_unknown_attrs(node, map_path, {"id", "handler"});

  bool have_operator = false;
  for (const auto& child : node.children) {
    if (child.name == "apl:operator") {
      if (have_operator) {
        raise(ErrorCode::SchemaViolation, "map holds multiple operators",
              map_path);
      }
      map.item_source = parse_operator(child, map_path, state);
      have_operator = true;
    } else if (child.name == "region") {
      map.position_regions.push_back(
          parse_position_region(child, map_path, state));
    } else {
      state.warn(map_path, "unknown element <" + child.name + "> in map");
    }
  }
  if (!have_operator) {
    raise(ErrorCode::SchemaViolation, "map missing its item-source operator",
          map_path);
  }

  if (auto n = map.item_source.int_property("number of regions")) {
    map.position_count = static_cast<int>(*n);
  }
  if (auto n = map.item_source.int_property("number of items")) {
    map.pool_size_hint = static_cast<int>(*n);
  }
  if (auto n = map.item_source.int_property("columns")) {
    map.columns = static_cast<int>(*n);
  }

  if (!map.position_regions.empty() && map.position_count) {
    raise(ErrorCode::SchemaViolation,
          "explicit positions and 'number of regions' are mutually exclusive",
          map_path);
  }
  if (map.positions() < 1) {
    raise(ErrorCode::SchemaViolation, "positions must be >= 1", map_path);
  }
  return map;
}

ChoiceDoF parse_choice(const xml::Node& node, const std::string& path,
                       ParseState& state) {
  ChoiceDoF choice;
  choice.id = require_attr(node, "id", path);
  std::string choice_path = join_path(path, choice.id);
  state.claim_id(choice.id, path);
  if (const std::string* handler = node.attribute("handler")) {
    choice.handler = *handler;
  }
  state.warn_unknown_attrs(node, choice_path, {"id", "handler"});

  std::set<std::string> alt_ids;
  for (const auto& child : node.children) {
    if (child.name != "apl:alternative") {
      state.warn(choice_path,
                 "unknown element <" + child.name + "> in choice");
      continue;
    }
    ChoiceAlternative alt;
    alt.id = require_attr(child, "id", choice_path);
    std::string alt_path = join_path(choice_path, alt.id);
    state.claim_id(alt.id, choice_path);
    if (!alt_ids.insert(alt.id).second) {
      raise(ErrorCode::SchemaViolation, "duplicate alternative id", alt_path);
    }
    bool have_body = false;
    for (const auto& inner : child.children) {
      if (inner.name == "apl:operator") {
        if (have_body) {
          raise(ErrorCode::SchemaViolation,
                "alternative holds multiple bodies", alt_path);
        }
        alt.body = parse_operator(inner, alt_path, state);
        have_body = true;
      } else if (inner.name == "apl:map") {
        if (have_body) {
          raise(ErrorCode::SchemaViolation,
                "alternative holds multiple bodies", alt_path);
        }
        alt.body = parse_map(inner, alt_path, state);
        have_body = true;
      } else {
        state.warn(alt_path,
                   "unknown element <" + inner.name + "> in alternative");
      }
    }
    if (!have_body) {
      raise(ErrorCode::SchemaViolation, "alternative missing its body",
            alt_path);
    }
    choice.alternatives.push_back(std::move(alt));
  }
  if (choice.alternatives.size() < 2) {
    raise(ErrorCode::SchemaViolation, "choice needs at least 2 alternatives",
          choice_path);
  }
  return choice;
}

ConstraintDecl parse_constraint(const xml::Node& node, const std::string& scope,
                                ParseState& state) {
  ConstraintDecl decl;
  decl.id = require_attr(node, "id", scope);
  state.claim_id(decl.id, scope);
  decl.expression_text = trim(node.text);
  decl.scope_path = scope;
  if (decl.expression_text.empty()) {
    raise(ErrorCode::SchemaViolation, "constraint body is empty",
          join_path(scope, decl.id));
  }
  return decl;
}

SourceDef parse_source(const xml::Node& node, const std::string& path,
                       ParseState& state) {
  SourceDef source;
  source.label = require_attr(node, "label", path);
  std::string source_path = join_path(path, source.label);
  state.claim_label(source.label, path);

  bool have_body = false;
  auto body_from = [&](const xml::Node& child) {
    if (have_body) {
      raise(ErrorCode::SchemaViolation,
            "source holds more than one body variant", source_path);
    }
    if (child.name == "apl:operator") {
      source.body = parse_operator(child, source_path, state);
    } else if (child.name == "apl:map") {
      source.body = parse_map(child, source_path, state);
    } else {
      source.body = parse_choice(child, source_path, state);
    }
    have_body = true;
  };

  for (const auto& child : node.children) {
    if (child.name == "apl:operator" || child.name == "apl:map" ||
        child.name == "apl:choice") {
      body_from(child);
    } else if (child.name == "apl:constraint") {
      source.constraints.push_back(
          parse_constraint(child, source_path, state));
    } else if (child.name == "apl:constraints") {
      // Grouping wrapper: its id is claimed, its children attach here.
      state.claim_id(require_attr(child, "id", source_path), source_path);
      for (const auto& inner : child.children) {
        if (inner.name == "apl:operator" || inner.name == "apl:map" ||
            inner.name == "apl:choice") {
          body_from(inner);
        } else if (inner.name == "apl:constraint") {
          source.constraints.push_back(
              parse_constraint(inner, source_path, state));
        } else {
          state.warn(source_path, "unknown element <" + inner.name +
                                      "> in constraints group");
        }
      }
    } else {
      state.warn(source_path,
                 "unknown element <" + child.name + "> in source");
    }
  }
  if (!have_body) {
    raise(ErrorCode::SchemaViolation, "source missing its body", source_path);
  }
  return source;
}

ModuleDef parse_module(const xml::Node& node, const std::string& path,
                       ParseState& state) {
  ModuleDef module;
  module.label = require_attr(node, "label", path);
  std::string module_path = join_path(path, module.label);
  state.claim_label(module.label, path);

  bool have_source = false;
  for (const auto& child : node.children) {
    if (child.name == "source") {
      if (have_source) {
        raise(ErrorCode::SchemaViolation, "module holds multiple sources",
              module_path);
      }
      module.source = parse_source(child, module_path, state);
      have_source = true;
    } else if (child.name == "renderer") {
      module.renderer_label = require_attr(child, "label", module_path);
      state.claim_label(module.renderer_label, module_path);
    } else {
      state.warn(module_path,
                 "unknown element <" + child.name + "> in module");
    }
  }
  if (!have_source) {
    raise(ErrorCode::SchemaViolation, "module missing its source",
          module_path);
  }
  if (module.renderer_label.empty()) {
    raise(ErrorCode::SchemaViolation, "module missing renderer label",
          module_path);
  }
  return module;
}

RegionNode parse_region(const xml::Node& node, const std::string& path,
                        ParseState& state) {
  RegionNode region;
  region.label = require_attr(node, "label", path);
  std::string region_path = join_path(path, region.label);
  state.claim_label(region.label, path);
  for (const auto& child : node.children) {
    if (child.name == "module") {
      region.modules.push_back(parse_module(child, region_path, state));
    } else if (child.name == "apl:position") {
      std::string id = require_attr(child, "id", region_path);
      state.claim_id(id, region_path);
      region.position_marker = id;
    } else {
      state.warn(region_path,
                 "unknown element <" + child.name + "> in region");
    }
  }
  if (region.position_marker && !region.modules.empty()) {
    raise(ErrorCode::SchemaViolation,
          "region with a position marker cannot hold modules", region_path);
  }
  return region;
}

void walk_dofs(const SourceDef& source, const std::string& source_path,
               const std::string& region_label, std::vector<DofRef>& out) {
  DofRef ref;
  ref.scope_path = source_path;
  ref.region_label = region_label;
  ref.source = &source;
  if (const auto* map = std::get_if<MapDoF>(&source.body)) {
    ref.id = map->id;
    ref.kind = DofKind::Map;
    ref.map = map;
    out.push_back(ref);
  } else if (const auto* choice = std::get_if<ChoiceDoF>(&source.body)) {
    ref.id = choice->id;
    ref.kind = DofKind::Choice;
    ref.choice = choice;
    out.push_back(ref);
    for (const auto& alt : choice->alternatives) {
      if (const MapDoF* nested = alt.map_body()) {
        DofRef inner;
        inner.id = nested->id;
        inner.kind = DofKind::Map;
        inner.scope_path = source_path;
        inner.region_label = region_label;
        inner.source = &source;
        inner.map = nested;
        inner.ancestor_choices.push_back(choice->id);
        out.push_back(inner);
      }
    }
  }
}

json operator_to_json(const OperatorDef& op) {
  json props = json::array();
  for (const auto& [k, v] : op.properties) {
    props.push_back({{"key", k}, {"value", v}});
  }
  return {{"id", op.id}, {"handler", op.handler}, {"properties", props}};
}

json map_to_json(const MapDoF& map) {
  json j{{"id", map.id},
         {"handler", map.handler},
         {"item_source", operator_to_json(map.item_source)},
         {"positions", map.positions()}};
  if (!map.position_regions.empty()) {
    json slots = json::array();
    for (const auto& region : map.position_regions) {
      slots.push_back({{"label", region.label},
                       {"position_id", region.position_marker.value_or("")}});
    }
    j["position_slots"] = slots;
  }
  if (map.pool_size_hint) j["pool_size_hint"] = *map.pool_size_hint;
  if (map.columns) j["columns"] = *map.columns;
  return j;
}

json source_to_json(const SourceDef& source) {
  json j{{"label", source.label}};
  if (const auto* op = std::get_if<OperatorDef>(&source.body)) {
    j["operator"] = operator_to_json(*op);
  } else if (const auto* map = std::get_if<MapDoF>(&source.body)) {
    j["map"] = map_to_json(*map);
  } else if (const auto* choice = std::get_if<ChoiceDoF>(&source.body)) {
    json alts = json::array();
    for (const auto& alt : choice->alternatives) {
      json a{{"id", alt.id}};
      if (const OperatorDef* op = alt.operator_body()) {
        a["operator"] = operator_to_json(*op);
      } else if (const MapDoF* m = alt.map_body()) {
        a["map"] = map_to_json(*m);
      }
      alts.push_back(a);
    }
    json c{{"id", choice->id}, {"alternatives", alts}};
    if (choice->handler) c["handler"] = *choice->handler;
    j["choice"] = c;
  }
  if (!source.constraints.empty()) {
    json decls = json::array();
    for (const auto& decl : source.constraints) {
      decls.push_back({{"id", decl.id},
                       {"expression", decl.expression_text},
                       {"scope", decl.scope_path}});
    }
    j["constraints"] = decls;
  }
  return j;
}

}  // namespace

const std::string* OperatorDef::property(std::string_view key) const {
  for (const auto& [k, v] : properties) {
    if (k == key) return &v;
  }
  return nullptr;
}

std::optional<long> OperatorDef::int_property(std::string_view key) const {
  const std::string* raw = property(key);
  if (!raw) return std::nullopt;
  try {
    std::size_t used = 0;
    long value = std::stol(*raw, &used);
    if (used != raw->size()) return std::nullopt;
    return value;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

int MapDoF::positions() const {
  if (!position_regions.empty()) {
    return static_cast<int>(position_regions.size());
  }
  return position_count.value_or(0);
}

std::vector<std::string> MapDoF::position_ids() const {
  std::vector<std::string> out;
  for (const auto& region : position_regions) {
    out.push_back(region.position_marker.value_or(region.label));
  }
  return out;
}

const OperatorDef* ChoiceAlternative::operator_body() const {
  return std::get_if<OperatorDef>(&body);
}
const MapDoF* ChoiceAlternative::map_body() const {
  return std::get_if<MapDoF>(&body);
}

bool ValidationReport::ok() const { return error_count() == 0; }

std::size_t ValidationReport::error_count() const {
  std::size_t n = 0;
  for (const auto& issue : issues) {
    if (issue.severity == ValidationIssue::Severity::Error) ++n;
  }
  return n;
}

PageModel parse_potl(std::string_view text) {
  xml::Node root = xml::parse(text);

  // An apl:template or apl:constraints wrapper around the layout is
  // accepted; root-scope constraints inside it attach to the model root.
  std::vector<const xml::Node*> root_constraint_nodes;
  const xml::Node* layout_node = &root;
  std::string wrapper_constraints_id;
  if (root.name == "apl:template" || root.name == "apl:constraints") {
    const xml::Node* found = nullptr;
    for (const auto& child : root.children) {
      if (child.name == "layout") {
        if (found) {
          raise(ErrorCode::SchemaViolation, "multiple layout elements", "");
        }
        found = &child;
      } else if (child.name == "apl:constraint") {
        root_constraint_nodes.push_back(&child);
      }
    }
    if (!found) {
      raise(ErrorCode::SchemaViolation,
            "wrapper element holds no layout element", "");
    }
    layout_node = found;
  } else if (root.name != "layout") {
    raise(ErrorCode::SchemaViolation,
          "document element must be <layout>, got <" + root.name + ">", "");
  }

  PageModel model;
  model.source_digest = to_hex(fnv1a64(text));
  ParseState state{.ids = {}, .labels = {}, .warnings = &model.warnings};

  model.layout_label = require_attr(*layout_node, "label", "");
  state.claim_label(model.layout_label, "");
  const std::string root_path = model.layout_label;

  // Layout children: regions, root-scope constraints, or an
  // apl:constraints wrapper holding both.
  std::vector<const xml::Node*> region_nodes;
  std::function<void(const xml::Node&)> scan =
      [&](const xml::Node& node) {
        for (const auto& child : node.children) {
          if (child.name == "region") {
            region_nodes.push_back(&child);
          } else if (child.name == "apl:constraint") {
            root_constraint_nodes.push_back(&child);
          } else if (child.name == "apl:constraints") {
            state.claim_id(require_attr(child, "id", root_path), root_path);
            scan(child);
          } else {
            state.warn(root_path,
                       "unknown element <" + child.name + "> in layout");
          }
        }
      };
  scan(*layout_node);

  for (const xml::Node* node : root_constraint_nodes) {
    model.root_constraints.push_back(
        parse_constraint(*node, root_path, state));
  }
  for (const xml::Node* node : region_nodes) {
    model.regions.push_back(parse_region(*node, root_path, state));
  }
  if (model.regions.empty()) {
    raise(ErrorCode::SchemaViolation, "model declares no regions", root_path);
  }
  return model;
}

ValidationReport validate_model(const PageModel& model) {
  ValidationReport report;
  auto error = [&](const std::string& path, std::string message) {
    report.issues.push_back({ValidationIssue::Severity::Error, path,
                             std::move(message)});
  };
  for (const auto& warning : model.warnings) {
    report.issues.push_back({ValidationIssue::Severity::Warning, warning.path,
                             warning.message});
  }

  std::set<std::string> labels;
  std::set<std::string> ids;
  auto check_label = [&](const std::string& label, const std::string& path) {
    if (label.empty()) {
      error(path, "empty label");
    } else if (!labels.insert(label).second) {
      error(path, "duplicate label '" + label + "'");
    }
  };
  auto check_id = [&](const std::string& id, const std::string& path) {
    if (id.empty()) {
      error(path, "empty id");
    } else if (!ids.insert(id).second) {
      error(path, "duplicate id '" + id + "'");
    }
  };
  auto check_operator = [&](const OperatorDef& op, const std::string& path) {
    check_id(op.id, path);
    if (op.handler.empty()) error(path, "operator handler is empty");
    std::set<std::string> keys;
    for (const auto& [k, _] : op.properties) {
      if (!keys.insert(k).second) {
        error(path, "duplicate property key '" + k + "'");
      }
    }
  };
  auto check_constraints = [&](const std::vector<ConstraintDecl>& decls) {
    for (const auto& decl : decls) {
      check_id(decl.id, decl.scope_path);
      try {
        compile_constraint(decl.expression_text);
      } catch (const Error& e) {
        error(join_path(decl.scope_path, decl.id),
              std::string("constraint does not compile: ") + e.what());
      }
    }
  };
  auto check_map = [&](const MapDoF& map, const std::string& path) {
    check_id(map.id, path);
    if (map.handler.empty()) error(path, "map handler is empty");
    check_operator(map.item_source, join_path(path, map.id));
    if (!map.position_regions.empty() && map.position_count) {
      error(path, "explicit positions and position count both present");
    }
    if (map.positions() < 1) error(path, "positions must be >= 1");
    for (const auto& region : map.position_regions) {
      check_label(region.label, path);
      if (!region.position_marker) {
        error(join_path(path, region.label),
              "map position region lacks a position marker");
      } else {
        check_id(*region.position_marker, join_path(path, region.label));
      }
      if (!region.modules.empty()) {
        error(join_path(path, region.label),
              "position-slot region holds modules");
      }
    }
  };

  check_label(model.layout_label, "");
  check_constraints(model.root_constraints);
  if (model.regions.empty()) error(model.layout_label, "no regions");

  for (const auto& region : model.regions) {
    std::string region_path = join_path(model.layout_label, region.label);
    check_label(region.label, model.layout_label);
    if (region.position_marker && !region.modules.empty()) {
      error(region_path, "region with a position marker holds modules");
    }
    for (const auto& module : region.modules) {
      std::string module_path = join_path(region_path, module.label);
      check_label(module.label, region_path);
      if (module.renderer_label.empty()) {
        error(module_path, "renderer label is empty");
      }
      const SourceDef& source = module.source;
      std::string source_path = join_path(module_path, source.label);
      check_label(source.label, module_path);
      check_constraints(source.constraints);
      if (const auto* op = std::get_if<OperatorDef>(&source.body)) {
        check_operator(*op, source_path);
      } else if (const auto* map = std::get_if<MapDoF>(&source.body)) {
        check_map(*map, source_path);
      } else if (const auto* choice = std::get_if<ChoiceDoF>(&source.body)) {
        check_id(choice->id, source_path);
        if (choice->alternatives.size() < 2) {
          error(join_path(source_path, choice->id),
                "choice needs at least 2 alternatives");
        }
        std::set<std::string> alt_ids;
        for (const auto& alt : choice->alternatives) {
          std::string alt_path = join_path(source_path, alt.id);
          check_id(alt.id, source_path);
          if (!alt_ids.insert(alt.id).second) {
            error(alt_path, "duplicate alternative id");
          }
          if (const OperatorDef* op = alt.operator_body()) {
            check_operator(*op, alt_path);
          } else if (const MapDoF* m = alt.map_body()) {
            check_map(*m, alt_path);
          }
        }
      }
    }
  }
  return report;
}

std::vector<DofRef> enumerate_dofs(const PageModel& model) {
  std::vector<DofRef> out;
  for (const auto& region : model.regions) {
    for (const auto& module : region.modules) {
      std::string source_path =
          join_path(join_path(join_path(model.layout_label, region.label),
                              module.label),
                    module.source.label);
      walk_dofs(module.source, source_path, region.label, out);
    }
  }
  return out;
}

std::vector<ConstraintDecl> constraints_in_scope(const PageModel& model,
                                                 const DofRef& dof) {
  std::vector<ConstraintDecl> out = model.root_constraints;
  if (dof.source) {
    out.insert(out.end(), dof.source->constraints.begin(),
               dof.source->constraints.end());
  }
  return out;
}

std::string dump_model_json(const PageModel& model) {
  json regions = json::array();
  for (const auto& region : model.regions) {
    json r{{"label", region.label}};
    if (region.position_marker) r["position_id"] = *region.position_marker;
    json modules = json::array();
    for (const auto& module : region.modules) {
      modules.push_back({{"label", module.label},
                         {"renderer", module.renderer_label},
                         {"source", source_to_json(module.source)}});
    }
    if (!modules.empty()) r["modules"] = modules;
    regions.push_back(r);
  }
  json j{{"layout", model.layout_label},
         {"digest", model.source_digest},
         {"regions", regions}};
  if (!model.root_constraints.empty()) {
    json decls = json::array();
    for (const auto& decl : model.root_constraints) {
      decls.push_back({{"id", decl.id}, {"expression", decl.expression_text}});
    }
    j["constraints"] = decls;
  }
  return j.dump();
}

}  // namespace potl
