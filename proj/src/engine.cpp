#include "potl/engine.hpp"

#include <nlohmann/json.hpp>
#include <set>

#include "potl/constraints.hpp"
#include "potl/errors.hpp"
#include "potl/util.hpp"

namespace potl {

namespace {

using nlohmann::json;

std::string item_title(const Item& item) {
  auto it = item.attributes.find("title");
  if (it != item.attributes.end()) {
    if (const auto* s = std::get_if<std::string>(&it->second)) return *s;
  }
  return item.id;
}

std::string default_renderer(const RenderInput& input) {
  std::string text;
  for (std::size_t i = 0; i < input.items.size(); ++i) {
    if (i) text += "; ";
    text += item_title(*input.items[i]);
  }
  return "<span class=\"slot\">" + html_escape(text) + "</span>";
}

std::vector<CompiledConstraint> compile_decls(
    const std::vector<ConstraintDecl>& decls) {
  std::vector<CompiledConstraint> compiled;
  compiled.reserve(decls.size());
  for (const ConstraintDecl& decl : decls) {
    compiled.push_back({decl.id, compile_constraint(decl.expression_text)});
  }
  return compiled;
}

// Attribute view over a choice's alternatives: each alternative exposes
// its operator properties (verticalId and friends) to constraints.
std::map<std::string, AttrMap> alternative_view(const ChoiceDoF& choice) {
  std::map<std::string, AttrMap> view;
  for (const ChoiceAlternative& alt : choice.alternatives) {
    AttrMap attrs;
    if (const OperatorDef* op = alt.operator_body()) {
      for (const auto& [key, value] : op->properties) attrs[key] = value;
    }
    view[alt.id] = std::move(attrs);
  }
  return view;
}

json resolution_to_json(const DofResolution& resolution) {
  if (const auto* map = std::get_if<MapResolution>(&resolution)) {
    json positions = json::object();
    for (std::size_t i = 0; i < map->item_by_position.size(); ++i) {
      positions[std::to_string(i + 1)] = map->item_by_position[i];
    }
    return {{"kind", "map"}, {"positions", positions}};
  }
  const auto& choice = std::get<ChoiceResolution>(resolution);
  return {{"kind", "choice"},
          {"alternative", choice.alternative_id},
          {"index", choice.index}};
}

DofResolution resolution_from_json(const json& j) {
  if (j.at("kind").get<std::string>() == "map") {
    MapResolution map;
    const json& positions = j.at("positions");
    map.item_by_position.resize(positions.size());
    for (auto it = positions.begin(); it != positions.end(); ++it) {
      std::size_t pos = std::stoul(it.key());
      if (pos < 1 || pos > map.item_by_position.size()) {
        raise(ErrorCode::MalformedDocument,
              "instance JSON: non-contiguous map positions");
      }
      map.item_by_position[pos - 1] = it.value().get<std::string>();
    }
    return map;
  }
  ChoiceResolution choice;
  choice.index = j.at("index").get<std::size_t>();
  choice.alternative_id = j.at("alternative").get<std::string>();
  return choice;
}

// Builds one instance; shared by instantiate() below.
class Instantiation {
 public:
  Instantiation(const PageModel& model, const Context& ctx,
                const Registries& registries, const StatsSnapshot& stats,
                const EngineOptions& options)
      : model_(model),
        ctx_(ctx),
        registries_(registries),
        stats_(stats),
        options_(options) {
    instance_.model_digest = model.source_digest;
    instance_.request_id = ctx.request_id;
    instance_.seed = ctx.seed;
    instance_.created_at = ctx.now;
    instance_.instance_id = hash128_hex(model.source_digest + "\x1f" +
                                        ctx.request_id + "\x1f" +
                                        to_hex(ctx.seed));
  }

  PageInstance run() {
    for (const RegionNode& region : model_.regions) {
      std::string region_path = model_.layout_label + "/" + region.label;
      try {
        for (const ModuleDef& module : region.modules) {
          serve_module(region, module);
        }
      } catch (const Error& e) {
        throw e.at(region_path);
      }
    }
    finalize_tokens();
    return std::move(instance_);
  }

 private:
  FetchContext fetch_ctx() const {
    FetchContext fc;
    fc.now = ctx_.now;
    fc.extra = ctx_.extra;
    return fc;
  }

  AttrMap query_attrs() const {
    AttrMap attrs;
    for (const auto& [key, value] : ctx_.extra) attrs[key] = value;
    return attrs;
  }

  int columns_for(const MapDoF& map) const {
    auto it = options_.columns_overrides.find(map.id);
    if (it != options_.columns_overrides.end()) return it->second;
    return map.columns.value_or(1);
  }

  void serve_module(const RegionNode& region, const ModuleDef& module) {
    const SourceDef& source = module.source;
    std::vector<CompiledConstraint> scoped =
        compile_decls(model_.root_constraints);
    std::vector<CompiledConstraint> own = compile_decls(source.constraints);
    scoped.insert(scoped.end(), own.begin(), own.end());

    if (const auto* op = std::get_if<OperatorDef>(&source.body)) {
      std::vector<Item> items = registries_.fetchers->fetch(*op, fetch_ctx());
      SlotEntry slot;
      slot.region = region.label;
      slot.host_region = region.label;
      add_slot(std::move(slot), module, all_item_ptrs(items));
    } else if (const auto* map = std::get_if<MapDoF>(&source.body)) {
      serve_map(region, module, *map, scoped, {});
    } else if (const auto* choice = std::get_if<ChoiceDoF>(&source.body)) {
      serve_choice(region, module, *choice, scoped);
    }
  }

  static std::vector<const Item*> all_item_ptrs(const std::vector<Item>& items) {
    std::vector<const Item*> ptrs;
    ptrs.reserve(items.size());
    for (const Item& item : items) ptrs.push_back(&item);
    return ptrs;
  }

  void serve_map(const RegionNode& region, const ModuleDef& module,
                 const MapDoF& map,
                 const std::vector<CompiledConstraint>& constraints,
                 std::vector<std::string> ancestors) {
    // Fetch before resolve: the pool's attributes feed the constraints.
    std::vector<Item> items =
        registries_.fetchers->fetch(map.item_source, fetch_ctx());

    std::string policy =
        effective_policy(options_, map.id, std::optional(map.handler));
    Rng rng = Rng::for_dof(ctx_.seed, map.id);
    MapResolveParams params;
    params.max_rejections = options_.max_rejections;
    params.columns = columns_for(map);
    params.cache = registries_.feasible_cache;
    AttrMap query = query_attrs();
    params.query_attrs = &query;

    Resolution resolved = resolve_map(map, items, constraints, policy,
                                      *registries_.policies, stats_, rng,
                                      params);

    MapResolution record;
    for (std::size_t index : resolved.assignment) {
      record.item_by_position.push_back(items[index].id);
    }
    push_trace(map.id, policy, record, resolved.proposal_rank);
    instance_.assignment.by_dof[map.id] = record;

    for (std::size_t p = 0; p < resolved.assignment.size(); ++p) {
      const Item& item = items[resolved.assignment[p]];
      SlotEntry slot;
      slot.region = p < map.position_regions.size()
                        ? map.position_regions[p].label
                        : region.label;
      slot.host_region = region.label;
      slot.dof_id = map.id;
      slot.position = static_cast<int>(p) + 1;
      slot.item_id = item.id;
      slot.ancestor_choices = ancestors;
      add_slot(std::move(slot), module, {&item});
    }
  }

  void serve_choice(const RegionNode& region, const ModuleDef& module,
                    const ChoiceDoF& choice,
                    const std::vector<CompiledConstraint>& constraints) {
    AttrMap query = query_attrs();
    std::vector<std::size_t> feasible =
        feasible_alternatives(choice, constraints, &query);

    std::string policy = effective_policy(options_, choice.id, choice.handler);
    Rng rng = Rng::for_dof(ctx_.seed, choice.id);
    std::size_t index = resolve_choice_among(
        choice, feasible, policy, *registries_.policies, stats_, rng);
    const ChoiceAlternative& alt = choice.alternatives[index];

    ChoiceResolution record{index, alt.id};
    push_trace(choice.id, policy, record, 1);
    instance_.assignment.by_dof[choice.id] = record;

    if (const OperatorDef* op = alt.operator_body()) {
      std::vector<Item> items = registries_.fetchers->fetch(*op, fetch_ctx());
      SlotEntry slot;
      slot.region = region.label;
      slot.host_region = region.label;
      slot.dof_id = choice.id;
      slot.alternative_id = alt.id;
      add_slot(std::move(slot), module, all_item_ptrs(items));
    } else if (const MapDoF* nested = alt.map_body()) {
      serve_map(region, module, *nested, constraints, {choice.id});
    }
  }

  void push_trace(const std::string& dof_id, const std::string& policy,
                  DofResolution resolution, int proposal_rank) {
    instance_.trace.push_back({dof_id, policy, std::move(resolution),
                               proposal_rank, stats_.generation()});
  }

  void add_slot(SlotEntry slot, const ModuleDef& module,
                const std::vector<const Item*>& rendered_items) {
    RenderInput input;
    input.slot = &slot;
    input.items = rendered_items;
    slot.fragment = registries_.renderers->render(module.renderer_label, input);
    instance_.slots.push_back(std::move(slot));
  }

  void finalize_tokens() {
    std::set<std::string> seen;
    for (std::size_t i = 0; i < instance_.slots.size(); ++i) {
      std::string token = to_hex(
          fnv1a64(instance_.instance_id + "#" + std::to_string(i)));
      if (!seen.insert(token).second) {
        raise(ErrorCode::Internal, "token collision within an instance");
      }
      instance_.slots[i].token = std::move(token);
    }
  }

  const PageModel& model_;
  const Context& ctx_;
  const Registries& registries_;
  const StatsSnapshot& stats_;
  const EngineOptions& options_;
  PageInstance instance_;
};

}  // namespace

bool ExecutionMap::operator==(const ExecutionMap& other) const {
  if (by_dof.size() != other.by_dof.size()) return false;
  for (const auto& [dof, resolution] : by_dof) {
    auto it = other.by_dof.find(dof);
    if (it == other.by_dof.end()) return false;
    if (const auto* map = std::get_if<MapResolution>(&resolution)) {
      const auto* other_map = std::get_if<MapResolution>(&it->second);
      if (!other_map || map->item_by_position != other_map->item_by_position) {
        return false;
      }
    } else {
      const auto& choice = std::get<ChoiceResolution>(resolution);
      const auto* other_choice = std::get_if<ChoiceResolution>(&it->second);
      if (!other_choice || choice.index != other_choice->index ||
          choice.alternative_id != other_choice->alternative_id) {
        return false;
      }
    }
  }
  return true;
}

void RendererRegistry::register_renderer(const std::string& label, Renderer r) {
  entries_[label] = std::move(r);
}

std::string RendererRegistry::render(const std::string& label,
                                     const RenderInput& input) const {
  auto it = entries_.find(label);
  if (it != entries_.end()) return it->second(input);
  return default_renderer(input);
}

std::vector<std::size_t> feasible_alternatives(
    const ChoiceDoF& choice, const std::vector<CompiledConstraint>& constraints,
    const AttrMap* query_attrs) {
  std::vector<std::size_t> feasible;
  if (constraints.empty()) {
    for (std::size_t i = 0; i < choice.alternatives.size(); ++i) {
      feasible.push_back(i);
    }
    return feasible;
  }
  auto view = alternative_view(choice);
  for (std::size_t i = 0; i < choice.alternatives.size(); ++i) {
    EvalContext ctx;
    ctx.assignment = {choice.alternatives[i].id};
    ctx.catalog_view = &view;
    ctx.query_attrs = query_attrs;
    if (check_scope(constraints, ctx).ok) feasible.push_back(i);
  }
  return feasible;
}

std::string effective_policy(const EngineOptions& options,
                             const std::string& dof_id,
                             const std::optional<std::string>& handler) {
  auto override_it = options.policy_overrides.find(dof_id);
  if (override_it != options.policy_overrides.end()) {
    return override_it->second;
  }
  if (handler && !handler->empty()) {
    auto alias_it = options.policy_aliases.find(*handler);
    if (alias_it != options.policy_aliases.end()) return alias_it->second;
    return *handler;
  }
  return options.default_policy;
}

PageInstance instantiate(const PageModel& model, const Context& ctx,
                         const Registries& registries,
                         const StatsSnapshot& stats,
                         const EngineOptions& options) {
  if (!registries.fetchers || !registries.policies || !registries.renderers) {
    raise(ErrorCode::Internal, "instantiate requires all three registries");
  }
  Instantiation instantiation(model, ctx, registries, stats, options);
  return instantiation.run();
}

std::string render_json(const PageInstance& instance) {
  json assignment = json::object();
  for (const auto& [dof, resolution] : instance.assignment.by_dof) {
    assignment[dof] = resolution_to_json(resolution);
  }
  json trace = json::array();
  for (const TraceEntry& entry : instance.trace) {
    trace.push_back({{"dof", entry.dof_id},
                     {"policy", entry.policy},
                     {"resolution", resolution_to_json(entry.resolution)},
                     {"proposal_rank", entry.proposal_rank},
                     {"stats_generation", entry.stats_generation}});
  }
  json slots = json::array();
  for (const SlotEntry& slot : instance.slots) {
    json s{{"region", slot.region},
           {"host_region", slot.host_region},
           {"token", slot.token},
           {"fragment", slot.fragment}};
    if (slot.dof_id) s["dof"] = *slot.dof_id;
    if (slot.position > 0) s["position"] = slot.position;
    if (slot.item_id) s["item"] = *slot.item_id;
    if (slot.alternative_id) s["alternative"] = *slot.alternative_id;
    if (!slot.ancestor_choices.empty()) s["ancestors"] = slot.ancestor_choices;
    slots.push_back(s);
  }
  json j{{"instance_id", instance.instance_id},
         {"model_digest", instance.model_digest},
         {"request_id", instance.request_id},
         {"seed", instance.seed},
         {"created_at", format_iso8601(instance.created_at)},
         {"assignment", assignment},
         {"trace", trace},
         {"slots", slots}};
  return j.dump();
}

PageInstance parse_instance_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    raise(ErrorCode::MalformedDocument,
          "instance JSON does not parse: " + std::string(e.what()));
  }
  try {
    PageInstance instance;
    instance.instance_id = j.at("instance_id").get<std::string>();
    instance.model_digest = j.at("model_digest").get<std::string>();
    instance.request_id = j.at("request_id").get<std::string>();
    instance.seed = j.at("seed").get<std::uint64_t>();
    auto created = parse_iso8601(j.at("created_at").get<std::string>());
    if (!created) {
      raise(ErrorCode::MalformedDocument, "instance JSON: bad created_at");
    }
    instance.created_at = *created;
    for (auto it = j.at("assignment").begin(); it != j.at("assignment").end();
         ++it) {
      instance.assignment.by_dof[it.key()] = resolution_from_json(it.value());
    }
    for (const json& t : j.at("trace")) {
      instance.trace.push_back({t.at("dof").get<std::string>(),
                                t.at("policy").get<std::string>(),
                                resolution_from_json(t.at("resolution")),
                                t.at("proposal_rank").get<int>(),
                                t.at("stats_generation").get<std::uint64_t>()});
    }
    for (const json& s : j.at("slots")) {
      SlotEntry slot;
      slot.region = s.at("region").get<std::string>();
      slot.host_region = s.at("host_region").get<std::string>();
      slot.token = s.at("token").get<std::string>();
      slot.fragment = s.at("fragment").get<std::string>();
      if (s.contains("dof")) slot.dof_id = s["dof"].get<std::string>();
      if (s.contains("position")) slot.position = s["position"].get<int>();
      if (s.contains("item")) slot.item_id = s["item"].get<std::string>();
      if (s.contains("alternative")) {
        slot.alternative_id = s["alternative"].get<std::string>();
      }
      if (s.contains("ancestors")) {
        slot.ancestor_choices =
            s["ancestors"].get<std::vector<std::string>>();
      }
      instance.slots.push_back(std::move(slot));
    }
    return instance;
  } catch (const json::exception& e) {
    raise(ErrorCode::MalformedDocument,
          "instance JSON has the wrong shape: " + std::string(e.what()));
  }
}

bool verify_instance(const PageModel& model, const Registries& registries,
                     const PageInstance& instance,
                     const EngineOptions& options) {
  FetchContext fc;
  fc.now = instance.created_at;
  for (const DofRef& dof : enumerate_dofs(model)) {
    auto resolved = instance.assignment.by_dof.find(dof.id);
    if (resolved == instance.assignment.by_dof.end()) continue;  // unreached
    std::vector<CompiledConstraint> constraints =
        compile_decls(constraints_in_scope(model, dof));
    if (constraints.empty()) continue;

    if (dof.kind == DofKind::Map) {
      const auto* resolution = std::get_if<MapResolution>(&resolved->second);
      if (!resolution) return false;
      std::vector<Item> items =
          registries.fetchers->fetch(dof.map->item_source, fc);
      auto view = catalog_view(items);
      EvalContext ctx;
      ctx.assignment = resolution->item_by_position;
      ctx.catalog_view = &view;
      auto columns_it = options.columns_overrides.find(dof.id);
      ctx.columns = columns_it != options.columns_overrides.end()
                        ? columns_it->second
                        : dof.map->columns.value_or(1);
      if (!check_scope(constraints, ctx).ok) return false;
    } else {
      const auto* resolution = std::get_if<ChoiceResolution>(&resolved->second);
      if (!resolution) return false;
      auto view = alternative_view(*dof.choice);
      EvalContext ctx;
      ctx.assignment = {resolution->alternative_id};
      ctx.catalog_view = &view;
      if (!check_scope(constraints, ctx).ok) return false;
    }
  }
  return true;
}

}  // namespace potl
