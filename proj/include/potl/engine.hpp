#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "potl/fetchers.hpp"
#include "potl/model.hpp"
#include "potl/resolvers.hpp"

namespace potl {

struct Context {
  std::string request_id;  // unique per serve
  std::optional<std::string> user_id;
  std::int64_t now = 0;     // epoch seconds
  std::uint64_t seed = 0;   // root seed for this instantiation
  std::map<std::string, std::string> extra;
};

struct MapResolution {
  std::vector<std::string> item_by_position;  // index 0 holds position 1
};
struct ChoiceResolution {
  std::size_t index = 0;
  std::string alternative_id;
};
using DofResolution = std::variant<MapResolution, ChoiceResolution>;

struct ExecutionMap {
  std::map<std::string, DofResolution> by_dof;

  bool operator==(const ExecutionMap& other) const;
};

struct TraceEntry {
  std::string dof_id;
  std::string policy;
  DofResolution resolution;
  int proposal_rank = 1;
  std::uint64_t stats_generation = 0;
};

struct SlotEntry {
  std::string region;       // position-slot region label when explicit
  std::string host_region;  // owning top-level region label
  std::string token;        // unique within the instance
  std::optional<std::string> dof_id;
  int position = 0;  // 1-based for map slots, 0 otherwise
  std::optional<std::string> item_id;
  std::optional<std::string> alternative_id;
  std::vector<std::string> ancestor_choices;  // choice DoF ids on the path
  std::string fragment;  // renderer output, token-free
};

struct PageInstance {
  std::string instance_id;
  std::string model_digest;
  std::string request_id;
  std::uint64_t seed = 0;
  std::int64_t created_at = 0;
  ExecutionMap assignment;  // every DoF reached appears exactly once
  std::vector<TraceEntry> trace;
  std::vector<SlotEntry> slots;
};

/// Renders one slot's fragment. Registered per renderer label; labels
/// with no registration fall back to the default renderer.
struct RenderInput {
  const SlotEntry* slot = nullptr;
  std::vector<const Item*> items;  // the slot's content, usually one item
};
using Renderer = std::function<std::string(const RenderInput&)>;

class RendererRegistry {
 public:
  void register_renderer(const std::string& label, Renderer r);
  std::string render(const std::string& label, const RenderInput& input) const;

 private:
  std::map<std::string, Renderer> entries_;
};

struct Registries {
  const FetcherRegistry* fetchers = nullptr;
  const PolicyRegistry* policies = nullptr;
  const RendererRegistry* renderers = nullptr;
  FeasibleSetCache* feasible_cache = nullptr;  // optional accelerator
};

struct EngineOptions {
  int max_rejections = 100;
  std::string default_policy = "thompson";
  std::map<std::string, std::string> policy_overrides;  // dof id -> policy
  std::map<std::string, std::string> policy_aliases;    // handler -> policy
  std::map<std::string, int> columns_overrides;         // dof id -> columns
};

/// Effective policy name for a DoF: override, then handler (through the
/// alias table), then the default.
std::string effective_policy(const EngineOptions& options,
                             const std::string& dof_id,
                             const std::optional<std::string>& handler);

/// Alternatives whose one-slot assignment {1 -> alternative id} passes
/// every constraint in scope; choices resolve among these.
std::vector<std::size_t> feasible_alternatives(
    const ChoiceDoF& choice, const std::vector<CompiledConstraint>& constraints,
    const AttrMap* query_attrs);

/// Morphs the logical model into a concrete page: pre-order traversal,
/// fetch before resolve, every constraint scope satisfied, instrumented
/// slots and a complete decision trace. Errors abort the whole serve and
/// carry the region path.
PageInstance instantiate(const PageModel& model, const Context& ctx,
                         const Registries& registries,
                         const StatsSnapshot& stats,
                         const EngineOptions& options = {});

/// Canonical JSON (sorted keys, fixed float format); byte-identical for
/// identical instances.
std::string render_json(const PageInstance& instance);

PageInstance parse_instance_json(std::string_view text);

/// Re-runs check_scope on every constraint scope over the final
/// assignment. Requires the same registries (catalogs) the serve used;
/// ctx_now must equal instance.created_at for age-derived attributes.
bool verify_instance(const PageModel& model, const Registries& registries,
                     const PageInstance& instance,
                     const EngineOptions& options = {});

}  // namespace potl
