#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace potl {

struct RegionNode;

struct OperatorDef {
  std::string id;
  std::string handler;  // fetcher registry key
  std::vector<std::pair<std::string, std::string>> properties;  // keys unique

  const std::string* property(std::string_view key) const;
  std::optional<long> int_property(std::string_view key) const;
};

struct MapDoF {
  std::string id;
  std::string handler;  // policy registry key
  OperatorDef item_source;
  // Explicit position slots and the "number of regions" count are
  // mutually exclusive. Explicit slots are region nodes carrying an
  // apl:position marker and no modules.
  std::vector<RegionNode> position_regions;
  std::optional<int> position_count;
  std::optional<int> pool_size_hint;  // property "number of items"
  std::optional<int> columns;         // property "columns", grid width

  int positions() const;
  std::vector<std::string> position_ids() const;
};

struct ChoiceAlternative {
  std::string id;
  // Alternatives are usually plain operators; a nested map is allowed so
  // that decisions can stack (a map resolved inside a chosen alternative).
  std::variant<OperatorDef, MapDoF> body;

  const OperatorDef* operator_body() const;
  const MapDoF* map_body() const;
};

struct ChoiceDoF {
  std::string id;
  std::optional<std::string> handler;  // policy registry key, optional
  std::vector<ChoiceAlternative> alternatives;  // >= 2, ids unique
};

struct ConstraintDecl {
  std::string id;
  std::string expression_text;  // constraint DSL source
  std::string scope_path;       // owning source, or layout root
};

struct SourceDef {
  std::string label;
  std::variant<OperatorDef, MapDoF, ChoiceDoF> body;
  std::vector<ConstraintDecl> constraints;
};

struct ModuleDef {
  std::string label;
  SourceDef source;
  std::string renderer_label;  // non-empty
};

struct RegionNode {
  std::string label;
  std::vector<ModuleDef> modules;
  // Present iff the region declares an apl:position slot; such a region
  // is a placement slot inside a map and has no modules.
  std::optional<std::string> position_marker;
};

struct ParseWarning {
  std::string path;
  std::string message;
};

struct PageModel {
  std::string layout_label;
  std::vector<RegionNode> regions;  // at least one
  std::vector<ConstraintDecl> root_constraints;
  std::vector<ParseWarning> warnings;
  std::string source_digest;  // checksum of the input text
};

struct ValidationIssue {
  enum class Severity { Error, Warning };
  Severity severity;
  std::string path;
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;

  bool ok() const;
  std::size_t error_count() const;
};

enum class DofKind { Map, Choice };

/// One entry of the engine's decision order: a map or choice together
/// with where it sits in the tree.
struct DofRef {
  std::string id;
  DofKind kind;
  std::string scope_path;     // path of the owning source
  std::string region_label;   // owning top-level region
  const SourceDef* source = nullptr;
  const MapDoF* map = nullptr;
  const ChoiceDoF* choice = nullptr;
  // Non-empty when the DoF sits inside a choice alternative; ordered
  // root-first. Used for click attribution up the decision path.
  std::vector<std::string> ancestor_choices;
};

/// Parses a POTL document. Throws Error{MalformedDocument} on broken
/// markup and Error{SchemaViolation} (path-tagged) on structural rule
/// violations. Unknown elements/attributes land in model.warnings.
PageModel parse_potl(std::string_view text);

/// Full recheck of the model invariants plus compilation of every
/// constraint declaration. Never throws; all findings go in the report.
ValidationReport validate_model(const PageModel& model);

/// Document-order (pre-order) listing of every map and choice DoF,
/// including maps nested inside choice alternatives. This is the
/// engine's decision order.
std::vector<DofRef> enumerate_dofs(const PageModel& model);

/// Constraints applying to a DoF: layout-root declarations followed by
/// the owning source's declarations, in declaration order.
std::vector<ConstraintDecl> constraints_in_scope(const PageModel& model,
                                                 const DofRef& dof);

/// Canonical JSON dump of the model tree (sorted keys).
std::string dump_model_json(const PageModel& model);

}  // namespace potl
