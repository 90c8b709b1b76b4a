#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace potl {

/// Attribute value attached to an item (or to the query pseudo-slot 0).
using Scalar = std::variant<std::string, double, bool>;
using AttrMap = std::map<std::string, Scalar>;

namespace dsl {
struct Node;
}

/// Compiled constraint expression. Immutable, reentrant; evaluation is a
/// pure function of the context.
class ConstraintExpr {
 public:
  ConstraintExpr() = default;

  const std::string& source() const { return source_; }
  bool compiled() const { return root_ != nullptr; }
  const dsl::Node& root() const { return *root_; }

 private:
  friend ConstraintExpr compile_constraint(std::string_view text);
  std::shared_ptr<const dsl::Node> root_;
  std::string source_;
};

/// Candidate assignment a constraint is judged against: positions are
/// 1-based and contiguous, every placed item id resolves through
/// catalog_view to its attributes.
struct EvalContext {
  std::vector<std::string> assignment;  // index 0 holds position 1
  const std::map<std::string, AttrMap>* catalog_view = nullptr;
  int columns = 1;  // grid width; row = ceil(pos / columns)
  const AttrMap* query_attrs = nullptr;  // reserved pseudo-slot 0

  const AttrMap* attrs_of(const std::string& item_id) const;
};

struct Verdict {
  bool ok = true;
  std::string first_violated;  // constraint id, empty when ok
  std::size_t evaluated = 0;
};

struct CompiledConstraint {
  std::string id;
  ConstraintExpr expr;
};

/// Compiles DSL text. Throws Error{SyntaxError} (with character
/// position) or Error{TypeError} (with node path).
ConstraintExpr compile_constraint(std::string_view text);

/// Evaluates a compiled expression. Throws Error{MissingItem} when the
/// assignment references an item absent from catalog_view. Missing
/// attributes make the touching predicate false, never an error.
bool evaluate(const ConstraintExpr& expr, const EvalContext& ctx);

/// Evaluates in declaration order, stopping at the first violation.
Verdict check_scope(const std::vector<CompiledConstraint>& constraints,
                    const EvalContext& ctx);

/// Item pool entry for enumeration: id plus attribute view.
struct PoolItem {
  std::string id;
  const AttrMap* attrs;
};

/// Number of ordered injective assignments of k of n items, saturating
/// at > limit (returns limit + 1 in that case).
std::uint64_t permutation_count(std::uint64_t n, std::uint64_t k,
                                std::uint64_t limit);

/// Exact feasibility count by full enumeration. Guard: P(n, k) <= 1e6,
/// otherwise throws Error{TooLarge}.
std::uint64_t count_feasible(const std::vector<PoolItem>& items, int k,
                             const std::vector<CompiledConstraint>& constraints,
                             int columns = 1,
                             const AttrMap* query_attrs = nullptr);

/// Enumeration guard shared by count_feasible and the resolver fallback.
constexpr std::uint64_t kEnumerationGuard = 1'000'000;

/// Walks every ordered injective assignment (item indices by position),
/// invoking visit(assignment, feasible). Same guard as count_feasible.
void enumerate_assignments(
    const std::vector<PoolItem>& items, int k,
    const std::vector<CompiledConstraint>& constraints, int columns,
    const AttrMap* query_attrs,
    const std::function<void(const std::vector<std::size_t>&, bool)>& visit);

}  // namespace potl
