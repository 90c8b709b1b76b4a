#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "potl/constraints.hpp"
#include "potl/fetchers.hpp"
#include "potl/model.hpp"

namespace potl {

/// One rewardable decision unit: a (choice, alternative) pair or a
/// (map, item, position) triple. Totally ordered for deterministic
/// iteration.
struct ArmKey {
  std::string dof_id;
  DofKind kind = DofKind::Choice;
  std::string detail_id;  // alternative id, or item id for maps
  int position = 0;       // 1-based, maps only

  friend bool operator<(const ArmKey& a, const ArmKey& b) {
    return std::tie(a.dof_id, a.kind, a.detail_id, a.position) <
           std::tie(b.dof_id, b.kind, b.detail_id, b.position);
  }
  friend bool operator==(const ArmKey& a, const ArmKey& b) {
    return std::tie(a.dof_id, a.kind, a.detail_id, a.position) ==
           std::tie(b.dof_id, b.kind, b.detail_id, b.position);
  }

  std::string serialize() const;
  static std::optional<ArmKey> deserialize(std::string_view text);
};

constexpr double kPriorAlpha = 1.0;
constexpr double kPriorBeta = 1.0;

struct ArmStats {
  std::uint64_t impressions = 0;
  std::uint64_t clicks = 0;  // clicks <= impressions

  friend bool operator==(const ArmStats&, const ArmStats&) = default;

  double alpha() const { return kPriorAlpha + static_cast<double>(clicks); }
  double beta() const {
    return kPriorBeta + static_cast<double>(impressions - clicks);
  }
  double mean() const {
    return impressions == 0
               ? 0.0
               : static_cast<double>(clicks) / static_cast<double>(impressions);
  }
};

using ArmTable = std::map<ArmKey, ArmStats>;

/// Immutable view of the stats store, taken per instantiation. O(1) to
/// copy and read concurrently.
class StatsSnapshot {
 public:
  StatsSnapshot() : arms_(std::make_shared<ArmTable>()) {}
  StatsSnapshot(std::shared_ptr<const ArmTable> arms, std::uint64_t generation)
      : arms_(std::move(arms)), generation_(generation) {}

  ArmStats get(const ArmKey& key) const;
  std::uint64_t generation() const { return generation_; }
  const ArmTable& arms() const { return *arms_; }
  std::uint64_t dof_impressions(const std::string& dof_id) const;

 private:
  std::shared_ptr<const ArmTable> arms_;
  std::uint64_t generation_ = 0;
};

/// Deterministic per-DoF random stream; derived from (root seed, dof id)
/// so decision-order changes don't perturb unrelated DoFs.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  static Rng for_dof(std::uint64_t root_seed, std::string_view dof_id);

  double uniform();                 // [0, 1)
  std::size_t index(std::size_t n);  // uniform in [0, n)
  double gamma(double shape);
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

/// UCB1 score: mean + sqrt(2 ln t / n). Callers must give unplayed arms
/// priority instead; impressions == 0 throws Error{DomainError}.
double ucb_score(const ArmStats& arm, std::uint64_t total_plays);

/// One draw from Beta(alpha, beta); Error{DomainError} on non-positive
/// parameters.
double posterior_sample(double alpha, double beta, Rng& rng);
double posterior_sample(const ArmStats& arm, Rng& rng);

/// Inputs a policy sees when resolving a map: the fetched pool, the
/// position count and the arm statistics snapshot.
struct MapView {
  const std::string* dof_id = nullptr;
  std::span<const Item> items;
  int k = 0;
  const StatsSnapshot* stats = nullptr;
  std::uint64_t total_plays = 0;  // impressions across this DoF's arms
  // Dense (item, position) stats filled once per resolution; avoids a
  // snapshot lookup per proposal.
  std::vector<ArmStats> arm_matrix;

  void fill_arm_matrix();
  ArmStats arm(std::size_t item_index, int position) const;
  const std::string& item_id(std::size_t item_index) const;
};

/// Item indices by position (index 0 holds position 1); injective.
using MapAssignment = std::vector<std::size_t>;

struct ChoiceView {
  const std::string* dof_id = nullptr;
  std::vector<std::string> alternative_ids;  // feasible alternatives only
  std::vector<ArmStats> arms;                // aligned with alternative_ids
  std::uint64_t total_plays = 0;
};

/// A resolution policy. Pure function of (stats snapshot, rng): identical
/// inputs give identical outputs.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string name() const = 0;
  virtual bool deterministic() const { return false; }

  /// Index into view.alternative_ids.
  virtual std::size_t choose(const ChoiceView& view, Rng& rng) const = 0;

  /// One complete assignment proposal, built greedily position 1 first.
  virtual MapAssignment propose(const MapView& view, Rng& rng) const = 0;

  /// Picks among the materialized feasible set during fallback.
  virtual std::size_t pick_feasible(const MapView& view,
                                    const std::vector<MapAssignment>& feasible,
                                    Rng& rng) const;
};

class PolicyRegistry {
 public:
  void register_policy(std::shared_ptr<Policy> policy);
  void register_alias(const std::string& name, const std::string& target);
  bool has(const std::string& name) const;
  /// Throws Error{UnknownPolicy}.
  const Policy& get(const std::string& name) const;

  static PolicyRegistry with_builtins();

 private:
  std::map<std::string, std::shared_ptr<Policy>> entries_;
  std::map<std::string, std::string> aliases_;
};

std::shared_ptr<Policy> make_uniform_policy();
std::shared_ptr<Policy> make_inorder_policy();
std::shared_ptr<Policy> make_epsilon_greedy_policy(double epsilon = 0.1);
std::shared_ptr<Policy> make_ucb1_policy();
std::shared_ptr<Policy> make_thompson_policy();

struct Resolution {
  MapAssignment assignment;  // maps
  std::size_t choice_index = 0;
  int proposal_rank = 1;  // attempt counter, 1 = first proposal accepted
};

/// Rejection sampling with exact fallback: the first proposal passing
/// `accepts` wins; after max_rejections (or immediately for a
/// deterministic proposer) the feasible set is materialized and
/// `fallback_pick` selects from it. Error{Infeasible} iff the feasible
/// set is empty; Error{SearchSpaceTooLarge} when the enumeration guard
/// is exceeded.
Resolution constrained_sample(
    const std::function<MapAssignment(Rng&)>& propose, bool proposer_deterministic,
    const std::function<bool(const MapAssignment&)>& accepts, int max_rejections,
    const std::function<std::vector<MapAssignment>()>& enumerate_feasible,
    const std::function<std::size_t(const std::vector<MapAssignment>&, Rng&)>&
        fallback_pick,
    Rng& rng);

/// Resolves a choice DoF. stats carries one entry (possibly zero-count)
/// per alternative. Returns an index into dof.alternatives.
std::size_t resolve_choice(const ChoiceDoF& dof, const std::string& policy_name,
                           const PolicyRegistry& registry,
                           const StatsSnapshot& stats, Rng& rng);

/// Same, restricted to a feasible subset of alternative indices; the
/// returned index is into dof.alternatives. Error{Infeasible} on an
/// empty subset.
std::size_t resolve_choice_among(const ChoiceDoF& dof,
                                 const std::vector<std::size_t>& feasible,
                                 const std::string& policy_name,
                                 const PolicyRegistry& registry,
                                 const StatsSnapshot& stats, Rng& rng);

/// Memoizes the enumerated feasible set of a map DoF while its pool,
/// constraints and grid stay byte-identical. Purely an accelerator for
/// the exact fallback; resolution results are unaffected.
class FeasibleSetCache {
 public:
  using FeasibleSet = std::shared_ptr<const std::vector<MapAssignment>>;

  FeasibleSet lookup(const std::string& dof_id, std::uint64_t key) const;
  void store(const std::string& dof_id, std::uint64_t key, FeasibleSet set);

 private:
  struct Entry {
    std::uint64_t key = 0;
    FeasibleSet feasible;
  };
  mutable std::mutex mu_;
  std::map<std::string, Entry> by_dof_;
};

struct MapResolveParams {
  int max_rejections = 100;
  std::optional<int> columns;  // overrides the DoF's own columns property
  const AttrMap* query_attrs = nullptr;
  FeasibleSetCache* cache = nullptr;
};

/// Resolves a map DoF to a constraint-satisfying injective assignment
/// covering positions 1..k. Throws Error{PoolTooSmall} when the pool is
/// short, Error{Infeasible} / Error{SearchSpaceTooLarge} from the
/// sampler, Error{UnknownPolicy} for unregistered policies.
Resolution resolve_map(const MapDoF& dof, const std::vector<Item>& items,
                       const std::vector<CompiledConstraint>& constraints,
                       const std::string& policy_name,
                       const PolicyRegistry& registry,
                       const StatsSnapshot& stats, Rng& rng,
                       const MapResolveParams& params = {});

}  // namespace potl
