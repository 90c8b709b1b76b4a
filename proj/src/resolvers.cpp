#include "potl/resolvers.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "potl/errors.hpp"
#include "potl/util.hpp"

namespace potl {

namespace {

constexpr double kUnplayedBonus = 1e9;  // fallback weight for unplayed arms

std::vector<std::string> assignment_ids(const MapView& view,
                                        const MapAssignment& assignment) {
  std::vector<std::string> ids;
  ids.reserve(assignment.size());
  for (std::size_t index : assignment) ids.push_back(view.item_id(index));
  return ids;
}

// Greedy argmax per position over unused items; ties go to the lowest
// item index.
MapAssignment greedy_by_weight(
    const MapView& view,
    const std::function<double(std::size_t item, int pos)>& weight) {
  MapAssignment assignment;
  std::vector<bool> used(view.items.size(), false);
  for (int pos = 1; pos <= view.k; ++pos) {
    std::size_t best = view.items.size();
    double best_weight = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < view.items.size(); ++i) {
      if (used[i]) continue;
      double w = weight(i, pos);
      if (w > best_weight) {
        best_weight = w;
        best = i;
      }
    }
    used[best] = true;
    assignment.push_back(best);
  }
  return assignment;
}

std::size_t argmax_sum(const MapView& view,
                       const std::vector<MapAssignment>& feasible,
                       const std::function<double(std::size_t, int)>& weight) {
  std::size_t best = 0;
  double best_total = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < feasible.size(); ++i) {
    double total = 0.0;
    for (std::size_t pos = 0; pos < feasible[i].size(); ++pos) {
      total += weight(feasible[i][pos], static_cast<int>(pos) + 1);
    }
    if (total > best_total) {
      best_total = total;
      best = i;
    }
  }
  return best;
}

class UniformPolicy : public Policy {
 public:
  std::string name() const override { return "uniform"; }

  std::size_t choose(const ChoiceView& view, Rng& rng) const override {
    return rng.index(view.alternative_ids.size());
  }

  MapAssignment propose(const MapView& view, Rng& rng) const override {
    // Uniform over injective assignments: draw positions left to right
    // from the unused pool.
    MapAssignment assignment;
    std::vector<std::size_t> pool(view.items.size());
    for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;
    for (int pos = 0; pos < view.k; ++pos) {
      std::size_t pick = rng.index(pool.size());
      assignment.push_back(pool[pick]);
      pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
    }
    return assignment;
  }

  std::size_t pick_feasible(const MapView&,
                            const std::vector<MapAssignment>& feasible,
                            Rng& rng) const override {
    return rng.index(feasible.size());
  }
};

class InorderPolicy : public Policy {
 public:
  std::string name() const override { return "inorder"; }
  bool deterministic() const override { return true; }

  std::size_t choose(const ChoiceView&, Rng&) const override {
    return 0;  // document order
  }

  MapAssignment propose(const MapView& view, Rng&) const override {
    std::vector<std::size_t> rank = ranked(view);
    return MapAssignment(rank.begin(),
                         rank.begin() + static_cast<std::ptrdiff_t>(view.k));
  }

  // Feasible assignment whose rank sequence is lexicographically best:
  // position 1 gets the highest-ranked item possible, and so on.
  std::size_t pick_feasible(const MapView& view,
                            const std::vector<MapAssignment>& feasible,
                            Rng&) const override {
    std::vector<std::size_t> rank_of(view.items.size());
    std::vector<std::size_t> rank = ranked(view);
    for (std::size_t r = 0; r < rank.size(); ++r) rank_of[rank[r]] = r;
    std::size_t best = 0;
    for (std::size_t i = 1; i < feasible.size(); ++i) {
      for (std::size_t pos = 0; pos < feasible[i].size(); ++pos) {
        std::size_t a = rank_of[feasible[i][pos]];
        std::size_t b = rank_of[feasible[best][pos]];
        if (a == b) continue;
        if (a < b) best = i;
        break;
      }
    }
    return best;
  }

 private:
  static std::vector<std::size_t> ranked(const MapView& view) {
    std::vector<std::size_t> order(view.items.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (view.items[a].score != view.items[b].score) {
        return view.items[a].score > view.items[b].score;
      }
      return view.items[a].id < view.items[b].id;
    });
    return order;
  }
};

class EpsilonGreedyPolicy : public Policy {
 public:
  explicit EpsilonGreedyPolicy(double epsilon) : epsilon_(epsilon) {}

  std::string name() const override { return "epsilon_greedy"; }

  std::size_t choose(const ChoiceView& view, Rng& rng) const override {
    if (epsilon_ > 0.0 && rng.uniform() < epsilon_) {
      return rng.index(view.alternative_ids.size());
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < view.arms.size(); ++i) {
      if (view.arms[i].mean() > view.arms[best].mean()) best = i;
    }
    return best;
  }

  MapAssignment propose(const MapView& view, Rng& rng) const override {
    MapAssignment assignment;
    std::vector<bool> used(view.items.size(), false);
    for (int pos = 1; pos <= view.k; ++pos) {
      std::size_t pick = view.items.size();
      if (epsilon_ > 0.0 && rng.uniform() < epsilon_) {
        std::vector<std::size_t> unused;
        for (std::size_t i = 0; i < view.items.size(); ++i) {
          if (!used[i]) unused.push_back(i);
        }
        pick = unused[rng.index(unused.size())];
      }
      if (pick == view.items.size()) {
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < view.items.size(); ++i) {
          if (used[i]) continue;
          double mean = view.arm(i, pos).mean();
          if (mean > best) {
            best = mean;
            pick = i;
          }
        }
      }
      used[pick] = true;
      assignment.push_back(pick);
    }
    return assignment;
  }

  std::size_t pick_feasible(const MapView& view,
                            const std::vector<MapAssignment>& feasible,
                            Rng&) const override {
    return argmax_sum(view, feasible, [&](std::size_t item, int pos) {
      return view.arm(item, pos).mean();
    });
  }

 private:
  double epsilon_;
};

class Ucb1Policy : public Policy {
 public:
  std::string name() const override { return "ucb1"; }
  bool deterministic() const override { return true; }

  std::size_t choose(const ChoiceView& view, Rng&) const override {
    for (std::size_t i = 0; i < view.arms.size(); ++i) {
      if (view.arms[i].impressions == 0) return i;  // unplayed arm first
    }
    std::size_t best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < view.arms.size(); ++i) {
      double score = ucb_score(view.arms[i], view.total_plays);
      if (score > best_score) {
        best_score = score;
        best = i;
      }
    }
    return best;
  }

  MapAssignment propose(const MapView& view, Rng&) const override {
    return greedy_by_weight(view, [&](std::size_t item, int pos) {
      return weight(view, item, pos);
    });
  }

  std::size_t pick_feasible(const MapView& view,
                            const std::vector<MapAssignment>& feasible,
                            Rng&) const override {
    return argmax_sum(view, feasible, [&](std::size_t item, int pos) {
      return weight(view, item, pos);
    });
  }

 private:
  static double weight(const MapView& view, std::size_t item, int pos) {
    ArmStats arm = view.arm(item, pos);
    if (arm.impressions == 0) return kUnplayedBonus;
    return ucb_score(arm, std::max(view.total_plays, arm.impressions));
  }
};

class ThompsonPolicy : public Policy {
 public:
  std::string name() const override { return "thompson"; }

  std::size_t choose(const ChoiceView& view, Rng& rng) const override {
    std::size_t best = 0;
    double best_sample = -1.0;
    for (std::size_t i = 0; i < view.arms.size(); ++i) {
      double sample = posterior_sample(view.arms[i], rng);
      if (sample > best_sample) {
        best_sample = sample;
        best = i;
      }
    }
    return best;
  }

  MapAssignment propose(const MapView& view, Rng& rng) const override {
    // Fresh posterior draws per position, over the still-unused items.
    MapAssignment assignment;
    std::vector<bool> used(view.items.size(), false);
    for (int pos = 1; pos <= view.k; ++pos) {
      std::size_t best = view.items.size();
      double best_sample = -1.0;
      for (std::size_t i = 0; i < view.items.size(); ++i) {
        if (used[i]) continue;
        double sample = posterior_sample(view.arm(i, pos), rng);
        if (sample > best_sample) {
          best_sample = sample;
          best = i;
        }
      }
      used[best] = true;
      assignment.push_back(best);
    }
    return assignment;
  }

  std::size_t pick_feasible(const MapView& view,
                            const std::vector<MapAssignment>& feasible,
                            Rng& rng) const override {
    std::vector<double> samples(view.items.size() *
                                static_cast<std::size_t>(view.k));
    for (std::size_t i = 0; i < samples.size(); ++i) {
      std::size_t item = i / static_cast<std::size_t>(view.k);
      int pos = static_cast<int>(i % static_cast<std::size_t>(view.k)) + 1;
      samples[i] = posterior_sample(view.arm(item, pos), rng);
    }
    return argmax_sum(view, feasible, [&](std::size_t item, int pos) {
      return samples[item * static_cast<std::size_t>(view.k) +
                     static_cast<std::size_t>(pos - 1)];
    });
  }
};

}  // namespace

std::string ArmKey::serialize() const {
  if (kind == DofKind::Choice) {
    return "choice|" + dof_id + "|" + detail_id;
  }
  return "map|" + dof_id + "|" + detail_id + "|" + std::to_string(position);
}

std::optional<ArmKey> ArmKey::deserialize(std::string_view text) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    std::size_t bar = text.find('|', start);
    if (bar == std::string_view::npos) {
      parts.emplace_back(text.substr(start));
      break;
    }
    parts.emplace_back(text.substr(start, bar - start));
    start = bar + 1;
  }
  ArmKey key;
  if (parts.size() == 3 && parts[0] == "choice") {
    key.kind = DofKind::Choice;
    key.dof_id = parts[1];
    key.detail_id = parts[2];
    return key;
  }
  if (parts.size() == 4 && parts[0] == "map") {
    key.kind = DofKind::Map;
    key.dof_id = parts[1];
    key.detail_id = parts[2];
    try {
      key.position = std::stoi(parts[3]);
    } catch (const std::exception&) {
      return std::nullopt;
    }
    return key;
  }
  return std::nullopt;
}

ArmStats StatsSnapshot::get(const ArmKey& key) const {
  auto it = arms_->find(key);
  return it == arms_->end() ? ArmStats{} : it->second;
}

std::uint64_t StatsSnapshot::dof_impressions(const std::string& dof_id) const {
  std::uint64_t total = 0;
  for (auto it = arms_->lower_bound(ArmKey{dof_id, DofKind::Map, "", 0});
       it != arms_->end() && it->first.dof_id == dof_id; ++it) {
    total += it->second.impressions;
  }
  return total;
}

Rng Rng::for_dof(std::uint64_t root_seed, std::string_view dof_id) {
  return Rng(fnv1a64_u64(root_seed, fnv1a64(dof_id)));
}

double Rng::uniform() {
  return std::uniform_real_distribution<double>(0.0, 1.0)(engine_);
}

std::size_t Rng::index(std::size_t n) {
  if (n == 0) raise(ErrorCode::DomainError, "index over an empty range");
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
}

double Rng::gamma(double shape) {
  return std::gamma_distribution<double>(shape, 1.0)(engine_);
}

double ucb_score(const ArmStats& arm, std::uint64_t total_plays) {
  if (arm.impressions == 0) {
    raise(ErrorCode::DomainError,
          "ucb_score is undefined for unplayed arms; apply unplayed-arm "
          "priority instead");
  }
  if (total_plays < arm.impressions) {
    raise(ErrorCode::DomainError,
          "total plays below the arm's own impressions");
  }
  double n = static_cast<double>(arm.impressions);
  return arm.mean() +
         std::sqrt(2.0 * std::log(static_cast<double>(total_plays)) / n);
}

double posterior_sample(double alpha, double beta, Rng& rng) {
  if (alpha <= 0.0 || beta <= 0.0) {
    raise(ErrorCode::DomainError, "Beta parameters must be positive");
  }
  double x = rng.gamma(alpha);
  double y = rng.gamma(beta);
  if (x + y == 0.0) return 0.5;
  return x / (x + y);
}

double posterior_sample(const ArmStats& arm, Rng& rng) {
  return posterior_sample(arm.alpha(), arm.beta(), rng);
}

void MapView::fill_arm_matrix() {
  arm_matrix.assign(items.size() * static_cast<std::size_t>(k), ArmStats{});
  for (std::size_t i = 0; i < items.size(); ++i) {
    for (int pos = 1; pos <= k; ++pos) {
      arm_matrix[i * static_cast<std::size_t>(k) +
                 static_cast<std::size_t>(pos - 1)] =
          stats->get(ArmKey{*dof_id, DofKind::Map, items[i].id, pos});
    }
  }
}

ArmStats MapView::arm(std::size_t item_index, int position) const {
  if (!arm_matrix.empty()) {
    return arm_matrix[item_index * static_cast<std::size_t>(k) +
                      static_cast<std::size_t>(position - 1)];
  }
  return stats->get(ArmKey{*dof_id, DofKind::Map, items[item_index].id,
                           position});
}

FeasibleSetCache::FeasibleSet FeasibleSetCache::lookup(
    const std::string& dof_id, std::uint64_t key) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = by_dof_.find(dof_id);
  if (it == by_dof_.end() || it->second.key != key) return nullptr;
  return it->second.feasible;
}

void FeasibleSetCache::store(const std::string& dof_id, std::uint64_t key,
                             FeasibleSet set) {
  std::lock_guard<std::mutex> lock(mu_);
  by_dof_[dof_id] = {key, std::move(set)};
}

const std::string& MapView::item_id(std::size_t item_index) const {
  return items[item_index].id;
}

std::size_t Policy::pick_feasible(const MapView&,
                                  const std::vector<MapAssignment>&,
                                  Rng&) const {
  return 0;
}

void PolicyRegistry::register_policy(std::shared_ptr<Policy> policy) {
  entries_[policy->name()] = std::move(policy);
}

void PolicyRegistry::register_alias(const std::string& name,
                                    const std::string& target) {
  aliases_[name] = target;
}

bool PolicyRegistry::has(const std::string& name) const {
  if (entries_.count(name)) return true;
  auto it = aliases_.find(name);
  return it != aliases_.end() && entries_.count(it->second);
}

const Policy& PolicyRegistry::get(const std::string& name) const {
  auto direct = entries_.find(name);
  if (direct != entries_.end()) return *direct->second;
  auto alias = aliases_.find(name);
  if (alias != aliases_.end()) {
    auto target = entries_.find(alias->second);
    if (target != entries_.end()) return *target->second;
  }
  raise(ErrorCode::UnknownPolicy,
        "no policy registered under '" + name + "'");
}

PolicyRegistry PolicyRegistry::with_builtins() {
  PolicyRegistry registry;
  registry.register_policy(make_uniform_policy());
  registry.register_policy(make_inorder_policy());
  registry.register_policy(make_epsilon_greedy_policy());
  registry.register_policy(make_ucb1_policy());
  registry.register_policy(make_thompson_policy());
  return registry;
}

std::shared_ptr<Policy> make_uniform_policy() {
  return std::make_shared<UniformPolicy>();
}
std::shared_ptr<Policy> make_inorder_policy() {
  return std::make_shared<InorderPolicy>();
}
std::shared_ptr<Policy> make_epsilon_greedy_policy(double epsilon) {
  return std::make_shared<EpsilonGreedyPolicy>(epsilon);
}
std::shared_ptr<Policy> make_ucb1_policy() {
  return std::make_shared<Ucb1Policy>();
}
std::shared_ptr<Policy> make_thompson_policy() {
  return std::make_shared<ThompsonPolicy>();
}

Resolution constrained_sample(
    const std::function<MapAssignment(Rng&)>& propose,
    bool proposer_deterministic,
    const std::function<bool(const MapAssignment&)>& accepts,
    int max_rejections,
    const std::function<std::vector<MapAssignment>()>& enumerate_feasible,
    const std::function<std::size_t(const std::vector<MapAssignment>&, Rng&)>&
        fallback_pick,
    Rng& rng) {
  if (max_rejections < 1) {
    raise(ErrorCode::DomainError, "max_rejections must be >= 1");
  }
  // A deterministic proposer cannot improve on retry.
  int budget = proposer_deterministic ? 1 : max_rejections;
  int attempts = 0;
  for (int i = 0; i < budget; ++i) {
    ++attempts;
    MapAssignment candidate = propose(rng);
    if (accepts(candidate)) {
      Resolution resolution;
      resolution.assignment = std::move(candidate);
      resolution.proposal_rank = attempts;
      return resolution;
    }
  }

  std::vector<MapAssignment> feasible;
  try {
    feasible = enumerate_feasible();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::TooLarge) {
      raise(ErrorCode::SearchSpaceTooLarge,
            "rejection budget exhausted and the space is too large to "
            "enumerate");
    }
    throw;
  }
  if (feasible.empty()) {
    raise(ErrorCode::Infeasible, "no assignment satisfies the constraints");
  }
  std::size_t pick = fallback_pick(feasible, rng);
  Resolution resolution;
  resolution.assignment = feasible[pick];
  resolution.proposal_rank = attempts + 1;
  return resolution;
}

std::size_t resolve_choice(const ChoiceDoF& dof, const std::string& policy_name,
                           const PolicyRegistry& registry,
                           const StatsSnapshot& stats, Rng& rng) {
  std::vector<std::size_t> all(dof.alternatives.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return resolve_choice_among(dof, all, policy_name, registry, stats, rng);
}

std::size_t resolve_choice_among(const ChoiceDoF& dof,
                                 const std::vector<std::size_t>& feasible,
                                 const std::string& policy_name,
                                 const PolicyRegistry& registry,
                                 const StatsSnapshot& stats, Rng& rng) {
  if (feasible.empty()) {
    raise(ErrorCode::Infeasible,
          "no alternative of '" + dof.id + "' satisfies the constraints");
  }
  const Policy& policy = registry.get(policy_name);
  ChoiceView view;
  view.dof_id = &dof.id;
  for (std::size_t index : feasible) {
    view.alternative_ids.push_back(dof.alternatives[index].id);
    ArmStats arm =
        stats.get(ArmKey{dof.id, DofKind::Choice, dof.alternatives[index].id, 0});
    view.total_plays += arm.impressions;
    view.arms.push_back(arm);
  }
  std::size_t picked = policy.choose(view, rng);
  if (picked >= feasible.size()) {
    raise(ErrorCode::Internal, "policy returned an out-of-range index");
  }
  return feasible[picked];
}

Resolution resolve_map(const MapDoF& dof, const std::vector<Item>& items,
                       const std::vector<CompiledConstraint>& constraints,
                       const std::string& policy_name,
                       const PolicyRegistry& registry,
                       const StatsSnapshot& stats, Rng& rng,
                       const MapResolveParams& params) {
  int k = dof.positions();
  if (static_cast<int>(items.size()) < k) {
    raise(ErrorCode::PoolTooSmall,
          "pool of " + std::to_string(items.size()) + " items cannot fill " +
              std::to_string(k) + " positions of '" + dof.id + "'");
  }
  const Policy& policy = registry.get(policy_name);

  MapView view;
  view.dof_id = &dof.id;
  view.items = items;
  view.k = k;
  view.stats = &stats;
  view.total_plays = stats.dof_impressions(dof.id);
  view.fill_arm_matrix();

  int columns = params.columns.value_or(dof.columns.value_or(1));
  auto attr_view = catalog_view(items);
  EvalContext base_ctx;
  base_ctx.catalog_view = &attr_view;
  base_ctx.columns = columns;
  base_ctx.query_attrs = params.query_attrs;

  auto accepts = [&](const MapAssignment& assignment) {
    EvalContext ctx = base_ctx;
    ctx.assignment = assignment_ids(view, assignment);
    return check_scope(constraints, ctx).ok;
  };
  // Cache key covers everything feasibility depends on: pool content
  // and order, position count, grid width and constraint sources.
  std::uint64_t cache_key = fnv1a64(dof.id);
  cache_key = fnv1a64_u64(static_cast<std::uint64_t>(k), cache_key);
  cache_key = fnv1a64_u64(static_cast<std::uint64_t>(columns), cache_key);
  for (const CompiledConstraint& constraint : constraints) {
    cache_key = fnv1a64(constraint.expr.source(), cache_key);
  }
  if (params.query_attrs) {
    for (const auto& [name, value] : *params.query_attrs) {
      cache_key = fnv1a64(name, cache_key);
      if (const auto* s = std::get_if<std::string>(&value)) {
        cache_key = fnv1a64(*s, cache_key);
      }
    }
  }
  for (const Item& item : items) {
    cache_key = fnv1a64(item.id, cache_key);
    for (const auto& [name, value] : item.attributes) {
      cache_key = fnv1a64(name, cache_key);
      if (const auto* s = std::get_if<std::string>(&value)) {
        cache_key = fnv1a64(*s, cache_key);
      } else if (const auto* d = std::get_if<double>(&value)) {
        std::uint64_t bits;
        static_assert(sizeof(bits) == sizeof(*d));
        std::memcpy(&bits, d, sizeof(bits));
        cache_key = fnv1a64_u64(bits, cache_key);
      } else {
        cache_key = fnv1a64_u64(std::get<bool>(value) ? 1 : 0, cache_key);
      }
    }
  }

  auto enumerate = [&]() -> std::vector<MapAssignment> {
    if (params.cache) {
      if (auto cached = params.cache->lookup(dof.id, cache_key)) {
        return *cached;
      }
    }
    std::vector<PoolItem> pool;
    pool.reserve(items.size());
    for (const Item& item : items) pool.push_back({item.id, &item.attributes});
    std::vector<MapAssignment> feasible;
    enumerate_assignments(pool, k, constraints, columns, params.query_attrs,
                          [&](const MapAssignment& candidate, bool ok) {
                            if (ok) feasible.push_back(candidate);
                          });
    if (params.cache) {
      params.cache->store(
          dof.id, cache_key,
          std::make_shared<const std::vector<MapAssignment>>(feasible));
    }
    return feasible;
  };

  Resolution resolution = constrained_sample(
      [&](Rng& r) { return policy.propose(view, r); }, policy.deterministic(),
      accepts, params.max_rejections, enumerate,
      [&](const std::vector<MapAssignment>& feasible, Rng& r) {
        return policy.pick_feasible(view, feasible, r);
      },
      rng);

  // Zero-violation guarantee, asserted on every return.
  if (!accepts(resolution.assignment)) {
    raise(ErrorCode::Internal,
          "resolver produced a constraint-violating assignment for '" +
              dof.id + "'");
  }
  return resolution;
}

}  // namespace potl
