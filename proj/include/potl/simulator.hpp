#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "potl/engine.hpp"
#include "potl/feedback.hpp"

namespace potl {

/// Hidden preference model driving synthetic users. Click probability of
/// a map slot is item_ctr[item] * position_bias[pos-1]; choice-selected
/// modules use alternative_ctr[alternative]. Bias indices past the end of
/// the list reuse the last entry (1.0 when the list is empty).
struct UserModel {
  std::map<std::string, double> item_ctr;
  std::vector<double> position_bias;
  std::map<std::string, double> alternative_ctr;

  double bias(int position) const;  // 1-based
  double slot_probability(const SlotEntry& slot) const;
};

UserModel parse_user_model_json(std::string_view text);

struct ServeRecord {
  double expected = 0.0;  // expected clicks of the served decisions
  double oracle = 0.0;    // optimum over the DoFs reached by this serve
  std::uint64_t clicks = 0;
  std::map<std::string, std::string> decisions;  // dof id -> compact resolution
};

struct SimReport {
  std::uint64_t serves = 0;
  std::uint64_t total_clicks = 0;
  std::size_t window = 0;
  std::vector<double> window_ctr;      // clicks per serve, by window
  std::vector<double> regret;          // cumulative, one entry per serve
  double oracle_expected = 0.0;        // per-serve optimum, summed over DoFs
  bool oracle_available = true;        // false when a pool exceeded the guard
  std::vector<ServeRecord> serve_log;
  ArmTable final_arms;

  std::string to_json() const;
  std::string series_csv() const;
};

struct SimOptions {
  std::uint64_t serves = 1;
  std::uint64_t seed = 0;
  std::uint64_t sync_every = 1;  // snapshot refresh cadence
  std::size_t window = 1000;
  std::optional<std::string> policy_override;  // forces one policy everywhere
  std::int64_t now = 0;
  // Invoked after each serve is recorded; used by post-hoc verification.
  std::function<void(const PageInstance&)> on_serve;
};

struct OracleResult {
  MapAssignment assignment;       // maps
  std::size_t choice_index = 0;   // choices
  double expected_clicks = 0.0;
};

/// Exhaustive maximization of expected clicks over the feasible set.
/// Guard P(n, k) <= 1e6; throws Error{TooLarge} beyond it.
OracleResult oracle_best_map(const UserModel& user,
                             const std::vector<Item>& items, int k,
                             const std::vector<CompiledConstraint>& constraints,
                             int columns = 1);
OracleResult oracle_best_choice(const UserModel& user,
                                const std::vector<std::string>& alternative_ids);

/// Closed loop: instantiate -> record serve -> Bernoulli clicks per slot
/// -> ingest events -> periodic snapshot refresh. Fully deterministic
/// per seed. Engine errors abort with the serve index in the message.
SimReport simulate(const PageModel& model, const Registries& registries,
                   const UserModel& user, const SimOptions& options,
                   const EngineOptions& engine_options = {});

/// Cumulative expected regret per serve, recomputed from the report.
std::vector<double> regret_curve(const SimReport& report);

}  // namespace potl
