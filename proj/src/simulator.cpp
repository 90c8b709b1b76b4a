#include "potl/simulator.hpp"

#include <algorithm>
#include <nlohmann/json.hpp>
#include <sstream>

#include "potl/errors.hpp"
#include "potl/util.hpp"

namespace potl {

namespace {

using nlohmann::json;

std::string compact_resolution(const DofResolution& resolution) {
  if (const auto* map = std::get_if<MapResolution>(&resolution)) {
    std::string out;
    for (std::size_t i = 0; i < map->item_by_position.size(); ++i) {
      if (i) out += ",";
      out += map->item_by_position[i];
    }
    return out;
  }
  return std::get<ChoiceResolution>(resolution).alternative_id;
}

std::vector<CompiledConstraint> compile_scope(const PageModel& model,
                                              const DofRef& dof) {
  std::vector<CompiledConstraint> compiled;
  for (const ConstraintDecl& decl : constraints_in_scope(model, dof)) {
    compiled.push_back({decl.id, compile_constraint(decl.expression_text)});
  }
  return compiled;
}

double map_expected(const UserModel& user,
                    const std::vector<std::string>& item_by_position) {
  double total = 0.0;
  for (std::size_t i = 0; i < item_by_position.size(); ++i) {
    auto it = user.item_ctr.find(item_by_position[i]);
    double ctr = it == user.item_ctr.end() ? 0.0 : it->second;
    total += ctr * user.bias(static_cast<int>(i) + 1);
  }
  return total;
}

}  // namespace

double UserModel::bias(int position) const {
  if (position_bias.empty()) return 1.0;
  std::size_t index = static_cast<std::size_t>(position - 1);
  if (index >= position_bias.size()) return position_bias.back();
  return position_bias[index];
}

double UserModel::slot_probability(const SlotEntry& slot) const {
  if (slot.item_id && slot.position > 0) {
    auto it = item_ctr.find(*slot.item_id);
    double base = it == item_ctr.end() ? 0.0 : it->second;
    return base * bias(slot.position);
  }
  if (slot.alternative_id) {
    auto it = alternative_ctr.find(*slot.alternative_id);
    return it == alternative_ctr.end() ? 0.0 : it->second;
  }
  return 0.0;
}

UserModel parse_user_model_json(std::string_view text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    raise(ErrorCode::ConfigError, "user model is not a JSON object");
  }
  UserModel user;
  auto load_probs = [&](const char* key, std::map<std::string, double>& out) {
    if (!j.contains(key)) return;
    for (auto it = j[key].begin(); it != j[key].end(); ++it) {
      double p = it.value().get<double>();
      if (p < 0.0 || p > 1.0) {
        raise(ErrorCode::ConfigError,
              std::string(key) + "." + it.key() + " is outside [0, 1]");
      }
      out[it.key()] = p;
    }
  };
  load_probs("item_ctr", user.item_ctr);
  load_probs("alternative_ctr", user.alternative_ctr);
  if (j.contains("position_bias")) {
    for (const json& value : j["position_bias"]) {
      double b = value.get<double>();
      if (b < 0.0 || b > 1.0) {
        raise(ErrorCode::ConfigError, "position_bias entry outside [0, 1]");
      }
      user.position_bias.push_back(b);
    }
  }
  return user;
}

OracleResult oracle_best_map(const UserModel& user,
                             const std::vector<Item>& items, int k,
                             const std::vector<CompiledConstraint>& constraints,
                             int columns) {
  std::vector<PoolItem> pool;
  pool.reserve(items.size());
  for (const Item& item : items) pool.push_back({item.id, &item.attributes});

  OracleResult best;
  bool found = false;
  enumerate_assignments(
      pool, k, constraints, columns, nullptr,
      [&](const MapAssignment& assignment, bool feasible) {
        if (!feasible) return;
        double expected = 0.0;
        for (std::size_t i = 0; i < assignment.size(); ++i) {
          auto it = user.item_ctr.find(items[assignment[i]].id);
          double ctr = it == user.item_ctr.end() ? 0.0 : it->second;
          expected += ctr * user.bias(static_cast<int>(i) + 1);
        }
        if (!found || expected > best.expected_clicks) {
          best.assignment = assignment;
          best.expected_clicks = expected;
          found = true;
        }
      });
  if (!found) {
    raise(ErrorCode::Infeasible, "no feasible assignment for the oracle");
  }
  return best;
}

OracleResult oracle_best_choice(const UserModel& user,
                                const std::vector<std::string>& alternative_ids) {
  if (alternative_ids.empty()) {
    raise(ErrorCode::Infeasible, "no feasible alternative for the oracle");
  }
  OracleResult best;
  for (std::size_t i = 0; i < alternative_ids.size(); ++i) {
    auto it = user.alternative_ctr.find(alternative_ids[i]);
    double expected = it == user.alternative_ctr.end() ? 0.0 : it->second;
    if (i == 0 || expected > best.expected_clicks) {
      best.choice_index = i;
      best.expected_clicks = expected;
    }
  }
  return best;
}

SimReport simulate(const PageModel& model, const Registries& registries,
                   const UserModel& user, const SimOptions& options,
                   const EngineOptions& engine_options) {
  if (options.serves < 1) {
    raise(ErrorCode::DomainError, "a simulation needs at least one serve");
  }

  EngineOptions effective = engine_options;
  if (options.policy_override) {
    effective.default_policy = *options.policy_override;
    effective.policy_aliases.clear();
    effective.policy_overrides.clear();
    for (const DofRef& dof : enumerate_dofs(model)) {
      effective.policy_overrides[dof.id] = *options.policy_override;
    }
  }

  // Per-DoF optimum under the hidden model, over each DoF's feasible set.
  FetchContext fc;
  fc.now = options.now;
  std::map<std::string, double> oracle_by_dof;
  bool oracle_available = true;
  for (const DofRef& dof : enumerate_dofs(model)) {
    std::vector<CompiledConstraint> constraints = compile_scope(model, dof);
    try {
      if (dof.kind == DofKind::Map) {
        std::vector<Item> items =
            registries.fetchers->fetch(dof.map->item_source, fc);
        auto columns_it = effective.columns_overrides.find(dof.id);
        int columns = columns_it != effective.columns_overrides.end()
                          ? columns_it->second
                          : dof.map->columns.value_or(1);
        oracle_by_dof[dof.id] =
            oracle_best_map(user, items, dof.map->positions(), constraints,
                            columns)
                .expected_clicks;
      } else {
        std::vector<std::size_t> feasible =
            feasible_alternatives(*dof.choice, constraints, nullptr);
        std::vector<std::string> ids;
        for (std::size_t index : feasible) {
          ids.push_back(dof.choice->alternatives[index].id);
        }
        oracle_by_dof[dof.id] = oracle_best_choice(user, ids).expected_clicks;
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::TooLarge) throw;
      oracle_available = false;
      oracle_by_dof[dof.id] = 0.0;
    }
  }

  SimReport report;
  report.window = options.window;
  report.oracle_available = oracle_available;
  for (const auto& [dof, value] : oracle_by_dof) {
    report.oracle_expected += value;
  }

  FeedbackOptions store_options;
  store_options.journal_path.clear();
  FeedbackStore store(store_options);

  Rng user_rng(fnv1a64_u64(options.seed, fnv1a64("user-model")));
  StatsSnapshot snapshot = store.snapshot();
  double cumulative_regret = 0.0;
  std::uint64_t window_clicks = 0;
  std::uint64_t window_serves = 0;

  for (std::uint64_t serve = 0; serve < options.serves; ++serve) {
    if (options.sync_every > 0 && serve % options.sync_every == 0) {
      snapshot = store.snapshot();
    }
    Context ctx;
    ctx.request_id = "sim-" + std::to_string(serve);
    ctx.now = options.now;
    ctx.seed = fnv1a64_u64(options.seed, fnv1a64(ctx.request_id));

    PageInstance instance;
    try {
      instance = instantiate(model, ctx, registries, snapshot, effective);
      store.record_serve(instance);
    } catch (const Error& e) {
      throw Error(e.code(),
                  "serve " + std::to_string(serve) + ": " + e.message(),
                  e.path());
    }
    if (options.on_serve) options.on_serve(instance);

    ServeRecord record;
    for (const auto& [dof, resolution] : instance.assignment.by_dof) {
      record.decisions[dof] = compact_resolution(resolution);
      record.oracle += oracle_by_dof.count(dof) ? oracle_by_dof[dof] : 0.0;
      if (const auto* map = std::get_if<MapResolution>(&resolution)) {
        record.expected += map_expected(user, map->item_by_position);
      } else {
        const auto& choice = std::get<ChoiceResolution>(resolution);
        auto it = user.alternative_ctr.find(choice.alternative_id);
        record.expected += it == user.alternative_ctr.end() ? 0.0 : it->second;
      }
    }

    for (const SlotEntry& slot : instance.slots) {
      double p = user.slot_probability(slot);
      if (p > 0.0 && user_rng.uniform() < p) {
        Event click;
        click.instance_id = instance.instance_id;
        click.token = slot.token;
        click.type = Event::Type::Click;
        click.at = options.now;
        store.ingest_event(click);
        ++record.clicks;
      }
    }

    report.total_clicks += record.clicks;
    window_clicks += record.clicks;
    ++window_serves;
    if (options.window > 0 && window_serves == options.window) {
      report.window_ctr.push_back(static_cast<double>(window_clicks) /
                                  static_cast<double>(window_serves));
      window_clicks = 0;
      window_serves = 0;
    }

    cumulative_regret += record.oracle - record.expected;
    report.regret.push_back(cumulative_regret);
    report.serve_log.push_back(std::move(record));
  }
  if (window_serves > 0) {
    report.window_ctr.push_back(static_cast<double>(window_clicks) /
                                static_cast<double>(window_serves));
  }
  report.serves = options.serves;
  report.final_arms = store.arms();
  return report;
}

std::vector<double> regret_curve(const SimReport& report) {
  std::vector<double> curve;
  curve.reserve(report.serve_log.size());
  double cumulative = 0.0;
  for (const ServeRecord& record : report.serve_log) {
    cumulative += record.oracle - record.expected;
    curve.push_back(cumulative);
  }
  return curve;
}

std::string SimReport::to_json() const {
  json arms = json::object();
  for (const auto& [key, stats] : final_arms) {
    arms[key.serialize()] = {{"impressions", stats.impressions},
                             {"clicks", stats.clicks},
                             {"alpha", stats.alpha()},
                             {"beta", stats.beta()}};
  }
  json j{{"serves", serves},
         {"total_clicks", total_clicks},
         {"window", window},
         {"window_ctr", window_ctr},
         {"regret", regret},
         {"oracle_expected", oracle_expected},
         {"oracle_available", oracle_available},
         {"final_arms", arms}};
  return j.dump();
}

std::string SimReport::series_csv() const {
  std::ostringstream out;
  out << "serve,expected,clicks,cumulative_regret\n";
  double cumulative = 0.0;
  for (std::size_t i = 0; i < serve_log.size(); ++i) {
    cumulative += serve_log[i].oracle - serve_log[i].expected;
    out << (i + 1) << "," << serve_log[i].expected << ","
        << serve_log[i].clicks << "," << cumulative << "\n";
  }
  return out.str();
}

}  // namespace potl
