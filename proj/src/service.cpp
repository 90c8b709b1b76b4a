#include "potl/service.hpp"

#include <ctime>
#include <filesystem>
#include <nlohmann/json.hpp>

#include "potl/errors.hpp"
#include "potl/util.hpp"

namespace potl {

namespace {

using nlohmann::json;

}  // namespace

std::unique_ptr<Engine> Engine::from_config_file(const std::string& path) {
  return from_config(load_config_file(path));
}

std::unique_ptr<Engine> Engine::from_config(EngineConfig config) {
  std::unique_ptr<Engine> engine(new Engine());
  engine->config_ = std::move(config);
  const EngineConfig& cfg = engine->config_;

  engine->model_ = parse_potl(read_file(cfg.model_path));
  ValidationReport report = validate_model(engine->model_);
  if (!report.ok()) {
    const ValidationIssue* first = nullptr;
    for (const auto& issue : report.issues) {
      if (issue.severity == ValidationIssue::Severity::Error) {
        first = &issue;
        break;
      }
    }
    raise(ErrorCode::SchemaViolation,
          "model failed validation: " + (first ? first->message : ""),
          first ? first->path : "");
  }

  if (!cfg.layout_path.empty()) {
    engine->layout_ = parse_layout_html(read_file(cfg.layout_path));
    engine->binding_ =
        bind_regions(*engine->layout_, engine->model_, cfg.aliases);
  }

  for (const auto& [name, spec] : cfg.fetchers) {
    if (spec.type == "catalog") {
      engine->fetchers_.register_fetcher(name, make_catalog_fetcher(spec.path));
    } else if (spec.type == "const") {
      engine->fetchers_.register_fetcher(name, make_const_fetcher(spec.items));
    } else {
      engine->fetchers_.register_fetcher(
          name, make_http_fetcher(spec.url, spec.timeout_ms));
    }
  }
  engine->policies_ = PolicyRegistry::with_builtins();

  if (!cfg.user_model_path.empty()) {
    engine->user_model_ =
        parse_user_model_json(read_file(cfg.user_model_path));
  }

  FeedbackOptions store_options;
  store_options.instance_capacity = cfg.instance_capacity;
  store_options.dedup_window = cfg.dedup_window;
  store_options.journal_path = cfg.journal_path;
  engine->store_ = std::make_unique<FeedbackStore>(store_options);

  // Recovery: restore the snapshot when present, then replay the journal
  // tail past the lines the snapshot already covers.
  std::size_t skip = 0;
  if (!cfg.snapshot_path.empty() &&
      std::filesystem::exists(cfg.snapshot_path)) {
    engine->store_->restore(cfg.snapshot_path);
    skip = engine->store_->journal_lines();
  }
  if (!cfg.journal_path.empty() && std::filesystem::exists(cfg.journal_path)) {
    engine->store_->replay(cfg.journal_path, skip);
  }
  return engine;
}

Registries Engine::registries() const {
  Registries r;
  r.fetchers = &fetchers_;
  r.policies = &policies_;
  r.renderers = &renderers_;
  r.feasible_cache = &feasible_cache_;
  return r;
}

PageInstance Engine::instantiate(const InstantiateRequest& request,
                                 bool record) {
  if (request.request_id.empty()) {
    raise(ErrorCode::DomainError, "request_id must not be empty");
  }
  Context ctx;
  ctx.request_id = request.request_id;
  ctx.user_id = request.user_id;
  ctx.now = config_.now ? *config_.now
                        : static_cast<std::int64_t>(std::time(nullptr));
  ctx.seed = request.seed
                 ? *request.seed
                 : fnv1a64_u64(config_.seed, fnv1a64(request.request_id));
  ctx.extra = request.extra;

  StatsSnapshot snapshot = store_->snapshot();
  PageInstance instance =
      potl::instantiate(model_, ctx, registries(), snapshot, config_.engine);
  if (record) {
    store_->record_serve(instance);
  }
  return instance;
}

std::string Engine::instantiate_json(const InstantiateRequest& request,
                                     bool record) {
  return render_json(instantiate(request, record));
}

std::string Engine::render_instance_html(const PageInstance& instance) const {
  if (!layout_ || !binding_) {
    raise(ErrorCode::ConfigError, "no layout configured for HTML rendering");
  }
  return render_html(*layout_, *binding_, instance);
}

AttributionResult Engine::ingest(const Event& event) {
  return store_->ingest_event(event);
}

std::string Engine::stats_json(const std::optional<std::string>& dof_id) const {
  json arms = json::object();
  for (const auto& [key, stats] : store_->arms(dof_id)) {
    json row{{"impressions", stats.impressions},
             {"clicks", stats.clicks},
             {"alpha", stats.alpha()},
             {"beta", stats.beta()}};
    if (stats.impressions > 0) row["ctr"] = ctr(stats);
    arms[key.serialize()] = row;
  }
  json j{{"arms", arms},
         {"generation", store_->generation()},
         {"serves", store_->serve_count()}};
  if (dof_id) j["dof"] = *dof_id;
  return j.dump();
}

SimReport Engine::run_simulation(const SimOptions& options) const {
  if (!user_model_) {
    raise(ErrorCode::ConfigError, "no user model configured for simulation");
  }
  SimOptions effective = options;
  effective.now = config_.now.value_or(0);
  return simulate(model_, registries(), *user_model_, effective,
                  config_.engine);
}

const UserModel* Engine::user_model() const {
  return user_model_ ? &*user_model_ : nullptr;
}

void Engine::flush() {
  if (!config_.snapshot_path.empty()) {
    store_->persist(config_.snapshot_path);
  }
}

bool Engine::post_hoc_check(const PageInstance& instance) const {
  return verify_instance(model_, registries(), instance, config_.engine);
}

}  // namespace potl
