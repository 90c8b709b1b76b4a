#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>

#include "potl/config.hpp"
#include "potl/engine.hpp"
#include "potl/feedback.hpp"
#include "potl/layout.hpp"
#include "potl/simulator.hpp"

namespace potl {

struct InstantiateRequest {
  std::string request_id;
  std::optional<std::string> user_id;
  std::optional<std::uint64_t> seed;  // default: derived from (config seed, request id)
  std::map<std::string, std::string> extra;
};

/// Everything a running deployment needs in one place: parsed model,
/// optional layout binding, registries built from config, and the
/// feedback store (journal replayed on startup when configured).
class Engine {
 public:
  static std::unique_ptr<Engine> from_config_file(const std::string& path);
  static std::unique_ptr<Engine> from_config(EngineConfig config);

  const EngineConfig& config() const { return config_; }
  const PageModel& model() const { return model_; }
  Registries registries() const;

  /// Pure preview unless record is set; recording indexes the serve for
  /// later event attribution and journals it when persistence is on.
  PageInstance instantiate(const InstantiateRequest& request, bool record);
  std::string instantiate_json(const InstantiateRequest& request, bool record);

  /// Layout-bound HTML for an instance produced by this engine.
  std::string render_instance_html(const PageInstance& instance) const;

  AttributionResult ingest(const Event& event);
  FeedbackStore& store() { return *store_; }
  const FeedbackStore& store() const { return *store_; }

  /// Arm table as JSON, optionally restricted to one DoF.
  std::string stats_json(const std::optional<std::string>& dof_id) const;

  SimReport run_simulation(const SimOptions& options) const;
  const UserModel* user_model() const;

  /// Writes the stats snapshot when a snapshot path is configured.
  void flush();

  bool post_hoc_check(const PageInstance& instance) const;

 private:
  Engine() = default;

  EngineConfig config_;
  PageModel model_;
  std::optional<LayoutTree> layout_;
  std::optional<BindingMap> binding_;
  std::optional<UserModel> user_model_;
  FetcherRegistry fetchers_;
  PolicyRegistry policies_;
  RendererRegistry renderers_;
  mutable FeasibleSetCache feasible_cache_;
  std::unique_ptr<FeedbackStore> store_;
};

}  // namespace potl
