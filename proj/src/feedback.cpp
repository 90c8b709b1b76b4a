#include "potl/feedback.hpp"

#include <fstream>
#include <nlohmann/json.hpp>

#include "potl/errors.hpp"
#include "potl/util.hpp"

namespace potl {

namespace {

using nlohmann::json;

json arm_stats_json(const ArmStats& stats) {
  return {{"impressions", stats.impressions},
          {"clicks", stats.clicks},
          {"alpha", stats.alpha()},
          {"beta", stats.beta()}};
}

}  // namespace

std::string Event::identity() const {
  return instance_id + "\x1f" + token.value_or("") + "\x1f" +
         (type == Type::Click ? "click" : "impression") + "\x1f" +
         std::to_string(at);
}

double ctr(const ArmStats& arm) {
  if (arm.impressions == 0) {
    raise(ErrorCode::DomainError, "ctr is undefined at zero impressions");
  }
  return static_cast<double>(arm.clicks) / static_cast<double>(arm.impressions);
}

std::string event_to_json(const Event& event) {
  json j{{"instance_id", event.instance_id},
         {"type", event.type == Event::Type::Click ? "click" : "impression"},
         {"at", format_iso8601(event.at)}};
  if (event.token) j["token"] = *event.token;
  return j.dump();
}

std::optional<Event> event_from_json(std::string_view text,
                                     std::string* reason) {
  auto fail = [&](const std::string& why) -> std::optional<Event> {
    if (reason) *reason = why;
    return std::nullopt;
  };
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return fail("not a JSON object");
  if (!j.contains("instance_id") || !j["instance_id"].is_string()) {
    return fail("missing string instance_id");
  }
  if (!j.contains("type") || !j["type"].is_string()) {
    return fail("missing string type");
  }
  if (!j.contains("at") || !j["at"].is_string()) {
    return fail("missing string at");
  }
  Event event;
  event.instance_id = j["instance_id"].get<std::string>();
  std::string type = j["type"].get<std::string>();
  if (type == "click") {
    event.type = Event::Type::Click;
  } else if (type == "impression") {
    event.type = Event::Type::Impression;
  } else {
    return fail("type must be 'impression' or 'click'");
  }
  auto at = parse_iso8601(j["at"].get<std::string>());
  if (!at) return fail("at is not ISO-8601 UTC");
  event.at = *at;
  if (j.contains("token")) {
    if (!j["token"].is_string()) return fail("token is not a string");
    event.token = j["token"].get<std::string>();
  }
  if (event.type == Event::Type::Click && !event.token) {
    return fail("click events carry a token");
  }
  return event;
}

std::vector<ArmKey> slot_click_arms(const PageInstance& instance,
                                    const SlotEntry& slot) {
  std::vector<ArmKey> arms;
  if (slot.dof_id) {
    if (slot.item_id && slot.position > 0) {
      arms.push_back(
          {*slot.dof_id, DofKind::Map, *slot.item_id, slot.position});
    } else if (slot.alternative_id) {
      arms.push_back({*slot.dof_id, DofKind::Choice, *slot.alternative_id, 0});
    }
  }
  for (const std::string& choice_id : slot.ancestor_choices) {
    auto it = instance.assignment.by_dof.find(choice_id);
    if (it == instance.assignment.by_dof.end()) continue;
    if (const auto* choice = std::get_if<ChoiceResolution>(&it->second)) {
      arms.push_back({choice_id, DofKind::Choice, choice->alternative_id, 0});
    }
  }
  return arms;
}

std::vector<ArmKey> impression_arms(const PageInstance& instance) {
  std::vector<ArmKey> arms;
  for (const auto& [dof_id, resolution] : instance.assignment.by_dof) {
    if (const auto* map = std::get_if<MapResolution>(&resolution)) {
      for (std::size_t i = 0; i < map->item_by_position.size(); ++i) {
        arms.push_back({dof_id, DofKind::Map, map->item_by_position[i],
                        static_cast<int>(i) + 1});
      }
    } else {
      const auto& choice = std::get<ChoiceResolution>(resolution);
      arms.push_back({dof_id, DofKind::Choice, choice.alternative_id, 0});
    }
  }
  return arms;
}

FeedbackStore::FeedbackStore(FeedbackOptions options)
    : options_(std::move(options)) {}

void FeedbackStore::publish_locked() {
  published_ = std::make_shared<const ArmTable>(live_);
  ++generation_;
}

void FeedbackStore::journal_append(const std::string& line) {
  if (options_.journal_path.empty()) {
    ++journal_lines_;
    return;
  }
  std::ofstream out(options_.journal_path, std::ios::app);
  if (!out) {
    raise(ErrorCode::StorageError,
          "cannot append to journal: " + options_.journal_path);
  }
  out << line << "\n";
  if (!out) {
    raise(ErrorCode::StorageError,
          "short journal write: " + options_.journal_path);
  }
  ++journal_lines_;
}

void FeedbackStore::record_serve(const PageInstance& instance) {
  std::lock_guard<std::mutex> lock(mu_);
  record_locked(instance, true);
}

void FeedbackStore::record_locked(const PageInstance& instance, bool journal) {
  if (instances_.count(instance.instance_id)) {
    raise(ErrorCode::DuplicateInstance,
          "instance '" + instance.instance_id + "' already recorded");
  }

  IndexedInstance indexed;
  for (const SlotEntry& slot : instance.slots) {
    indexed.token_arms[slot.token] = slot_click_arms(instance, slot);
  }
  instances_[instance.instance_id] = std::move(indexed);
  lru_.push_back(instance.instance_id);
  lru_pos_[instance.instance_id] = std::prev(lru_.end());
  while (instances_.size() > options_.instance_capacity && !lru_.empty()) {
    const std::string& oldest = lru_.front();
    instances_.erase(oldest);
    lru_pos_.erase(oldest);
    lru_.pop_front();
  }

  for (const ArmKey& key : impression_arms(instance)) {
    ++live_[key].impressions;
  }
  ++serves_;
  if (journal) {
    json line{{"serve", json::parse(render_json(instance))}};
    journal_append(line.dump());
  }
  publish_locked();
}

AttributionResult FeedbackStore::ingest_event(const Event& event) {
  std::lock_guard<std::mutex> lock(mu_);
  return ingest_locked(event, true);
}

void FeedbackStore::dead_letter_locked(const Event& event, std::string reason) {
  dead_.push_back({std::move(reason), event_to_json(event)});
  ++dead_total_;
  while (dead_.size() > 10'000) dead_.pop_front();
}

AttributionResult FeedbackStore::ingest_locked(const Event& event,
                                               bool journal) {
  AttributionResult result;

  // Idempotence by event identity inside the configured window.
  std::string identity = event.identity();
  if (dedup_seen_.count(identity)) return result;
  dedup_seen_.insert(identity);
  dedup_order_.push_back(identity);
  while (dedup_order_.size() > options_.dedup_window) {
    dedup_seen_.erase(dedup_order_.front());
    dedup_order_.pop_front();
  }

  if (journal) journal_append(event_to_json(event));

  if (event.type == Event::Type::Click && !event.token) {
    result.dead_lettered = true;
    result.reason = "click without token";
    dead_letter_locked(event, result.reason);
    return result;
  }

  auto instance = instances_.find(event.instance_id);
  if (instance == instances_.end()) {
    result.dead_lettered = true;
    result.reason = "unknown or evicted instance";
    dead_letter_locked(event, result.reason);
    return result;
  }
  // Touch the LRU: the instance is demonstrably still alive.
  auto pos = lru_pos_.find(event.instance_id);
  if (pos != lru_pos_.end()) {
    lru_.erase(pos->second);
    lru_.push_back(event.instance_id);
    lru_pos_[event.instance_id] = std::prev(lru_.end());
  }

  if (event.type == Event::Type::Impression) {
    // Serve-time recording already credited impressions; page-level
    // impression events are accepted but move no arms.
    return result;
  }

  auto token = instance->second.token_arms.find(*event.token);
  if (token == instance->second.token_arms.end()) {
    result.dead_lettered = true;
    result.reason = "unknown token";
    dead_letter_locked(event, result.reason);
    return result;
  }

  for (const ArmKey& key : token->second) {
    ArmStats& arm = live_[key];
    // Capped so clicks <= impressions survives repeat clicks on one slot.
    if (arm.clicks < arm.impressions) {
      ++arm.clicks;
      result.updated.push_back(key);
    }
  }
  if (!result.updated.empty()) publish_locked();
  return result;
}

StatsSnapshot FeedbackStore::snapshot() const {
  std::lock_guard<std::mutex> lock(mu_);
  return StatsSnapshot(published_, generation_);
}

std::uint64_t FeedbackStore::generation() const {
  std::lock_guard<std::mutex> lock(mu_);
  return generation_;
}

void FeedbackStore::persist(const std::string& path) const {
  std::lock_guard<std::mutex> lock(mu_);
  json arms = json::object();
  for (const auto& [key, stats] : live_) {
    arms[key.serialize()] = arm_stats_json(stats);
  }
  json j{{"generation", generation_},
         {"journal_lines", journal_lines_},
         {"arms", arms}};
  try {
    write_file(path, j.dump(2) + "\n");
  } catch (const Error& e) {
    raise(ErrorCode::StorageError, e.message());
  }
}

std::map<ArmKey, ArmStats> FeedbackStore::load_arms(
    const std::string& path, std::uint64_t* generation_out,
    std::uint64_t* journal_lines_out) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    raise(ErrorCode::StorageError, e.message());
  }
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object() || !j.contains("arms")) {
    raise(ErrorCode::StorageError, "snapshot file has the wrong shape: " + path);
  }
  ArmTable arms;
  for (auto it = j["arms"].begin(); it != j["arms"].end(); ++it) {
    auto key = ArmKey::deserialize(it.key());
    if (!key) {
      raise(ErrorCode::StorageError, "bad arm key '" + it.key() + "'");
    }
    ArmStats stats;
    stats.impressions = it.value().at("impressions").get<std::uint64_t>();
    stats.clicks = it.value().at("clicks").get<std::uint64_t>();
    if (stats.clicks > stats.impressions) {
      raise(ErrorCode::StorageError,
            "snapshot violates clicks <= impressions for '" + it.key() + "'");
    }
    arms[*key] = stats;
  }
  if (generation_out) *generation_out = j.value("generation", std::uint64_t{0});
  if (journal_lines_out) {
    *journal_lines_out = j.value("journal_lines", std::uint64_t{0});
  }
  return arms;
}

void FeedbackStore::restore(const std::string& path) {
  std::uint64_t generation = 0;
  std::uint64_t lines = 0;
  ArmTable arms = load_arms(path, &generation, &lines);
  std::lock_guard<std::mutex> lock(mu_);
  live_ = std::move(arms);
  generation_ = generation;
  journal_lines_ = static_cast<std::size_t>(lines);
  published_ = std::make_shared<const ArmTable>(live_);
}

std::size_t FeedbackStore::replay(const std::string& journal_path,
                                  std::size_t skip_lines) {
  std::ifstream in(journal_path);
  if (!in) {
    raise(ErrorCode::StorageError, "cannot open journal: " + journal_path);
  }
  std::lock_guard<std::mutex> lock(mu_);
  std::size_t line_number = 0;
  std::size_t applied = 0;
  std::string line;
  while (std::getline(in, line)) {
    ++line_number;
    if (line_number <= skip_lines) continue;
    if (trim(line).empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      raise(ErrorCode::StorageError,
            "journal line " + std::to_string(line_number) + " is not JSON");
    }
    if (j.contains("serve")) {
      record_locked(parse_instance_json(j["serve"].dump()), false);
      ++journal_lines_;  // replayed lines keep their place in the count
    } else {
      std::string reason;
      auto event = event_from_json(line, &reason);
      if (!event) {
        raise(ErrorCode::StorageError, "journal line " +
                                           std::to_string(line_number) +
                                           " is malformed: " + reason);
      }
      ingest_locked(*event, false);
      ++journal_lines_;
    }
    ++applied;
  }
  return applied;
}

std::size_t FeedbackStore::dead_letter_count() const {
  std::lock_guard<std::mutex> lock(mu_);
  return static_cast<std::size_t>(dead_total_);
}

std::vector<DeadLetter> FeedbackStore::dead_letters(
    std::size_t max_entries) const {
  std::lock_guard<std::mutex> lock(mu_);
  std::vector<DeadLetter> out;
  std::size_t start =
      dead_.size() > max_entries ? dead_.size() - max_entries : 0;
  for (std::size_t i = start; i < dead_.size(); ++i) out.push_back(dead_[i]);
  return out;
}

std::uint64_t FeedbackStore::serve_count() const {
  std::lock_guard<std::mutex> lock(mu_);
  return serves_;
}

ArmTable FeedbackStore::arms(const std::optional<std::string>& dof_id) const {
  std::lock_guard<std::mutex> lock(mu_);
  if (!dof_id) return live_;
  ArmTable out;
  for (auto it = live_.lower_bound(ArmKey{*dof_id, DofKind::Map, "", 0});
       it != live_.end() && it->first.dof_id == *dof_id; ++it) {
    out.insert(*it);
  }
  return out;
}

}  // namespace potl
