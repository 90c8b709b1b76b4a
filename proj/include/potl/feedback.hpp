#pragma once

#include <cstdint>
#include <deque>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "potl/engine.hpp"
#include "potl/resolvers.hpp"

namespace potl {

struct Event {
  std::string instance_id;
  std::optional<std::string> token;  // absent for page-level impressions
  enum class Type { Impression, Click };
  Type type = Type::Impression;
  std::int64_t at = 0;  // epoch seconds

  std::string identity() const;  // dedup key: instance, token, type, at
};

struct AttributionResult {
  std::vector<ArmKey> updated;
  bool dead_lettered = false;
  std::string reason;  // dead-letter reason when set
};

struct DeadLetter {
  std::string reason;
  std::string event_json;
};

struct FeedbackOptions {
  std::size_t instance_capacity = 100'000;  // LRU bound on indexed instances
  std::size_t dedup_window = 65'536;        // event identities remembered
  std::string journal_path;                 // empty disables journaling
};

/// Single-writer reward store: serves and events serialize through the
/// store mutex; policies only ever read immutable snapshots.
class FeedbackStore {
 public:
  FeedbackStore() = default;
  explicit FeedbackStore(FeedbackOptions options);

  /// Indexes the instance and credits one impression to every arm it
  /// exercised. Throws Error{DuplicateInstance} on an already-recorded id.
  void record_serve(const PageInstance& instance);

  /// Click attribution: the arm serving the token's slot plus every
  /// ancestor choice decision on the path. Unknown instance/token and
  /// malformed events dead-letter; nothing is fatal.
  AttributionResult ingest_event(const Event& event);

  StatsSnapshot snapshot() const;
  std::uint64_t generation() const;

  void persist(const std::string& path) const;  // throws StorageError
  static std::map<ArmKey, ArmStats> load_arms(const std::string& path,
                                              std::uint64_t* generation_out,
                                              std::uint64_t* journal_lines_out);
  /// Restores arms from a snapshot file produced by persist().
  void restore(const std::string& path);

  /// Replays a journal file (serve + event lines) into this store,
  /// starting after `skip_lines`. Returns lines applied.
  std::size_t replay(const std::string& journal_path,
                     std::size_t skip_lines = 0);

  std::size_t dead_letter_count() const;
  std::vector<DeadLetter> dead_letters(std::size_t max_entries = 100) const;
  std::uint64_t serve_count() const;
  std::size_t journal_lines() const { return journal_lines_; }

  /// Arm table rows, optionally restricted to one DoF.
  ArmTable arms(const std::optional<std::string>& dof_id = {}) const;

 private:
  struct IndexedInstance {
    // token -> arms credited by a click on that slot
    std::map<std::string, std::vector<ArmKey>> token_arms;
  };

  void publish_locked();
  void journal_append(const std::string& line);
  AttributionResult ingest_locked(const Event& event, bool journal);
  void record_locked(const PageInstance& instance, bool journal);
  void dead_letter_locked(const Event& event, std::string reason);

  mutable std::mutex mu_;
  FeedbackOptions options_;
  ArmTable live_;
  std::shared_ptr<const ArmTable> published_ = std::make_shared<ArmTable>();
  std::uint64_t generation_ = 0;
  std::uint64_t serves_ = 0;
  std::size_t journal_lines_ = 0;

  std::map<std::string, IndexedInstance> instances_;
  std::list<std::string> lru_;  // most recent at back
  std::map<std::string, std::list<std::string>::iterator> lru_pos_;

  std::deque<std::string> dedup_order_;
  std::set<std::string> dedup_seen_;

  std::deque<DeadLetter> dead_;
  std::uint64_t dead_total_ = 0;
};

/// clicks / impressions; Error{DomainError} on zero impressions.
double ctr(const ArmStats& arm);

std::string event_to_json(const Event& event);
/// Strict shape check; returns nullopt (with reason) on malformed input.
std::optional<Event> event_from_json(std::string_view text,
                                     std::string* reason = nullptr);

/// All arms a click on this slot credits: the slot's own arm (if any)
/// plus one arm per ancestor choice decision, resolved through the
/// instance assignment.
std::vector<ArmKey> slot_click_arms(const PageInstance& instance,
                                    const SlotEntry& slot);

/// Arms receiving a serve-time impression: every choice decision and
/// every (map, item, position) pair the instance exercised.
std::vector<ArmKey> impression_arms(const PageInstance& instance);

}  // namespace potl
