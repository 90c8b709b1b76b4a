#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "potl/constraints.hpp"  // Scalar, AttrMap
#include "potl/model.hpp"

namespace potl {

struct Item {
  std::string id;
  AttrMap attributes;
  double score = 0.0;
  std::optional<std::int64_t> created_at;  // epoch seconds
};

struct Catalog {
  std::string name;
  std::vector<Item> items;  // ids unique
};

struct FetchContext {
  std::int64_t now = 0;  // epoch seconds, for age_hours derivation
  std::map<std::string, std::string> extra;
};

/// A fetcher imports dynamic content for one operator at instantiation
/// time. Implementations must be reentrant or internally serialized.
class Fetcher {
 public:
  virtual ~Fetcher() = default;
  virtual std::vector<Item> fetch(const OperatorDef& op,
                                  const FetchContext& ctx) = 0;
};

class FetcherRegistry {
 public:
  /// Re-registration replaces the previous fetcher (and is logged).
  void register_fetcher(const std::string& name, std::shared_ptr<Fetcher> f);
  void register_alias(const std::string& name, const std::string& target);
  bool has(const std::string& name) const;

  /// Dispatches op.handler. Throws Error{UnknownHandler} for names never
  /// registered and Error{FetchFailed} (tagged with the operator id) when
  /// the fetcher itself fails. Applies the "number of items" upper bound
  /// (top score, ties by id) and derives age_hours.
  std::vector<Item> fetch(const OperatorDef& op, const FetchContext& ctx) const;

 private:
  std::shared_ptr<Fetcher> resolve(const std::string& name) const;
  std::map<std::string, std::shared_ptr<Fetcher>> entries_;
  std::map<std::string, std::string> aliases_;
};

/// Items sorted by score descending, ties by id ascending, truncated to
/// the first `bound` entries. Deterministic total order.
std::vector<Item> truncate_by_score(std::vector<Item> items, std::size_t bound);

/// Parses the catalog file format: a JSON array of
/// {"id": str, "score": num?, "attributes": {...}?, "created_at": iso8601?}.
std::vector<Item> parse_catalog_json(std::string_view text,
                                     const std::string& origin);

/// Reads a JSON catalog file on every fetch (content changes are picked
/// up in real time; identical content yields element-wise equal results).
std::shared_ptr<Fetcher> make_catalog_fetcher(std::string path);

/// Serves a fixed in-config item list.
std::shared_ptr<Fetcher> make_const_fetcher(std::vector<Item> items);

/// GETs a JSON item array; non-2xx or transport failure surfaces as
/// FetchFailed. url is split into host and path internally.
std::shared_ptr<Fetcher> make_http_fetcher(std::string url, int timeout_ms);

/// Attribute view keyed by item id, with age_hours already derived.
std::map<std::string, AttrMap> catalog_view(const std::vector<Item>& items);

}  // namespace potl
