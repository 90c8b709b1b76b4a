#include "potl/fetchers.hpp"

#include <algorithm>
#include <filesystem>
#include <httplib.h>
#include <mutex>
#include <iostream>
#include <nlohmann/json.hpp>
#include <set>

#include "potl/errors.hpp"
#include "potl/util.hpp"

namespace potl {

namespace {

using nlohmann::json;

class CatalogFetcher : public Fetcher {
 public:
  explicit CatalogFetcher(std::string path) : path_(std::move(path)) {}

  // Re-parsed whenever the file changes; unchanged files reuse the
  // parsed items so a hot serving loop is not IO-bound.
  std::vector<Item> fetch(const OperatorDef&, const FetchContext&) override {
    namespace fs = std::filesystem;
    std::error_code ec;
    auto mtime = fs::last_write_time(path_, ec);
    auto size = fs::file_size(path_, ec);
    std::lock_guard<std::mutex> lock(mu_);
    if (!ec && cached_ && mtime == mtime_ && size == size_) {
      return *cached_;
    }
    auto items = std::make_shared<std::vector<Item>>(
        parse_catalog_json(read_file(path_), path_));
    if (!ec) {
      cached_ = items;
      mtime_ = mtime;
      size_ = size;
    }
    return *items;
  }

 private:
  std::string path_;
  std::mutex mu_;
  std::shared_ptr<std::vector<Item>> cached_;
  std::filesystem::file_time_type mtime_{};
  std::uintmax_t size_ = 0;
};

class ConstFetcher : public Fetcher {
 public:
  explicit ConstFetcher(std::vector<Item> items) : items_(std::move(items)) {}

  std::vector<Item> fetch(const OperatorDef&, const FetchContext&) override {
    return items_;
  }

 private:
  std::vector<Item> items_;
};

class HttpFetcher : public Fetcher {
 public:
  HttpFetcher(std::string url, int timeout_ms)
      : url_(std::move(url)), timeout_ms_(timeout_ms) {}

  std::vector<Item> fetch(const OperatorDef&, const FetchContext&) override {
    std::string origin = url_;
    std::string path = "/";
    // Split "<scheme>://<host>[:port]</path...>".
    std::size_t scheme = url_.find("://");
    if (scheme != std::string::npos) {
      std::size_t slash = url_.find('/', scheme + 3);
      if (slash != std::string::npos) {
        origin = url_.substr(0, slash);
        path = url_.substr(slash);
      }
    }
    httplib::Client client(origin);
    client.set_connection_timeout(0, timeout_ms_ * 1000);
    client.set_read_timeout(0, timeout_ms_ * 1000);
    auto response = client.Get(path);
    if (!response) {
      raise(ErrorCode::FetchFailed, "GET " + url_ + " failed: " +
                                        httplib::to_string(response.error()));
    }
    if (response->status < 200 || response->status >= 300) {
      raise(ErrorCode::FetchFailed, "GET " + url_ + " returned status " +
                                        std::to_string(response->status));
    }
    return parse_catalog_json(response->body, url_);
  }

 private:
  std::string url_;
  int timeout_ms_;
};

}  // namespace

std::vector<Item> parse_catalog_json(std::string_view text,
                                     const std::string& origin) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    raise(ErrorCode::FetchFailed,
          "catalog is not valid JSON: " + std::string(e.what()), origin);
  }
  if (!doc.is_array()) {
    raise(ErrorCode::FetchFailed, "catalog must be a JSON array", origin);
  }
  std::vector<Item> items;
  std::set<std::string> seen;
  for (const json& entry : doc) {
    if (!entry.is_object() || !entry.contains("id") ||
        !entry["id"].is_string()) {
      raise(ErrorCode::FetchFailed, "catalog entry missing string id", origin);
    }
    Item item;
    item.id = entry["id"].get<std::string>();
    if (!seen.insert(item.id).second) {
      raise(ErrorCode::FetchFailed, "duplicate item id '" + item.id + "'",
            origin);
    }
    if (entry.contains("score")) {
      if (!entry["score"].is_number()) {
        raise(ErrorCode::FetchFailed, "score of '" + item.id + "' is not a number",
              origin);
      }
      item.score = entry["score"].get<double>();
    }
    if (entry.contains("created_at")) {
      auto ts = parse_iso8601(entry["created_at"].get<std::string>());
      if (!ts) {
        raise(ErrorCode::FetchFailed,
              "created_at of '" + item.id + "' is not ISO-8601 UTC", origin);
      }
      item.created_at = *ts;
    }
    if (entry.contains("attributes")) {
      const json& attrs = entry["attributes"];
      if (!attrs.is_object()) {
        raise(ErrorCode::FetchFailed,
              "attributes of '" + item.id + "' is not an object", origin);
      }
      for (auto it = attrs.begin(); it != attrs.end(); ++it) {
        const json& value = it.value();
        if (value.is_string()) {
          item.attributes[it.key()] = value.get<std::string>();
        } else if (value.is_boolean()) {
          item.attributes[it.key()] = value.get<bool>();
        } else if (value.is_number()) {
          item.attributes[it.key()] = value.get<double>();
        } else {
          raise(ErrorCode::FetchFailed,
                "attribute '" + it.key() + "' of '" + item.id +
                    "' is not a scalar",
                origin);
        }
      }
    }
    items.push_back(std::move(item));
  }
  return items;
}

std::vector<Item> truncate_by_score(std::vector<Item> items, std::size_t bound) {
  std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.id < b.id;
  });
  if (items.size() > bound) items.resize(bound);
  return items;
}

void FetcherRegistry::register_fetcher(const std::string& name,
                                       std::shared_ptr<Fetcher> f) {
  if (name.empty()) raise(ErrorCode::ConfigError, "fetcher name is empty");
  if (entries_.count(name)) {
    std::cerr << "[potl] fetcher '" << name << "' re-registered\n";
  }
  entries_[name] = std::move(f);
}

void FetcherRegistry::register_alias(const std::string& name,
                                     const std::string& target) {
  aliases_[name] = target;
}

bool FetcherRegistry::has(const std::string& name) const {
  if (entries_.count(name)) return true;
  auto it = aliases_.find(name);
  return it != aliases_.end() && entries_.count(it->second);
}

std::shared_ptr<Fetcher> FetcherRegistry::resolve(const std::string& name) const {
  auto direct = entries_.find(name);
  if (direct != entries_.end()) return direct->second;
  auto alias = aliases_.find(name);
  if (alias != aliases_.end()) {
    auto target = entries_.find(alias->second);
    if (target != entries_.end()) return target->second;
  }
  raise(ErrorCode::UnknownHandler, "no fetcher registered for handler '" +
                                       name + "'");
}

std::vector<Item> FetcherRegistry::fetch(const OperatorDef& op,
                                         const FetchContext& ctx) const {
  std::shared_ptr<Fetcher> fetcher = resolve(op.handler);
  std::vector<Item> items;
  try {
    items = fetcher->fetch(op, ctx);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::FetchFailed) {
      throw Error(ErrorCode::FetchFailed,
                  std::string(e.what()) + " [operator " + op.id + "]");
    }
    throw;
  } catch (const std::exception& e) {
    raise(ErrorCode::FetchFailed,
          std::string(e.what()) + " [operator " + op.id + "]");
  }

  std::set<std::string> seen;
  for (Item& item : items) {
    if (!seen.insert(item.id).second) {
      raise(ErrorCode::FetchFailed,
            "fetcher returned duplicate item id '" + item.id + "' [operator " +
                op.id + "]");
    }
    if (item.created_at) {
      double age_hours =
          static_cast<double>(ctx.now - *item.created_at) / 3600.0;
      item.attributes["age_hours"] = age_hours;
    }
  }

  if (auto bound = op.int_property("number of items"); bound && *bound >= 0) {
    if (items.size() > static_cast<std::size_t>(*bound)) {
      items = truncate_by_score(std::move(items),
                                static_cast<std::size_t>(*bound));
    }
  }
  return items;
}

std::shared_ptr<Fetcher> make_catalog_fetcher(std::string path) {
  return std::make_shared<CatalogFetcher>(std::move(path));
}

std::shared_ptr<Fetcher> make_const_fetcher(std::vector<Item> items) {
  return std::make_shared<ConstFetcher>(std::move(items));
}

std::shared_ptr<Fetcher> make_http_fetcher(std::string url, int timeout_ms) {
  return std::make_shared<HttpFetcher>(std::move(url), timeout_ms);
}

std::map<std::string, AttrMap> catalog_view(const std::vector<Item>& items) {
  std::map<std::string, AttrMap> view;
  for (const Item& item : items) view[item.id] = item.attributes;
  return view;
}

}  // namespace potl
