// Shared helpers for the unit and acceptance suites. Everything here is
// deliberately independent of the implementation paths it checks: oracle
// predicates are written directly against assignments, and the chi-square
// tail is computed from scratch.
#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "potl/constraints.hpp"
#include "potl/engine.hpp"
#include "potl/fetchers.hpp"
#include "potl/model.hpp"
#include "potl/resolvers.hpp"
#include "potl/util.hpp"

namespace testsupport {

inline std::string fixture_path(const std::string& name) {
  return std::string(POTL_FIXTURES_DIR) + "/" + name;
}

inline std::string read_fixture(const std::string& name) {
  return potl::read_file(fixture_path(name));
}

// ---------------------------------------------------------------------------
// Chi-square upper tail via the regularized incomplete gamma function
// (series for x < a+1, Lentz continued fraction otherwise).

inline double gamma_p_series(double a, double x) {
  double sum = 1.0 / a;
  double term = sum;
  for (int n = 1; n < 500; ++n) {
    term *= x / (a + n);
    sum += term;
    if (std::fabs(term) < std::fabs(sum) * 1e-15) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

inline double gamma_q_contfrac(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 500; ++i) {
    double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < 1e-15) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

/// P(Chi2_df >= x)
inline double chi2_sf(double x, double df) {
  double a = df / 2.0;
  double half = x / 2.0;
  if (half <= 0.0) return 1.0;
  if (half < a + 1.0) return 1.0 - gamma_p_series(a, half);
  return gamma_q_contfrac(a, half);
}

// ---------------------------------------------------------------------------
// Hand-coded predicates for the eight canonical constraint encodings,
// written directly against the assignment (no DSL involved).

using Assignment = std::vector<std::string>;
using CatalogView = std::map<std::string, potl::AttrMap>;

inline int position_of(const Assignment& a, const std::string& id) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == id) return static_cast<int>(i) + 1;
  }
  return 0;
}

inline const potl::Scalar* attr_of(const CatalogView& view,
                                   const std::string& id,
                                   const std::string& name) {
  auto item = view.find(id);
  if (item == view.end()) return nullptr;
  auto attr = item->second.find(name);
  if (attr == item->second.end()) return nullptr;
  return &attr->second;
}

inline bool string_attr_is(const CatalogView& view, const std::string& id,
                           const std::string& name, const std::string& want) {
  const potl::Scalar* value = attr_of(view, id, name);
  if (!value) return false;
  const auto* s = std::get_if<std::string>(value);
  return s && *s == want;
}

inline bool oracle_not_adjacent(const Assignment& a, const CatalogView&, int) {
  int mail = position_of(a, "mail");
  int messenger = position_of(a, "messenger");
  return !(mail != 0 && messenger != 0 && std::abs(mail - messenger) == 1);
}

inline bool oracle_travel_implies_weather(const Assignment& a,
                                          const CatalogView&, int) {
  return position_of(a, "travel") == 0 || position_of(a, "weather") != 0;
}

inline bool oracle_mail_first(const Assignment& a, const CatalogView&, int) {
  return position_of(a, "mail") == 1;
}

inline bool oracle_sport_cap(const Assignment& a, const CatalogView& view,
                             int) {
  int n = 0;
  for (const std::string& id : a) {
    if (string_attr_is(view, id, "category", "sport")) ++n;
  }
  return n <= 2;
}

inline bool oracle_geo_local(const Assignment& a, const CatalogView& view,
                             int) {
  for (const std::string& id : a) {
    if (string_attr_is(view, id, "geo_local", "yes")) return true;
  }
  return false;
}

inline bool oracle_fresh_lead(const Assignment& a, const CatalogView& view,
                              int) {
  if (a.empty()) return false;
  const potl::Scalar* value = attr_of(view, a[0], "age_hours");
  if (!value) return false;
  const auto* age = std::get_if<double>(value);
  return age && *age < 2.0;
}

inline bool oracle_celeb_cap(const Assignment& a, const CatalogView& view,
                             int) {
  int n = 0;
  for (const std::string& id : a) {
    if (string_attr_is(view, id, "category", "celeb")) ++n;
  }
  return n <= 3;
}

inline bool oracle_row_width(const Assignment& a, const CatalogView& view,
                             int columns) {
  std::map<int, int> per_row;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const potl::Scalar* value = attr_of(view, a[i], "word_count");
    const double* wc = value ? std::get_if<double>(value) : nullptr;
    if (wc && *wc > 2.0) {
      int row = (static_cast<int>(i) + columns) / columns;  // ceil((i+1)/c)
      ++per_row[row];
    }
  }
  for (const auto& [row, n] : per_row) {
    if (n > 1) return false;
  }
  return true;
}

struct CanonicalConstraint {
  const char* name;
  const char* dsl;
  bool (*oracle)(const Assignment&, const CatalogView&, int);
};

inline const std::vector<CanonicalConstraint>& canonical_constraints() {
  static const std::vector<CanonicalConstraint> table = {
      {"adjacency", "not adjacent(\"mail\", \"messenger\")",
       oracle_not_adjacent},
      {"travel-weather", "implies(contains(\"travel\"), contains(\"weather\"))",
       oracle_travel_implies_weather},
      {"mail-first", "position(\"mail\") = 1", oracle_mail_first},
      {"sport-cap", "count(item.category = \"sport\") <= 2", oracle_sport_cap},
      {"geo-local", "count(item.geo_local = \"yes\") >= 1", oracle_geo_local},
      {"fresh-lead", "attr(1, \"age_hours\") < 2", oracle_fresh_lead},
      {"celeb-cap", "count(item.category = \"celeb\") <= 3", oracle_celeb_cap},
      {"row-width", "max_per_row(item.word_count > 2) <= 1", oracle_row_width},
  };
  return table;
}

/// Randomized catalog over the six ids the encodings name, with
/// occasional missing attributes to exercise open-world semantics.
inline std::vector<potl::Item> make_oracle_catalog(int n, std::uint64_t seed) {
  static const char* ids[] = {"mail", "messenger", "travel",
                              "weather", "news", "sports"};
  std::mt19937_64 rng(seed);
  auto pick = [&](int bound) {
    return static_cast<int>(rng() % static_cast<std::uint64_t>(bound));
  };
  std::vector<potl::Item> items;
  for (int i = 0; i < n; ++i) {
    potl::Item item;
    item.id = ids[i];
    if (pick(4) != 0) {
      static const char* categories[] = {"sport", "celeb", "news"};
      item.attributes["category"] = std::string(categories[pick(3)]);
    }
    if (pick(4) != 0) {
      item.attributes["geo_local"] = std::string(pick(2) ? "yes" : "no");
    }
    if (pick(4) != 0) {
      static const double ages[] = {0.5, 1.9, 2.0, 5.0};
      item.attributes["age_hours"] = ages[pick(4)];
    }
    if (pick(4) != 0) {
      item.attributes["word_count"] = static_cast<double>(1 + pick(4));
    }
    items.push_back(std::move(item));
  }
  return items;
}

// ---------------------------------------------------------------------------
// Inline models and registries for bandit scenarios.

/// One region holding a single choice among `n` alternatives.
inline potl::PageModel make_choice_model(int n) {
  std::string text = "<layout label=\"ChoicePage\"><region label=\"R\">"
                     "<module label=\"M\"><source label=\"S\">"
                     "<apl:choice id=\"TheChoice\">";
  for (int i = 0; i < n; ++i) {
    std::string alt = "alt" + std::to_string(i + 1);
    text += "<apl:alternative id=\"" + alt + "\"><apl:operator id=\"op-" +
            alt + "\" handler=\"pool\" /></apl:alternative>";
  }
  text += "</apl:choice></source><renderer label=\"rr\" /></module>"
          "</region></layout>";
  return potl::parse_potl(text);
}

/// One region holding a single k-position map over the "pool" fetcher.
inline potl::PageModel make_map_model(int k) {
  std::string text = "<layout label=\"MapPage\"><region label=\"R\">"
                     "<module label=\"M\"><source label=\"S\">"
                     "<apl:map id=\"TheMap\" handler=\"thompson\">"
                     "<apl:operator id=\"op\" handler=\"pool\">"
                     "<property key=\"number of regions\" value=\"" +
                     std::to_string(k) + "\" /></apl:operator></apl:map>"
                     "</source><renderer label=\"rr\" /></module>"
                     "</region></layout>";
  return potl::parse_potl(text);
}

/// Registries with one const fetcher ("pool") and the builtin policies.
/// Keep the returned holder alive while its registries view is in use.
struct RegistryHolder {
  potl::FetcherRegistry fetchers;
  potl::PolicyRegistry policies;
  potl::RendererRegistry renderers;
  potl::FeasibleSetCache cache;

  potl::Registries view() {
    potl::Registries r;
    r.fetchers = &fetchers;
    r.policies = &policies;
    r.renderers = &renderers;
    r.feasible_cache = &cache;
    return r;
  }
};

inline std::unique_ptr<RegistryHolder> make_pool_registries(
    std::vector<potl::Item> items) {
  auto holder = std::make_unique<RegistryHolder>();
  holder->fetchers.register_fetcher(
      "pool", potl::make_const_fetcher(std::move(items)));
  holder->policies = potl::PolicyRegistry::with_builtins();
  return holder;
}

inline std::vector<potl::Item> numbered_items(int n, double top_score = 0.0) {
  std::vector<potl::Item> items;
  for (int i = 0; i < n; ++i) {
    potl::Item item;
    item.id = "i" + std::to_string(i + 1);
    item.score = top_score > 0.0 ? top_score - 0.05 * i : 0.0;
    item.attributes["title"] = "Item " + std::to_string(i + 1);
    items.push_back(std::move(item));
  }
  return items;
}

inline double slope_of(const std::vector<double>& series) {
  // Least-squares slope of series[i] against i+1.
  double n = static_cast<double>(series.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < series.size(); ++i) {
    double x = static_cast<double>(i + 1);
    sx += x;
    sy += series[i];
    sxx += x * x;
    sxy += x * series[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() /
           ("potl-test-" + tag + "-" + std::to_string(::getpid()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

}  // namespace testsupport
