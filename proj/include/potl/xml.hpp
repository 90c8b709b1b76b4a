#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace potl::xml {

/// Element of the XML 1.0 subset this project reads: tags, attributes,
/// text, CDATA and comments. No DTDs, no entity expansion, no
/// namespace-URI resolution (prefixes are part of the element name).
struct Node {
  std::string name;
  std::vector<std::pair<std::string, std::string>> attributes;
  std::vector<Node> children;
  std::string text;  // direct text content, CDATA included, trimmed
  std::size_t line = 0;

  const std::string* attribute(std::string_view key) const;
};

/// Parses a single-rooted document. Throws Error{MalformedDocument} with
/// a line-tagged message on broken input.
Node parse(std::string_view text);

}  // namespace potl::xml
