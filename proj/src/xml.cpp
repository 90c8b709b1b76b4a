#include "potl/xml.hpp"

#include <cctype>

#include "potl/errors.hpp"
#include "potl/util.hpp"

namespace potl::xml {

namespace {

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  Node parse_document() {
    skip_misc();
    if (eof()) fail("empty document");
    Node root = parse_element();
    skip_misc();
    if (!eof()) fail("trailing content after document element");
    return root;
  }

 private:
  [[noreturn]] void fail(const std::string& message) const {
    raise(ErrorCode::MalformedDocument,
          message + " at line " + std::to_string(line_));
  }

  bool eof() const { return pos_ >= text_.size(); }
  char peek() const { return text_[pos_]; }

  char advance() {
    char c = text_[pos_++];
    if (c == '\n') ++line_;
    return c;
  }

  bool consume(std::string_view token) {
    if (text_.substr(pos_, token.size()) != token) return false;
    for (std::size_t i = 0; i < token.size(); ++i) advance();
    return true;
  }

  void skip_ws() {
    while (!eof() && std::isspace(static_cast<unsigned char>(peek()))) advance();
  }

  // Whitespace, comments and the XML declaration between markup.
  void skip_misc() {
    for (;;) {
      skip_ws();
      if (consume("<!--")) {
        skip_comment_body();
      } else if (consume("<?")) {
        while (!eof() && !consume("?>")) advance();
      } else {
        return;
      }
    }
  }

  void skip_comment_body() {
    while (!eof()) {
      if (consume("-->")) return;
      advance();
    }
    fail("unterminated comment");
  }

  static bool is_name_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' ||
           c == '-' || c == ':' || c == '.';
  }

  std::string parse_name() {
    std::size_t start = pos_;
    while (!eof() && is_name_char(peek())) advance();
    if (pos_ == start) fail("expected a name");
    return std::string(text_.substr(start, pos_ - start));
  }

  std::string parse_attr_value() {
    if (eof() || (peek() != '"' && peek() != '\'')) {
      fail("expected quoted attribute value");
    }
    char quote = advance();
    std::size_t start = pos_;
    while (!eof() && peek() != quote) advance();
    if (eof()) fail("unterminated attribute value");
    std::string value(text_.substr(start, pos_ - start));
    advance();  // closing quote
    return value;
  }

  Node parse_element() {
    std::size_t open_line = line_;
    if (!consume("<")) fail("expected '<'");
    Node node;
    node.line = open_line;
    node.name = parse_name();

    for (;;) {
      skip_ws();
      if (eof()) fail("unterminated start tag <" + node.name + ">");
      if (consume("/>")) return node;
      if (consume(">")) break;
      std::string key = parse_name();
      for (const auto& [existing, _] : node.attributes) {
        if (existing == key) {
          fail("duplicate attribute '" + key + "' on <" + node.name + ">");
        }
      }
      skip_ws();
      if (!consume("=")) fail("expected '=' after attribute '" + key + "'");
      skip_ws();
      node.attributes.emplace_back(key, parse_attr_value());
    }

    std::string text_acc;
    for (;;) {
      if (eof()) fail("unterminated element <" + node.name + ">");
      if (consume("<![CDATA[")) {
        std::size_t start = pos_;
        while (!eof() && text_.substr(pos_, 3) != "]]>") advance();
        if (eof()) fail("unterminated CDATA section");
        text_acc += text_.substr(start, pos_ - start);
        consume("]]>");
      } else if (consume("<!--")) {
        skip_comment_body();
      } else if (consume("</")) {
        std::string closing = parse_name();
        if (closing != node.name) {
          fail("mismatched close tag </" + closing + "> for <" + node.name +
               "> opened at line " + std::to_string(open_line));
        }
        skip_ws();
        if (!consume(">")) fail("malformed close tag </" + closing + ">");
        node.text = trim(text_acc);
        return node;
      } else if (peek() == '<') {
        node.children.push_back(parse_element());
      } else {
        text_acc += advance();
      }
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
};

}  // namespace

const std::string* Node::attribute(std::string_view key) const {
  for (const auto& [k, v] : attributes) {
    if (k == key) return &v;
  }
  return nullptr;
}

Node parse(std::string_view text) { return Parser(text).parse_document(); }

}  // namespace potl::xml
