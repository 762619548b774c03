#pragma once

// Minimal XML element tree: parsing through expat, canonical serialization.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "docstruct/core.hpp"

namespace docstruct::xml {

class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t line, std::size_t column, std::size_t byte)
      : Error("XML parse error at line " + std::to_string(line) + ", column " + std::to_string(column) +
              " (byte " + std::to_string(byte) + "): " + message),
        line_(line), column_(column), byte_(byte) {}
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }
  std::size_t byte_offset() const { return byte_; }

 private:
  std::size_t line_, column_, byte_;
};

struct Node {
  enum class Kind { element, text };
  Kind kind = Kind::element;
  std::string name;  // element tag
  std::vector<std::pair<std::string, std::string>> attributes;  // in document order
  std::string text;  // text nodes only
  std::vector<Node> children;

  static Node element(std::string name) { return Node{Kind::element, std::move(name), {}, {}, {}}; }
  static Node text_node(std::string text) { return Node{Kind::text, {}, {}, std::move(text), {}}; }

  bool is_element() const { return kind == Kind::element; }
  const std::string* attribute(std::string_view key) const;
  /// Sets or replaces.
  void set_attribute(std::string key, std::string value);
  void remove_attribute(std::string_view key);
  /// Concatenated text of the direct text children.
  std::string own_text() const;
  /// Concatenated text of all descendant text nodes.
  std::string deep_text() const;

  bool operator==(const Node&) const = default;
};

/// Parses a complete document and returns its root element. Whitespace-only text
/// between elements is dropped. Throws ParseError with the location of the fault.
Node parse(std::string_view text);

/// Indented serialization with an XML declaration. Elements holding text are
/// written on one line so text content is preserved exactly.
std::string serialize(const Node& root);

std::string escape(std::string_view text, bool attribute);

}  // namespace docstruct::xml
