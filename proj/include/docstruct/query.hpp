#pragma once

// Path queries over hOCR documents with hierarchical extensions.
//
//   heading                                   node name search
//   /ocr_page/div[dsg_cat="article"]          absolute path from the page element
//   //div[@dsg_cat="tabular"]/*/div/span[text()="Kurse"]/..
//   followedby(//div[dsg_cat="heading"], '//div[dsg_cat="text_block"]')
//
// The full grammar is in docs/query.ebnf.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "docstruct/core.hpp"
#include "docstruct/json_io.hpp"
#include "docstruct/xml.hpp"

namespace docstruct::query {

class QueryError : public Error {
 public:
  QueryError(const std::string& message, std::size_t offset)
      : Error("query error at byte " + std::to_string(offset) + ": " + message), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

struct Predicate {
  enum class Kind { attribute, any_attribute, category, text };
  Kind kind = Kind::attribute;
  std::string name;  // attribute name for Kind::attribute
  std::string value;
};

struct Step {
  enum class Axis { child, descendant, parent };
  Axis axis = Axis::child;
  std::string name;  // "*" matches any element
  std::vector<Predicate> predicates;
};

struct Path {
  std::vector<Step> steps;
};

struct Query {
  enum class Kind { name, absolute, relative, followedby };
  Kind kind = Kind::relative;
  Path path;    // the first argument for followedby
  Path second;  // followedby only
};

/// Throws QueryError with the byte offset of the first offending character.
Query parse(std::string_view text);

/// Read-only view of the page element of an hOCR document. Nodes are numbered in
/// document order.
class Document {
 public:
  explicit Document(xml::Node page);
  /// Locates the page element inside a full hOCR document.
  static Document from_hocr(const xml::Node& root);
  static Document from_tree(const DocumentTree& t, std::span<const Word> words);

  std::size_t size() const { return nodes_.size(); }
  const xml::Node& node(std::size_t i) const { return *nodes_[i].node; }
  std::optional<std::size_t> parent(std::size_t i) const { return nodes_[i].parent; }
  const std::vector<std::size_t>& children(std::size_t i) const { return nodes_[i].children; }
  std::optional<std::size_t> find_entity(std::string_view dsg_id) const;

  Document(const Document&) = delete;
  Document& operator=(const Document&) = delete;
  Document(Document&&) = default;

 private:
  struct Entry {
    const xml::Node* node;
    std::optional<std::size_t> parent;
    std::vector<std::size_t> children;
  };
  xml::Node page_;
  std::vector<Entry> nodes_;
};

using NodeList = std::vector<std::size_t>;

/// Category names compare case-insensitively with punctuation dropped
/// ("orderedgroup" == "ordered_group"); "contentblock" names text_block.
std::string normalize_category(std::string_view name);

/// Nodes whose tag, hOCR class or category equals `name`.
NodeList query_name(const Document& doc, std::string_view name);
NodeList query_path(const Document& doc, const Path& path);
/// Nodes of `second` reachable from a node of `first` along followed_by links;
/// only the immediate successor when `direct`.
NodeList followedby(const Document& doc, const NodeList& first, const NodeList& second, bool direct = false);

NodeList evaluate(const Document& doc, const Query& q, bool direct = false);
NodeList evaluate(const Document& doc, std::string_view text, bool direct = false);

/// Word texts under a node, in document order.
std::vector<std::string> words_under(const Document& doc, std::size_t node);

/// [{id, category, bbox, text}] per node.
Json to_json(const Document& doc, const NodeList& nodes);

}  // namespace docstruct::query
