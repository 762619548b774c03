#pragma once

// Document data model: entities, typed relations, page graphs and validated trees.

#include <compare>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace docstruct {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Page coordinates in pixels, origin top-left.
struct BBox {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  double area() const { return width() * height(); }
  double center_x() const { return 0.5 * (x0 + x1); }
  double center_y() const { return 0.5 * (y0 + y1); }
  bool valid() const;

  static BBox enclosing(const BBox& a, const BBox& b);
  static double intersection_area(const BBox& a, const BBox& b);

  bool operator==(const BBox&) const = default;
};

struct PageSize {
  double width = 0, height = 0;
  bool operator==(const PageSize&) const = default;
};

/// Semantic category of an entity. A thin value wrapper around the category name;
/// which names are admissible is decided by the active CategorySet.
class Category {
 public:
  Category() = default;
  explicit Category(std::string name) : name_(std::move(name)) {}
  const std::string& name() const { return name_; }
  auto operator<=>(const Category&) const = default;

 private:
  std::string name_;
};

namespace cat {
inline const Category article{"article"};
inline const Category author{"author"};
inline const Category background_figure{"background_figure"};
inline const Category column{"column"};
inline const Category text_block{"text_block"};
inline const Category document_root{"document_root"};
inline const Category figure{"figure"};
inline const Category figure_caption{"figure_caption"};
inline const Category figure_graphic{"figure_graphic"};
inline const Category footer{"footer"};
inline const Category footnote{"footnote"};
inline const Category header{"header"};
inline const Category heading{"heading"};
inline const Category item{"item"};
inline const Category itemize{"itemize"};
inline const Category meta{"meta"};
inline const Category ordered_group{"ordered_group"};
inline const Category page_nr{"page_nr"};
inline const Category row{"row"};
inline const Category table{"table"};
inline const Category table_of_contents{"table_of_contents"};
inline const Category tabular{"tabular"};
inline const Category unordered_group{"unordered_group"};
}  // namespace cat

/// Closed, ordered set of categories active for a dataset. The position of a category
/// is its index in learned tables.
class CategorySet {
 public:
  CategorySet() = default;
  explicit CategorySet(std::vector<Category> categories);

  /// The 23 magazine categories (default configuration).
  static const CategorySet& magazine();

  bool contains(const Category& c) const { return index_.contains(c.name()); }
  std::optional<std::size_t> index_of(const Category& c) const;
  /// Throws Error for names outside the set.
  Category parse(std::string_view name) const;
  std::size_t size() const { return categories_.size(); }
  const std::vector<Category>& categories() const { return categories_; }
  const Category& operator[](std::size_t i) const { return categories_[i]; }
  bool operator==(const CategorySet& o) const { return categories_ == o.categories_; }

 private:
  std::vector<Category> categories_;
  std::unordered_map<std::string, std::size_t> index_;
};

using EntityId = std::string;

struct Entity {
  EntityId id;
  Category category;
  BBox bbox;
  double confidence = 1.0;
  bool operator==(const Entity&) const = default;
};

// An OCR word with its box.
struct Word {
  std::string text;
  BBox bbox;
  bool operator==(const Word&) const = default;
};

enum class RelationType { parent_of, followed_by, null };

inline constexpr std::size_t kRelationTypeCount = 3;

std::string_view to_string(RelationType t);
RelationType relation_type_from_string(std::string_view s);

struct Relation {
  EntityId subject;
  EntityId object;
  RelationType type = RelationType::null;
  double confidence = 1.0;
  bool operator==(const Relation&) const = default;
};

/// Entities and relations predicted (or annotated) for one page. Checked on
/// construction; may still violate tree invariants.
class DocumentGraph {
 public:
  DocumentGraph() = default;
  /// Throws Error on duplicate ids, invalid boxes/confidences, self relations,
  /// dangling endpoints, or duplicate (subject, object, type) triples.
  DocumentGraph(PageSize page, std::vector<Entity> entities, std::vector<Relation> relations);

  const PageSize& page_size() const { return page_; }
  std::span<const Entity> entities() const { return entities_; }
  std::span<const Relation> relations() const { return relations_; }
  const Entity* find(std::string_view id) const;
  const Entity& at(std::string_view id) const;
  std::optional<std::size_t> index_of(std::string_view id) const;

  bool operator==(const DocumentGraph& o) const {
    return page_ == o.page_ && entities_ == o.entities_ && relations_ == o.relations_;
  }

 private:
  PageSize page_;
  std::vector<Entity> entities_;
  std::vector<Relation> relations_;
  std::unordered_map<std::string, std::size_t> index_;
};

enum class ViolationKind {
  no_root,
  multiple_roots,
  root_has_parent,
  missing_parent,
  multiple_parents,
  parent_cycle,
  symmetric_pair,
  followed_by_not_siblings,
  multiple_successors,
  multiple_predecessors,
  followed_by_cycle,
  unordered_sequence,
};

std::string_view to_string(ViolationKind k);

struct Violation {
  ViolationKind kind;
  std::vector<EntityId> entities;
  std::string detail;
  bool operator==(const Violation&) const = default;
};

struct ValidationOptions {
  // Also forbid followed_by among the children of an unordered_group.
  bool strict_unordered = false;
};

using ValidationReport = std::vector<Violation>;

/// Lists every violated tree invariant. Empty iff the graph is a valid document tree.
ValidationReport validate_tree(const DocumentGraph& g, ValidationOptions opts = {});

std::string describe(const ValidationReport& report);

class InvalidTree : public Error {
 public:
  explicit InvalidTree(ValidationReport report);
  const ValidationReport& report() const { return report_; }

 private:
  ValidationReport report_;
};

/// A DocumentGraph that passed validate_tree.
class DocumentTree {
 public:
  /// Throws InvalidTree listing the violations.
  static DocumentTree from_graph(DocumentGraph g, ValidationOptions opts = {});

  const DocumentGraph& graph() const { return graph_; }
  const EntityId& root() const { return root_; }
  /// Children of `parent` in reading order. Throws Error("no such entity: ...").
  std::vector<EntityId> children_in_order(std::string_view parent) const;
  std::optional<EntityId> parent_of(std::string_view id) const;
  std::optional<EntityId> successor_of(std::string_view id) const;

  bool operator==(const DocumentTree& o) const { return graph_ == o.graph_; }

 private:
  DocumentTree(DocumentGraph g, EntityId root);

  DocumentGraph graph_;
  EntityId root_;
  std::unordered_map<std::string, EntityId> parent_;
  std::unordered_map<std::string, std::vector<EntityId>> children_;
  std::unordered_map<std::string, EntityId> successor_;
};

std::vector<EntityId> children_in_order(const DocumentTree& t, std::string_view parent);

/// Same graph with entities sorted by id and relations by (subject, object, type);
/// for order-insensitive comparison.
DocumentGraph canonical(const DocumentGraph& g);

}  // namespace docstruct
