#pragma once

// Grammar-based repair of predicted page graphs into valid document trees.
//
// Stages run in sequence:
//   root skeleton      ensure document_root / meta (and article for orphaned content)
//   illegal relations  drop relations that break the document grammar
//   missing parents    give every parentless entity its best legal parent

#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "docstruct/core.hpp"
#include "docstruct/json_io.hpp"
#include "docstruct/relhead.hpp"

namespace docstruct::grammar {

enum class Stage { root, illegal, missing };
enum class Action { added_entity, removed_entity, removed_relation, added_relation, retyped };

std::string_view to_string(Stage s);
std::string_view to_string(Action a);

struct Repair {
  Stage stage = Stage::root;
  Action action = Action::added_entity;
  std::string rule;
  std::optional<Entity> entity;
  std::optional<Relation> relation;
  // For conflict removals: the surviving relations the removed one lost against.
  std::vector<Relation> competitors;

  bool operator==(const Repair&) const = default;
};

using RepairTrace = std::vector<Repair>;

/// parent_of probabilities for (subject, object) pairs.
class ScoreTable {
 public:
  ScoreTable() = default;
  explicit ScoreTable(std::span<const relhead::PairScore> scores);
  void set(const EntityId& subject, const EntityId& object, double parent_of_probability);
  std::optional<double> parent_score(const EntityId& subject, const EntityId& object) const;
  bool empty() const { return scores_.empty(); }

 private:
  std::map<std::pair<EntityId, EntityId>, double> scores_;
};

struct Options {
  // Also forbid followed_by among children of unordered groups.
  bool strict_unordered = false;
};

DocumentGraph add_root_skeleton(const DocumentGraph& g, RepairTrace* trace = nullptr);
DocumentGraph remove_illegal(const DocumentGraph& g, RepairTrace* trace = nullptr, Options opts = {});
/// Without a score table, candidates rank by category plausibility, then how much
/// of the orphan they contain, then vertical distance, then smaller area.
DocumentTree complete_missing(const DocumentGraph& g, const ScoreTable* scores,
                              RepairTrace* trace = nullptr, Options opts = {});

struct Result {
  DocumentTree tree;
  RepairTrace trace;
};

/// Valid input is returned unchanged with an empty trace.
Result postprocess(const DocumentGraph& g, const ScoreTable* scores = nullptr, Options opts = {});

/// Applies a trace to the graph it was recorded on.
DocumentGraph replay(const DocumentGraph& g, const RepairTrace& trace);

Json to_json(const RepairTrace& trace);
RepairTrace trace_from_json(const Json& j, const CategorySet& categories = CategorySet::magazine());

}  // namespace docstruct::grammar
