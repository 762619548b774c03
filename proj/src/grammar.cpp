#include "docstruct/grammar.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>
#include <tuple>
#include <unordered_map>

namespace docstruct::grammar {

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::root: return "g_rt";
    case Stage::illegal: return "g_ilg";
    case Stage::missing: return "g_mis";
  }
  return "g_rt";
}

std::string_view to_string(Action a) {
  switch (a) {
    case Action::added_entity: return "added_entity";
    case Action::removed_entity: return "removed_entity";
    case Action::removed_relation: return "removed_relation";
    case Action::added_relation: return "added_relation";
    case Action::retyped: return "retyped";
  }
  return "added_entity";
}

ScoreTable::ScoreTable(std::span<const relhead::PairScore> scores) {
  for (const auto& s : scores) {
    set(s.subject, s.object, s.probs[static_cast<std::size_t>(RelationType::parent_of)]);
  }
}

void ScoreTable::set(const EntityId& subject, const EntityId& object, double p) {
  scores_[{subject, object}] = p;
}

std::optional<double> ScoreTable::parent_score(const EntityId& subject, const EntityId& object) const {
  auto it = scores_.find({subject, object});
  if (it == scores_.end()) return std::nullopt;
  return it->second;
}

namespace {

bool sequential_or_parent(const Relation& r) { return r.type != RelationType::null; }

// Strict order used for every confidence conflict: higher confidence wins, ties go
// to the lexicographically smaller (subject, object, type).
bool stronger(const Relation& a, const Relation& b) {
  if (a.confidence != b.confidence) return a.confidence > b.confidence;
  return std::tie(a.subject, a.object, a.type) < std::tie(b.subject, b.object, b.type);
}

bool same_triple(const Relation& a, const Relation& b) {
  return a.subject == b.subject && a.object == b.object && a.type == b.type;
}

// Mutable page used while repairing. Every change goes through apply(), which also
// records it, so replaying the trace reproduces the result.
class Workbench {
 public:
  explicit Workbench(const DocumentGraph& g, RepairTrace* trace)
      : page_(g.page_size()),
        entities_(g.entities().begin(), g.entities().end()),
        relations_(g.relations().begin(), g.relations().end()),
        trace_(trace) {}

  const PageSize& page() const { return page_; }
  const std::vector<Entity>& entities() const { return entities_; }
  const std::vector<Relation>& relations() const { return relations_; }

  const Entity& entity(const EntityId& id) const {
    for (const Entity& e : entities_) {
      if (e.id == id) return e;
    }
    throw Error("no such entity: " + id);
  }

  void apply(Repair r) {
    apply_to(entities_, relations_, r);
    if (trace_) trace_->push_back(std::move(r));
  }

  void remove_relation(Stage stage, std::string rule, const Relation& rel,
                       std::vector<Relation> competitors = {}) {
    apply({stage, Action::removed_relation, std::move(rule), std::nullopt, rel, std::move(competitors)});
  }

  void add_relation(Stage stage, std::string rule, Relation rel) {
    apply({stage, Action::added_relation, std::move(rule), std::nullopt, std::move(rel), {}});
  }

  EntityId fresh_id() {
    std::set<EntityId> used;
    for (const Entity& e : entities_) used.insert(e.id);
    while (true) {
      EntityId id = "gen-" + std::to_string(++counter_);
      if (!used.contains(id)) return id;
    }
  }

  DocumentGraph graph() const { return DocumentGraph(page_, entities_, relations_); }

  static void apply_to(std::vector<Entity>& entities, std::vector<Relation>& relations,
                       const Repair& r) {
    switch (r.action) {
      case Action::added_entity:
        entities.push_back(*r.entity);
        break;
      case Action::removed_entity: {
        const EntityId& id = r.entity->id;
        std::erase_if(entities, [&](const Entity& e) { return e.id == id; });
        break;
      }
      case Action::added_relation:
        relations.push_back(*r.relation);
        break;
      case Action::removed_relation:
        std::erase_if(relations, [&](const Relation& x) { return same_triple(x, *r.relation); });
        break;
      case Action::retyped:
        for (Relation& x : relations) {
          if (x.subject == r.relation->subject && x.object == r.relation->object) x.type = r.relation->type;
        }
        break;
    }
  }

 private:
  PageSize page_;
  std::vector<Entity> entities_;
  std::vector<Relation> relations_;
  RepairTrace* trace_;
  int counter_ = 0;
};

bool is_meta_level(const Category& c) {
  return c == cat::header || c == cat::footer || c == cat::page_nr;
}

bool is_content_level(const Category& c) {
  return !(c == cat::document_root || c == cat::meta || c == cat::article ||
           c == cat::table_of_contents || is_meta_level(c));
}

// Typical parents per child category; used only by the geometric fallback.
const std::map<std::string, std::vector<Category>>& plausible_parents() {
  static const std::map<std::string, std::vector<Category>> table = [] {
    const std::vector<Category> flow = {cat::article, cat::column, cat::ordered_group,
                                        cat::unordered_group};
    std::map<std::string, std::vector<Category>> t;
    t["meta"] = {cat::document_root};
    t["article"] = {cat::document_root};
    t["table_of_contents"] = {cat::document_root};
    t["header"] = {cat::meta};
    t["footer"] = {cat::meta};
    t["page_nr"] = {cat::meta};
    for (const char* c : {"heading", "text_block", "figure", "itemize", "table", "author", "footnote",
                          "background_figure"}) {
      t[c] = flow;
    }
    t["text_block"].push_back(cat::item);
    t["text_block"].push_back(cat::table_of_contents);
    t["heading"].push_back(cat::table_of_contents);
    t["column"] = {cat::article, cat::ordered_group, cat::unordered_group, cat::tabular};
    t["ordered_group"] = {cat::article, cat::column, cat::unordered_group};
    t["unordered_group"] = {cat::article, cat::column, cat::ordered_group};
    t["figure_graphic"] = {cat::figure, cat::background_figure};
    t["figure_caption"] = {cat::figure, cat::table};
    t["tabular"] = {cat::table, cat::table_of_contents};
    t["row"] = {cat::tabular, cat::column};
    t["item"] = {cat::itemize};
    return t;
  }();
  return table;
}

int plausibility(const Category& parent, const Category& child) {
  const auto& table = plausible_parents();
  if (auto it = table.find(child.name()); it != table.end()) {
    if (std::find(it->second.begin(), it->second.end(), parent) != it->second.end()) return 2;
  }
  return parent == cat::document_root ? 1 : 0;
}

double containment(const BBox& parent, const BBox& child) {
  if (child.area() <= 0) {
    const bool inside = child.x0 >= parent.x0 && child.x1 <= parent.x1 && child.y0 >= parent.y0 &&
                        child.y1 <= parent.y1;
    return inside ? 1.0 : 0.0;
  }
  return BBox::intersection_area(parent, child) / child.area();
}

// Single parent per entity, if any (after the illegal-relation stage there is at most one).
std::unordered_map<EntityId, EntityId> parent_map(const std::vector<Relation>& relations) {
  std::unordered_map<EntityId, EntityId> parent;
  for (const Relation& r : relations) {
    if (r.type == RelationType::parent_of) parent.emplace(r.object, r.subject);
  }
  return parent;
}

bool under_unordered(const Workbench& wb, const std::unordered_map<EntityId, EntityId>& parent,
                     const EntityId& id) {
  auto it = parent.find(id);
  return it != parent.end() && wb.entity(it->second).category == cat::unordered_group;
}

// Drops followed_by between entities that are not siblings. With `require_parents`,
// a parentless endpoint also disqualifies the relation.
void enforce_siblings(Workbench& wb, bool require_parents, Options opts) {
  const auto parent = parent_map(wb.relations());
  std::vector<std::pair<Relation, std::string>> doomed;
  for (const Relation& r : wb.relations()) {
    if (r.type != RelationType::followed_by) continue;
    auto ps = parent.find(r.subject);
    auto po = parent.find(r.object);
    const bool both = ps != parent.end() && po != parent.end();
    if ((both && ps->second != po->second) || (require_parents && !both)) {
      doomed.emplace_back(r, "siblings_only");
    } else if (opts.strict_unordered &&
               (under_unordered(wb, parent, r.subject) || under_unordered(wb, parent, r.object))) {
      doomed.emplace_back(r, "unordered_group");
    }
  }
  for (const auto& [r, rule] : doomed) wb.remove_relation(Stage::illegal, rule, r);
}

}  // namespace

DocumentGraph add_root_skeleton(const DocumentGraph& g, RepairTrace* trace) {
  Workbench wb(g, trace);
  const BBox page{0, 0, g.page_size().width, g.page_size().height};

  std::vector<Entity> roots;
  for (const Entity& e : wb.entities()) {
    if (e.category == cat::document_root) roots.push_back(e);
  }
  EntityId root;
  if (roots.empty()) {
    root = wb.fresh_id();
    wb.apply({Stage::root, Action::added_entity, "skeleton",
              Entity{root, cat::document_root, page, 1.0}, std::nullopt, {}});
  } else {
    std::sort(roots.begin(), roots.end(), [](const Entity& a, const Entity& b) {
      return std::tie(b.confidence, a.id) < std::tie(a.confidence, b.id);
    });
    root = roots.front().id;
    // Surplus roots are dropped together with their relations.
    for (std::size_t i = 1; i < roots.size(); ++i) {
      const EntityId& id = roots[i].id;
      std::vector<Relation> touching;
      for (const Relation& r : wb.relations()) {
        if (r.subject == id || r.object == id) touching.push_back(r);
      }
      for (const Relation& r : touching) wb.remove_relation(Stage::root, "single_root", r);
      wb.apply({Stage::root, Action::removed_entity, "single_root", roots[i], std::nullopt, {}});
    }
  }

  const bool has_meta = std::any_of(wb.entities().begin(), wb.entities().end(),
                                    [](const Entity& e) { return e.category == cat::meta; });
  if (!has_meta) {
    const EntityId id = wb.fresh_id();
    wb.apply({Stage::root, Action::added_entity, "skeleton", Entity{id, cat::meta, page, 1.0},
              std::nullopt, {}});
    wb.add_relation(Stage::root, "skeleton", {root, id, RelationType::parent_of, 1.0});
  }

  const bool has_article = std::any_of(wb.entities().begin(), wb.entities().end(),
                                       [](const Entity& e) { return e.category == cat::article; });
  if (!has_article) {
    const auto parent = parent_map(wb.relations());
    const bool orphaned_content =
        std::any_of(wb.entities().begin(), wb.entities().end(), [&](const Entity& e) {
          return is_content_level(e.category) && !parent.contains(e.id);
        });
    if (orphaned_content) {
      const EntityId id = wb.fresh_id();
      wb.apply({Stage::root, Action::added_entity, "skeleton", Entity{id, cat::article, page, 1.0},
                std::nullopt, {}});
      wb.add_relation(Stage::root, "skeleton", {root, id, RelationType::parent_of, 1.0});
    }
  }
  return wb.graph();
}

DocumentGraph remove_illegal(const DocumentGraph& g, RepairTrace* trace, Options opts) {
  Workbench wb(g, trace);
  const Stage st = Stage::illegal;

  // (1) document_root only ever appears as a parent.
  {
    std::vector<Relation> doomed;
    for (const Relation& r : wb.relations()) {
      if (!sequential_or_parent(r)) continue;
      const bool root_object = wb.entity(r.object).category == cat::document_root;
      const bool root_sequence =
          r.type == RelationType::followed_by && wb.entity(r.subject).category == cat::document_root;
      if (root_object || root_sequence) doomed.push_back(r);
    }
    for (const Relation& r : doomed) wb.remove_relation(st, "root_only_parent", r);
  }

  // (2) anti-symmetry: of two opposite directions, the one holding the strongest
  // relation survives.
  {
    std::map<std::pair<EntityId, EntityId>, std::vector<Relation>> by_pair;
    for (const Relation& r : wb.relations()) {
      if (sequential_or_parent(r)) by_pair[{r.subject, r.object}].push_back(r);
    }
    std::vector<std::pair<Relation, Relation>> doomed;
    for (const auto& [key, forward] : by_pair) {
      if (key.first > key.second) continue;
      auto back = by_pair.find({key.second, key.first});
      if (back == by_pair.end()) continue;
      auto best_of = [](const std::vector<Relation>& v) {
        return *std::min_element(v.begin(), v.end(), stronger);
      };
      const Relation bf = best_of(forward), bb = best_of(back->second);
      const bool keep_forward = stronger(bf, bb);
      const Relation& winner = keep_forward ? bf : bb;
      for (const Relation& r : keep_forward ? back->second : forward) doomed.emplace_back(r, winner);
    }
    for (const auto& [r, winner] : doomed) wb.remove_relation(st, "anti_symmetric", r, {winner});
  }

  // (3) one incoming relation per type and object; (4) one followed_by successor.
  auto keep_strongest = [&](auto key_of, RelationType type, const char* rule) {
    std::map<EntityId, std::vector<Relation>> groups;
    for (const Relation& r : wb.relations()) {
      if (r.type == type) groups[key_of(r)].push_back(r);
    }
    std::vector<std::pair<Relation, Relation>> doomed;
    for (auto& [key, rels] : groups) {
      if (rels.size() < 2) continue;
      std::sort(rels.begin(), rels.end(), stronger);
      for (std::size_t i = 1; i < rels.size(); ++i) doomed.emplace_back(rels[i], rels[0]);
    }
    for (const auto& [r, winner] : doomed) wb.remove_relation(st, rule, r, {winner});
  };
  auto object_of = [](const Relation& r) { return r.object; };
  auto subject_of = [](const Relation& r) { return r.subject; };
  keep_strongest(object_of, RelationType::parent_of, "single_parent");
  keep_strongest(object_of, RelationType::followed_by, "single_predecessor");
  keep_strongest(subject_of, RelationType::followed_by, "single_successor");

  // (5) unordered groups take no part in reading order.
  {
    std::vector<Relation> doomed;
    for (const Relation& r : wb.relations()) {
      if (r.type != RelationType::followed_by) continue;
      if (wb.entity(r.subject).category == cat::unordered_group ||
          wb.entity(r.object).category == cat::unordered_group) {
        doomed.push_back(r);
      }
    }
    for (const Relation& r : doomed) wb.remove_relation(st, "unordered_group", r);
  }

  // (6) break cycles of the combined relation graph, weakest edge first.
  while (true) {
    std::map<EntityId, std::vector<Relation>> out;
    std::vector<EntityId> nodes;
    for (const Entity& e : wb.entities()) nodes.push_back(e.id);
    std::sort(nodes.begin(), nodes.end());
    for (const Relation& r : wb.relations()) {
      if (sequential_or_parent(r)) out[r.subject].push_back(r);
    }
    for (auto& [k, v] : out) {
      std::sort(v.begin(), v.end(), [](const Relation& a, const Relation& b) {
        return std::tie(a.object, a.type) < std::tie(b.object, b.type);
      });
    }
    std::map<EntityId, int> color;  // 0 new, 1 on path, 2 done
    std::vector<Relation> path;
    std::optional<std::vector<Relation>> cycle;
    std::function<void(const EntityId&)> dfs = [&](const EntityId& v) {
      color[v] = 1;
      if (auto it = out.find(v); it != out.end()) {
        for (const Relation& r : it->second) {
          if (cycle) return;
          const int c = color[r.object];
          if (c == 1) {
            auto start = std::find_if(path.begin(), path.end(),
                                      [&](const Relation& p) { return p.subject == r.object; });
            cycle.emplace(start, path.end());
            cycle->push_back(r);
            return;
          }
          if (c == 0) {
            path.push_back(r);
            dfs(r.object);
            if (cycle) return;
            path.pop_back();
          }
        }
      }
      color[v] = 2;
    };
    for (const EntityId& n : nodes) {
      if (cycle) break;
      if (color[n] == 0) dfs(n);
    }
    if (!cycle) break;
    auto weakest = std::max_element(cycle->begin(), cycle->end(), stronger);
    const Relation victim = *weakest;
    std::vector<Relation> rest;
    for (auto it = cycle->begin(); it != cycle->end(); ++it) {
      if (it != weakest) rest.push_back(*it);
    }
    wb.remove_relation(st, "acyclic", victim, std::move(rest));
  }

  // (7) reading order only between siblings (where parents are already known).
  enforce_siblings(wb, false, opts);
  return wb.graph();
}

DocumentTree complete_missing(const DocumentGraph& g, const ScoreTable* scores, RepairTrace* trace,
                              Options opts) {
  Workbench wb(g, trace);
  const bool use_scores = scores && !scores->empty();

  EntityId root;
  for (const Entity& e : wb.entities()) {
    if (e.category == cat::document_root) root = e.id;
  }
  if (root.empty()) throw Error("complete_missing requires a document_root entity");

  // Candidate rank: classifier score when present (unscored candidates rank last),
  // then the static fallback keys.
  using Rank = std::tuple<double, int, double, double, double>;
  auto rank = [&](const Entity& cand, const Entity& orphan) -> Rank {
    double s = -1.0;
    if (use_scores) {
      if (auto v = scores->parent_score(cand.id, orphan.id)) s = *v;
    }
    return {s, plausibility(cand.category, orphan.category), containment(cand.bbox, orphan.bbox),
            -std::abs(cand.bbox.center_y() - orphan.bbox.center_y()), -cand.bbox.area()};
  };

  while (true) {
    const auto parent = parent_map(wb.relations());
    std::map<EntityId, std::vector<EntityId>> children;
    for (const auto& [child, par] : parent) children[par].push_back(child);
    std::set<std::pair<EntityId, EntityId>> directed;
    for (const Relation& r : wb.relations()) {
      if (sequential_or_parent(r)) directed.emplace(r.subject, r.object);
    }

    std::optional<std::tuple<Rank, EntityId, EntityId>> best;  // rank, orphan, candidate
    std::vector<const Entity*> orphans;
    for (const Entity& e : wb.entities()) {
      if (e.id != root && !parent.contains(e.id)) orphans.push_back(&e);
    }
    if (orphans.empty()) break;
    std::sort(orphans.begin(), orphans.end(), [](const Entity* a, const Entity* b) { return a->id < b->id; });

    for (const Entity* orphan : orphans) {
      std::set<EntityId> subtree{orphan->id};
      std::vector<EntityId> stack{orphan->id};
      while (!stack.empty()) {
        const EntityId v = stack.back();
        stack.pop_back();
        for (const EntityId& c : children[v]) {
          if (subtree.insert(c).second) stack.push_back(c);
        }
      }
      std::optional<std::pair<Rank, EntityId>> local;
      for (const Entity& cand : wb.entities()) {
        if (subtree.contains(cand.id)) continue;
        if (directed.contains({orphan->id, cand.id})) continue;
        const Rank r = rank(cand, *orphan);
        if (!local || r > local->first || (r == local->first && cand.id < local->second)) {
          local.emplace(r, cand.id);
        }
      }
      if (!local) continue;  // unreachable: the root is always a legal candidate
      if (!best || local->first > std::get<0>(*best)) best.emplace(local->first, orphan->id, local->second);
    }
    if (!best) throw Error("no legal parent candidate left");
    const auto& [r, orphan, cand] = *best;
    const double confidence = std::get<0>(r) >= 0 ? std::get<0>(r) : 0.0;
    wb.add_relation(Stage::missing, "missing_parent", {cand, orphan, RelationType::parent_of, confidence});
  }

  enforce_siblings(wb, true, opts);
  return DocumentTree::from_graph(wb.graph(), ValidationOptions{opts.strict_unordered});
}

Result postprocess(const DocumentGraph& g, const ScoreTable* scores, Options opts) {
  const ValidationOptions vopts{opts.strict_unordered};
  if (validate_tree(g, vopts).empty()) return {DocumentTree::from_graph(g, vopts), {}};
  RepairTrace trace;
  DocumentGraph skeleton = add_root_skeleton(g, &trace);
  DocumentGraph legal = remove_illegal(skeleton, &trace, opts);
  DocumentTree tree = complete_missing(legal, scores, &trace, opts);
  return {std::move(tree), std::move(trace)};
}

DocumentGraph replay(const DocumentGraph& g, const RepairTrace& trace) {
  std::vector<Entity> entities(g.entities().begin(), g.entities().end());
  std::vector<Relation> relations(g.relations().begin(), g.relations().end());
  for (const Repair& r : trace) Workbench::apply_to(entities, relations, r);
  return DocumentGraph(g.page_size(), std::move(entities), std::move(relations));
}

Json to_json(const RepairTrace& trace) {
  Json out = Json::array();
  for (const Repair& r : trace) {
    Json j{{"stage", std::string(to_string(r.stage))},
           {"action", std::string(to_string(r.action))},
           {"rule", r.rule}};
    if (r.entity) j["entity"] = docstruct::to_json(*r.entity);
    if (r.relation) j["relation"] = docstruct::to_json(*r.relation);
    if (!r.competitors.empty()) {
      Json c = Json::array();
      for (const Relation& x : r.competitors) c.push_back(docstruct::to_json(x));
      j["competitors"] = std::move(c);
    }
    out.push_back(std::move(j));
  }
  return out;
}

RepairTrace trace_from_json(const Json& j, const CategorySet& categories) {
  auto relation_of = [](const Json& x) {
    return Relation{x.at("subject").get<std::string>(), x.at("object").get<std::string>(),
                    relation_type_from_string(x.at("type").get<std::string>()),
                    x.at("confidence").get<double>()};
  };
  RepairTrace trace;
  try {
    for (const Json& x : j) {
      Repair r;
      const std::string stage = x.at("stage").get<std::string>();
      if (stage == "g_rt") r.stage = Stage::root;
      else if (stage == "g_ilg") r.stage = Stage::illegal;
      else if (stage == "g_mis") r.stage = Stage::missing;
      else throw Error("unknown stage " + stage);
      const std::string action = x.at("action").get<std::string>();
      if (action == "added_entity") r.action = Action::added_entity;
      else if (action == "removed_entity") r.action = Action::removed_entity;
      else if (action == "removed_relation") r.action = Action::removed_relation;
      else if (action == "added_relation") r.action = Action::added_relation;
      else if (action == "retyped") r.action = Action::retyped;
      else throw Error("unknown action " + action);
      r.rule = x.value("rule", "");
      if (x.contains("entity")) {
        const Json& e = x["entity"];
        r.entity = Entity{e.at("id").get<std::string>(), categories.parse(e.at("category").get<std::string>()),
                          bbox_from_json(e.at("bbox")), e.at("confidence").get<double>()};
      }
      if (x.contains("relation")) r.relation = relation_of(x["relation"]);
      if (x.contains("competitors")) {
        for (const Json& c : x["competitors"]) r.competitors.push_back(relation_of(c));
      }
      const bool needs_entity = r.action == Action::added_entity || r.action == Action::removed_entity;
      if (needs_entity ? !r.entity : !r.relation) throw Error("repair step lacks its payload");
      trace.push_back(std::move(r));
    }
  } catch (const Json::exception& e) {
    throw Error(std::string("malformed trace: ") + e.what());
  }
  return trace;
}

}  // namespace docstruct::grammar
