#include "docstruct/core.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

namespace docstruct {

bool BBox::valid() const {
  for (double v : {x0, y0, x1, y1}) {
    if (!std::isfinite(v) || v < 0) return false;
  }
  return x0 <= x1 && y0 <= y1;
}

BBox BBox::enclosing(const BBox& a, const BBox& b) {
  return {std::min(a.x0, b.x0), std::min(a.y0, b.y0), std::max(a.x1, b.x1), std::max(a.y1, b.y1)};
}

double BBox::intersection_area(const BBox& a, const BBox& b) {
  const double w = std::min(a.x1, b.x1) - std::max(a.x0, b.x0);
  const double h = std::min(a.y1, b.y1) - std::max(a.y0, b.y0);
  if (w <= 0 || h <= 0) return 0.0;
  return w * h;
}

CategorySet::CategorySet(std::vector<Category> categories) : categories_(std::move(categories)) {
  for (std::size_t i = 0; i < categories_.size(); ++i) {
    if (!index_.emplace(categories_[i].name(), i).second) {
      throw Error("duplicate category in category set: " + categories_[i].name());
    }
  }
}

const CategorySet& CategorySet::magazine() {
  static const CategorySet set({
      cat::article,        cat::author,          cat::background_figure, cat::column,
      cat::text_block,     cat::document_root,   cat::figure,            cat::figure_caption,
      cat::figure_graphic, cat::footer,          cat::footnote,          cat::header,
      cat::heading,        cat::item,            cat::itemize,           cat::meta,
      cat::ordered_group,  cat::page_nr,         cat::row,               cat::table,
      cat::table_of_contents, cat::tabular,      cat::unordered_group,
  });
  return set;
}

std::optional<std::size_t> CategorySet::index_of(const Category& c) const {
  auto it = index_.find(c.name());
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Category CategorySet::parse(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) throw Error("unknown category: " + std::string(name));
  return categories_[it->second];
}

std::string_view to_string(RelationType t) {
  switch (t) {
    case RelationType::parent_of: return "parent_of";
    case RelationType::followed_by: return "followed_by";
    case RelationType::null: return "null";
  }
  return "null";
}

RelationType relation_type_from_string(std::string_view s) {
  if (s == "parent_of") return RelationType::parent_of;
  if (s == "followed_by") return RelationType::followed_by;
  if (s == "null") return RelationType::null;
  throw Error("unknown relation type: " + std::string(s));
}

DocumentGraph::DocumentGraph(PageSize page, std::vector<Entity> entities,
                             std::vector<Relation> relations)
    : page_(page), entities_(std::move(entities)), relations_(std::move(relations)) {
  if (!(std::isfinite(page_.width) && std::isfinite(page_.height)) || page_.width < 0 ||
      page_.height < 0) {
    throw Error("invalid page size");
  }
  for (std::size_t i = 0; i < entities_.size(); ++i) {
    const Entity& e = entities_[i];
    if (e.id.empty()) throw Error("entity with empty id");
    if (!e.bbox.valid()) throw Error("entity " + e.id + ": invalid bbox");
    if (!(e.confidence >= 0.0 && e.confidence <= 1.0)) {
      throw Error("entity " + e.id + ": confidence outside [0,1]");
    }
    if (!index_.emplace(e.id, i).second) throw Error("duplicate entity id: " + e.id);
  }
  std::set<std::tuple<std::string, std::string, RelationType>> seen;
  for (const Relation& r : relations_) {
    const std::string label = r.subject + " -" + std::string(to_string(r.type)) + "-> " + r.object;
    if (r.subject == r.object) throw Error("self relation: " + label);
    if (!index_.contains(r.subject) || !index_.contains(r.object)) {
      throw Error("relation endpoint not found: " + label);
    }
    if (!(r.confidence >= 0.0 && r.confidence <= 1.0)) {
      throw Error("relation confidence outside [0,1]: " + label);
    }
    if (!seen.emplace(r.subject, r.object, r.type).second) {
      throw Error("duplicate relation: " + label);
    }
  }
}

const Entity* DocumentGraph::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  return it == index_.end() ? nullptr : &entities_[it->second];
}

const Entity& DocumentGraph::at(std::string_view id) const {
  const Entity* e = find(id);
  if (!e) throw Error("no such entity: " + std::string(id));
  return *e;
}

std::optional<std::size_t> DocumentGraph::index_of(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::string_view to_string(ViolationKind k) {
  switch (k) {
    case ViolationKind::no_root: return "no_root";
    case ViolationKind::multiple_roots: return "multiple_roots";
    case ViolationKind::root_has_parent: return "root_has_parent";
    case ViolationKind::missing_parent: return "missing_parent";
    case ViolationKind::multiple_parents: return "multiple_parents";
    case ViolationKind::parent_cycle: return "parent_cycle";
    case ViolationKind::symmetric_pair: return "symmetric_pair";
    case ViolationKind::followed_by_not_siblings: return "followed_by_not_siblings";
    case ViolationKind::multiple_successors: return "multiple_successors";
    case ViolationKind::multiple_predecessors: return "multiple_predecessors";
    case ViolationKind::followed_by_cycle: return "followed_by_cycle";
    case ViolationKind::unordered_sequence: return "unordered_sequence";
  }
  return "unknown";
}

namespace {

// Strongly connected components of size > 1 (no self loops exist). Each component
// is returned sorted by id; components are sorted by their first id.
std::vector<std::vector<EntityId>> cyclic_components(
    const std::vector<EntityId>& nodes, const std::map<EntityId, std::vector<EntityId>>& adj) {
  std::map<EntityId, int> index, low;
  std::set<EntityId> on_stack;
  std::vector<EntityId> stack;
  std::vector<std::vector<EntityId>> out;
  int counter = 0;

  std::function<void(const EntityId&)> visit = [&](const EntityId& v) {
    index[v] = low[v] = counter++;
    stack.push_back(v);
    on_stack.insert(v);
    if (auto it = adj.find(v); it != adj.end()) {
      for (const EntityId& w : it->second) {
        if (!index.contains(w)) {
          visit(w);
          low[v] = std::min(low[v], low[w]);
        } else if (on_stack.contains(w)) {
          low[v] = std::min(low[v], index[w]);
        }
      }
    }
    if (low[v] == index[v]) {
      std::vector<EntityId> comp;
      EntityId w;
      do {
        w = stack.back();
        stack.pop_back();
        on_stack.erase(w);
        comp.push_back(w);
      } while (w != v);
      if (comp.size() > 1) {
        std::sort(comp.begin(), comp.end());
        out.push_back(std::move(comp));
      }
    }
  };
  for (const EntityId& n : nodes) {
    if (!index.contains(n)) visit(n);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

ValidationReport validate_tree(const DocumentGraph& g, ValidationOptions opts) {
  ValidationReport report;
  std::vector<EntityId> ids;
  std::vector<EntityId> roots;
  for (const Entity& e : g.entities()) {
    ids.push_back(e.id);
    if (e.category == cat::document_root) roots.push_back(e.id);
  }
  std::sort(ids.begin(), ids.end());
  std::sort(roots.begin(), roots.end());

  if (roots.empty()) {
    report.push_back({ViolationKind::no_root, {}, "no document_root entity"});
  } else if (roots.size() > 1) {
    report.push_back({ViolationKind::multiple_roots, roots, "more than one document_root"});
  }

  std::map<EntityId, std::vector<EntityId>> parents, parent_adj, succ, pred, seq_adj;
  std::set<std::pair<EntityId, EntityId>> directed;
  for (const Relation& r : g.relations()) {
    if (r.type == RelationType::null) continue;
    directed.emplace(r.subject, r.object);
    if (r.type == RelationType::parent_of) {
      parents[r.object].push_back(r.subject);
      parent_adj[r.subject].push_back(r.object);
    } else {
      succ[r.subject].push_back(r.object);
      pred[r.object].push_back(r.subject);
      seq_adj[r.subject].push_back(r.object);
    }
  }
  for (auto* m : {&parents, &parent_adj, &succ, &pred, &seq_adj}) {
    for (auto& [k, v] : *m) std::sort(v.begin(), v.end());
  }

  auto single_parent = [&](const EntityId& id) -> std::optional<EntityId> {
    auto it = parents.find(id);
    if (it == parents.end() || it->second.size() != 1) return std::nullopt;
    return it->second.front();
  };

  std::vector<Violation> per_entity;
  for (const EntityId& id : ids) {
    const Entity& e = g.at(id);
    const auto it = parents.find(id);
    const std::size_t n_parents = it == parents.end() ? 0 : it->second.size();
    if (e.category == cat::document_root) {
      if (n_parents > 0) {
        per_entity.push_back({ViolationKind::root_has_parent, {id}, "document_root has a parent"});
      }
    } else if (n_parents == 0) {
      per_entity.push_back({ViolationKind::missing_parent, {id}, "entity has no parent"});
    } else if (n_parents > 1) {
      std::vector<EntityId> list{id};
      list.insert(list.end(), it->second.begin(), it->second.end());
      per_entity.push_back({ViolationKind::multiple_parents, list, "entity has several parents"});
    }
    if (auto s = succ.find(id); s != succ.end() && s->second.size() > 1) {
      std::vector<EntityId> list{id};
      list.insert(list.end(), s->second.begin(), s->second.end());
      per_entity.push_back({ViolationKind::multiple_successors, list, "several followed_by successors"});
    }
    if (auto p = pred.find(id); p != pred.end() && p->second.size() > 1) {
      std::vector<EntityId> list{id};
      list.insert(list.end(), p->second.begin(), p->second.end());
      per_entity.push_back({ViolationKind::multiple_predecessors, list, "several followed_by predecessors"});
    }
  }

  for (const auto& [a, b] : directed) {
    if (a < b && directed.contains({b, a})) {
      per_entity.push_back({ViolationKind::symmetric_pair, {a, b}, "relations in both directions"});
    }
  }

  for (auto& comp : cyclic_components(ids, parent_adj)) {
    per_entity.push_back({ViolationKind::parent_cycle, std::move(comp), "parent_of cycle"});
  }
  for (auto& comp : cyclic_components(ids, seq_adj)) {
    per_entity.push_back({ViolationKind::followed_by_cycle, std::move(comp), "followed_by cycle"});
  }

  for (const auto& [a, targets] : seq_adj) {
    for (const EntityId& b : targets) {
      const auto pa = single_parent(a);
      const auto pb = single_parent(b);
      if (!pa || !pb || *pa != *pb) {
        per_entity.push_back({ViolationKind::followed_by_not_siblings, {a, b},
                              "followed_by between non-siblings"});
      }
      auto excluded = [&](const EntityId& id, const std::optional<EntityId>& parent) {
        if (g.at(id).category == cat::unordered_group) return true;
        return opts.strict_unordered && parent && g.at(*parent).category == cat::unordered_group;
      };
      if (excluded(a, pa) || excluded(b, pb)) {
        per_entity.push_back({ViolationKind::unordered_sequence, {a, b},
                              "followed_by touching an unordered group"});
      }
    }
  }

  std::stable_sort(per_entity.begin(), per_entity.end(), [](const Violation& x, const Violation& y) {
    return std::tie(x.entities, x.kind) < std::tie(y.entities, y.kind);
  });
  report.insert(report.end(), per_entity.begin(), per_entity.end());
  return report;
}

std::string describe(const ValidationReport& report) {
  std::ostringstream os;
  for (const Violation& v : report) {
    os << to_string(v.kind);
    for (const EntityId& id : v.entities) os << ' ' << id;
    os << '\n';
  }
  return os.str();
}

InvalidTree::InvalidTree(ValidationReport report)
    : Error("invalid document tree:\n" + describe(report)), report_(std::move(report)) {}

DocumentTree::DocumentTree(DocumentGraph g, EntityId root) : graph_(std::move(g)), root_(std::move(root)) {
  for (const Relation& r : graph_.relations()) {
    if (r.type == RelationType::parent_of) {
      parent_[r.object] = r.subject;
      children_[r.subject].push_back(r.object);
    } else if (r.type == RelationType::followed_by) {
      successor_[r.subject] = r.object;
    }
  }
}

DocumentTree DocumentTree::from_graph(DocumentGraph g, ValidationOptions opts) {
  ValidationReport report = validate_tree(g, opts);
  if (!report.empty()) throw InvalidTree(std::move(report));
  EntityId root;
  for (const Entity& e : g.entities()) {
    if (e.category == cat::document_root) root = e.id;
  }
  return DocumentTree(std::move(g), std::move(root));
}

std::optional<EntityId> DocumentTree::parent_of(std::string_view id) const {
  auto it = parent_.find(std::string(id));
  if (it == parent_.end()) return std::nullopt;
  return it->second;
}

std::optional<EntityId> DocumentTree::successor_of(std::string_view id) const {
  auto it = successor_.find(std::string(id));
  if (it == successor_.end()) return std::nullopt;
  return it->second;
}

std::vector<EntityId> DocumentTree::children_in_order(std::string_view parent) const {
  graph_.at(parent);
  auto it = children_.find(std::string(parent));
  if (it == children_.end()) return {};
  const std::vector<EntityId>& kids = it->second;

  auto geometric_less = [&](const EntityId& a, const EntityId& b) {
    const BBox& ba = graph_.at(a).bbox;
    const BBox& bb = graph_.at(b).bbox;
    const double ya = ba.center_y(), xa = ba.center_x();
    const double yb = bb.center_y(), xb = bb.center_x();
    return std::tie(ya, xa, a) < std::tie(yb, xb, b);
  };

  std::set<EntityId> has_pred;
  for (const EntityId& k : kids) {
    if (auto s = successor_of(k)) has_pred.insert(*s);
  }
  std::vector<EntityId> heads, loose;
  for (const EntityId& k : kids) {
    if (has_pred.contains(k)) continue;
    (successor_of(k) ? heads : loose).push_back(k);
  }
  std::sort(heads.begin(), heads.end(), geometric_less);
  std::sort(loose.begin(), loose.end(), geometric_less);

  std::vector<EntityId> out;
  out.reserve(kids.size());
  for (const EntityId& h : heads) {
    std::optional<EntityId> cur = h;
    while (cur) {
      out.push_back(*cur);
      cur = successor_of(*cur);
    }
  }
  out.insert(out.end(), loose.begin(), loose.end());
  return out;
}

std::vector<EntityId> children_in_order(const DocumentTree& t, std::string_view parent) {
  return t.children_in_order(parent);
}

DocumentGraph canonical(const DocumentGraph& g) {
  std::vector<Entity> entities(g.entities().begin(), g.entities().end());
  std::vector<Relation> relations(g.relations().begin(), g.relations().end());
  std::sort(entities.begin(), entities.end(), [](const Entity& a, const Entity& b) { return a.id < b.id; });
  std::sort(relations.begin(), relations.end(), [](const Relation& a, const Relation& b) {
    return std::tie(a.subject, a.object, a.type) < std::tie(b.subject, b.object, b.type);
  });
  return DocumentGraph(g.page_size(), std::move(entities), std::move(relations));
}

}  // namespace docstruct
