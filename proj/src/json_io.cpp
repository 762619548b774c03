#include "docstruct/json_io.hpp"

#include <fstream>
#include <sstream>

namespace docstruct {

namespace {

const Json& member(const Json& obj, const char* key, const std::string& path) {
  if (!obj.is_object()) throw SchemaError(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(path + "/" + key, "missing field");
  return *it;
}

double number(const Json& j, const std::string& path) {
  if (!j.is_number()) throw SchemaError(path, "expected a number");
  return j.get<double>();
}

std::string string_or_int(const Json& j, const std::string& path) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number_integer()) return std::to_string(j.get<long long>());
  throw SchemaError(path, "expected a string id");
}

}  // namespace

Json to_json(const BBox& b) { return Json::array({b.x0, b.y0, b.x1, b.y1}); }

Json to_json(const Entity& e) {
  return Json{{"id", e.id},
              {"category", e.category.name()},
              {"bbox", to_json(e.bbox)},
              {"confidence", e.confidence}};
}

Json to_json(const Relation& r) {
  return Json{{"subject", r.subject},
              {"object", r.object},
              {"type", std::string(to_string(r.type))},
              {"confidence", r.confidence}};
}

Json to_json(const DocumentGraph& g) {
  Json entities = Json::array();
  for (const Entity& e : g.entities()) entities.push_back(to_json(e));
  Json relations = Json::array();
  for (const Relation& r : g.relations()) relations.push_back(to_json(r));
  return Json{{"page_size", {{"width", g.page_size().width}, {"height", g.page_size().height}}},
              {"entities", std::move(entities)},
              {"relations", std::move(relations)}};
}

Json to_json(const std::vector<Word>& words) {
  Json out = Json::array();
  for (const Word& w : words) out.push_back(Json{{"text", w.text}, {"bbox", to_json(w.bbox)}});
  return out;
}

BBox bbox_from_json(const Json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 4) throw SchemaError(path, "bbox must be [x0, y0, x1, y1]");
  BBox b{number(j[0], path + "/0"), number(j[1], path + "/1"), number(j[2], path + "/2"),
         number(j[3], path + "/3")};
  if (!b.valid()) throw SchemaError(path, "bbox coordinates must be finite, >= 0 and ordered");
  return b;
}

DocumentGraph graph_from_json(const Json& j, const CategorySet& categories) {
  const Json& ps = member(j, "page_size", "");
  PageSize page{number(member(ps, "width", "/page_size"), "/page_size/width"),
                number(member(ps, "height", "/page_size"), "/page_size/height")};
  if (page.width < 0 || page.height < 0) throw SchemaError("/page_size", "negative page size");

  const Json& ents = member(j, "entities", "");
  if (!ents.is_array()) throw SchemaError("/entities", "expected an array");
  std::vector<Entity> entities;
  std::unordered_map<std::string, std::size_t> ids;
  for (std::size_t i = 0; i < ents.size(); ++i) {
    const std::string path = "/entities/" + std::to_string(i);
    const Json& e = ents[i];
    Entity ent;
    ent.id = string_or_int(member(e, "id", path), path + "/id");
    if (ent.id.empty()) throw SchemaError(path + "/id", "empty id");
    const Json& c = member(e, "category", path);
    if (!c.is_string()) throw SchemaError(path + "/category", "expected a string");
    if (!categories.contains(Category(c.get<std::string>()))) {
      throw SchemaError(path + "/category", "unknown category '" + c.get<std::string>() + "'");
    }
    ent.category = Category(c.get<std::string>());
    ent.bbox = bbox_from_json(member(e, "bbox", path), path + "/bbox");
    ent.confidence = e.contains("confidence") ? number(e["confidence"], path + "/confidence") : 1.0;
    if (!(ent.confidence >= 0 && ent.confidence <= 1)) {
      throw SchemaError(path + "/confidence", "confidence outside [0,1]");
    }
    if (!ids.emplace(ent.id, i).second) throw SchemaError(path + "/id", "duplicate id '" + ent.id + "'");
    entities.push_back(std::move(ent));
  }

  std::vector<Relation> relations;
  if (j.contains("relations")) {
    const Json& rels = j["relations"];
    if (!rels.is_array()) throw SchemaError("/relations", "expected an array");
    for (std::size_t i = 0; i < rels.size(); ++i) {
      const std::string path = "/relations/" + std::to_string(i);
      const Json& r = rels[i];
      Relation rel;
      rel.subject = string_or_int(member(r, "subject", path), path + "/subject");
      rel.object = string_or_int(member(r, "object", path), path + "/object");
      const Json& t = member(r, "type", path);
      if (!t.is_string()) throw SchemaError(path + "/type", "expected a string");
      try {
        rel.type = relation_type_from_string(t.get<std::string>());
      } catch (const Error& e) {
        throw SchemaError(path + "/type", e.what());
      }
      rel.confidence = r.contains("confidence") ? number(r["confidence"], path + "/confidence") : 1.0;
      if (!ids.contains(rel.subject)) {
        throw SchemaError(path + "/subject", "unknown entity id '" + rel.subject + "'");
      }
      if (!ids.contains(rel.object)) {
        throw SchemaError(path + "/object", "unknown entity id '" + rel.object + "'");
      }
      relations.push_back(std::move(rel));
    }
  }
  try {
    return DocumentGraph(page, std::move(entities), std::move(relations));
  } catch (const SchemaError&) {
    throw;
  } catch (const Error& e) {
    throw SchemaError("", e.what());
  }
}

std::vector<Word> words_from_json(const Json& j) {
  if (!j.is_array()) throw SchemaError("", "words file must be a JSON array");
  std::vector<Word> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string path = "/" + std::to_string(i);
    const Json& t = member(j[i], "text", path);
    if (!t.is_string() || t.get<std::string>().empty()) {
      throw SchemaError(path + "/text", "word text must be a nonempty string");
    }
    out.push_back({t.get<std::string>(), bbox_from_json(member(j[i], "bbox", path), path + "/bbox")});
  }
  return out;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

std::string read_text_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + p.string());
  out << content;
  if (!out) throw Error("write failed: " + p.string());
}

Json read_json_file(const std::filesystem::path& p) {
  const std::string text = read_text_file(p);
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw Error(p.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& p, const Json& j) { write_text_file(p, dump(j)); }

DocumentGraph load_graph(const std::filesystem::path& p, const CategorySet& categories) {
  try {
    return graph_from_json(read_json_file(p), categories);
  } catch (const SchemaError& e) {
    throw SchemaError(p.string() + ":" + e.path(), std::string(e.what()).substr(e.path().size() + 2));
  }
}

void save_graph(const std::filesystem::path& p, const DocumentGraph& g) { write_json_file(p, to_json(g)); }

}  // namespace docstruct
