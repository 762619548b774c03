#include "docstruct/hocr.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <unordered_map>

#include "docstruct/metrics.hpp"

namespace docstruct::hocr {

namespace {

const std::map<std::string, std::optional<std::string>>& class_table() {
  static const std::map<std::string, std::optional<std::string>> table = {
      {"document_root", "ocr_page"},   {"meta", std::nullopt},
      {"author", "ocr_author"},        {"background_figure", "ocr_float"},
      {"text_block", "ocrx_block"},    {"figure", "ocr_float"},
      {"figure_graphic", "ocr_photo"}, {"figure_caption", "ocr_caption"},
      {"footer", "ocr_footer"},        {"footnote", "ocr_footer"},
      {"header", "ocr_header"},        {"heading", "ocr_header"},
      {"item", "ocr_carea"},           {"itemize", "ocr_float"},
      {"ordered_group", "ocr_carea"},  {"page_nr", "ocr_pageno"},
      {"table", "ocr_table"},          {"tabular", "ocr_table"},
      {"table_of_contents", "ocr_table"}, {"unordered_group", "ocr_float"},
      {"article", std::nullopt},       {"column", "ocr_carea"},
      {"row", "ocr_carea"},
  };
  return table;
}

// Category assumed for hOCR classes of files that lack dsg_cat.
const std::map<std::string, std::string>& inverse_table() {
  static const std::map<std::string, std::string> table = {
      {"ocr_page", "document_root"}, {"ocr_author", "author"},       {"ocr_float", "figure"},
      {"ocrx_block", "text_block"},  {"ocr_par", "text_block"},      {"ocr_photo", "figure_graphic"},
      {"ocr_image", "figure_graphic"}, {"ocr_caption", "figure_caption"}, {"ocr_footer", "footer"},
      {"ocr_header", "heading"},     {"ocr_carea", "column"},        {"ocr_pageno", "page_nr"},
      {"ocr_table", "table"},
  };
  return table;
}

std::string number(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

double parse_number(std::string_view s, std::string_view what) {
  double v = 0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) {
    throw Error("invalid number in " + std::string(what) + ": '" + std::string(s) + "'");
  }
  return v;
}

long long rounded(double v) { return std::llround(v); }  // half away from zero

std::string title_of(const BBox& b) {
  return "bbox " + std::to_string(rounded(b.x0)) + " " + std::to_string(rounded(b.y0)) + " " +
         std::to_string(rounded(b.x1)) + " " + std::to_string(rounded(b.y1));
}

std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream in{std::string(s)};
  for (std::string t; in >> t;) out.push_back(t);
  return out;
}

std::optional<BBox> bbox_of(const xml::Node& n) {
  const std::string* title = n.attribute("title");
  if (!title) return std::nullopt;
  std::string_view rest = *title;
  while (!rest.empty()) {
    const std::size_t semi = rest.find(';');
    std::string_view prop = rest.substr(0, semi);
    rest = semi == std::string_view::npos ? std::string_view{} : rest.substr(semi + 1);
    auto parts = split_ws(prop);
    if (parts.empty() || parts[0] != "bbox") continue;
    if (parts.size() != 5) throw Error("malformed bbox property: '" + std::string(prop) + "'");
    return BBox{parse_number(parts[1], "bbox"), parse_number(parts[2], "bbox"),
                parse_number(parts[3], "bbox"), parse_number(parts[4], "bbox")};
  }
  return std::nullopt;
}

bool has_class(const xml::Node& n, std::string_view cls) {
  const std::string* c = n.attribute("class");
  if (!c) return false;
  for (const std::string& t : split_ws(*c)) {
    if (t == cls) return true;
  }
  return false;
}

std::vector<std::string> leaves_in_order(const DocumentTree& t) {
  std::vector<std::string> out;
  std::vector<EntityId> stack{t.root()};
  while (!stack.empty()) {
    const EntityId id = stack.back();
    stack.pop_back();
    const auto kids = t.children_in_order(id);
    if (kids.empty()) out.push_back(id);
    for (auto it = kids.rbegin(); it != kids.rend(); ++it) stack.push_back(*it);
  }
  return out;
}

}  // namespace

std::optional<std::string> map_category(const Category& c) {
  auto it = class_table().find(c.name());
  if (it == class_table().end()) throw Error("category has no hOCR mapping: " + c.name());
  return it->second;
}

std::vector<std::size_t> attach_words(const DocumentTree& t, std::span<const Word> words) {
  const DocumentGraph& g = t.graph();
  std::vector<std::size_t> leaves;
  for (const EntityId& id : leaves_in_order(t)) leaves.push_back(*g.index_of(id));
  std::vector<std::size_t> out;
  out.reserve(words.size());
  for (const Word& w : words) {
    std::size_t best = leaves.front();
    double best_iou = 0;
    for (std::size_t leaf : leaves) {
      const double v = metrics::iou(w.bbox, g.entities()[leaf].bbox);
      if (v > best_iou) {
        best_iou = v;
        best = leaf;
      }
    }
    if (best_iou <= 0) {
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t leaf : leaves) {
        const BBox& b = g.entities()[leaf].bbox;
        const double d = std::hypot(b.center_x() - w.bbox.center_x(), b.center_y() - w.bbox.center_y());
        if (d < best_d) {
          best_d = d;
          best = leaf;
        }
      }
    }
    out.push_back(best);
  }
  return out;
}

xml::Node to_hocr(const DocumentTree& t, std::span<const Word> words) {
  const DocumentGraph& g = t.graph();
  for (const Word& w : words) {
    if (w.text.find_first_not_of(" \t\r\n") == std::string::npos) throw Error("word text is empty");
  }
  const std::vector<std::size_t> owner = attach_words(t, words);
  std::unordered_map<std::size_t, std::vector<std::size_t>> words_of;
  for (std::size_t i = 0; i < owner.size(); ++i) words_of[owner[i]].push_back(i);

  std::unordered_map<EntityId, const Relation*> parent_rel, next_rel;
  for (const Relation& r : g.relations()) {
    if (r.type == RelationType::parent_of) parent_rel[r.object] = &r;
    else if (r.type == RelationType::followed_by) next_rel[r.subject] = &r;
  }

  int counter = 0;
  auto build = [&](auto&& self, const EntityId& id) -> xml::Node {
    const Entity& e = g.at(id);
    xml::Node div = xml::Node::element("div");
    auto it = class_table().find(e.category.name());
    if (it != class_table().end() && it->second) div.set_attribute("class", *it->second);
    div.set_attribute("id", "block_" + std::to_string(++counter));
    div.set_attribute("title", title_of(e.bbox));
    div.set_attribute("dsg_cat", e.category.name());
    div.set_attribute("dsg_id", e.id);
    div.set_attribute("dsg_conf", number(e.confidence));
    if (auto p = parent_rel.find(id); p != parent_rel.end()) {
      div.set_attribute("dsg_parent_conf", number(p->second->confidence));
    }
    if (auto n = next_rel.find(id); n != next_rel.end()) {
      div.set_attribute("dsg_next", n->second->object);
      div.set_attribute("dsg_next_conf", number(n->second->confidence));
    }
    if (id == t.root()) {
      div.set_attribute("dsg_page_size", number(g.page_size().width) + " " + number(g.page_size().height));
    }
    const auto kids = t.children_in_order(id);
    for (const EntityId& k : kids) div.children.push_back(self(self, k));
    if (auto wit = words_of.find(*g.index_of(id)); wit != words_of.end()) {
      for (std::size_t wi : wit->second) {
        xml::Node span = xml::Node::element("span");
        span.set_attribute("class", "ocrx_word");
        span.set_attribute("id", "word_" + std::to_string(wi));
        span.set_attribute("title", title_of(words[wi].bbox));
        span.children.push_back(xml::Node::text_node(words[wi].text));
        div.children.push_back(std::move(span));
      }
    }
    return div;
  };

  xml::Node html = xml::Node::element("html");
  html.set_attribute("xmlns", "http://www.w3.org/1999/xhtml");
  html.set_attribute("xml:lang", "en");
  xml::Node head = xml::Node::element("head");
  xml::Node title = xml::Node::element("title");
  title.children.push_back(xml::Node::text_node("docstruct"));
  head.children.push_back(std::move(title));
  auto meta = [](std::string name, std::string content) {
    xml::Node m = xml::Node::element("meta");
    m.set_attribute("name", std::move(name));
    m.set_attribute("content", std::move(content));
    return m;
  };
  head.children.push_back(meta("ocr-system", "docstruct " DOCSTRUCT_VERSION));
  head.children.push_back(meta("ocr-capabilities",
                               "ocr_page ocr_carea ocrx_block ocr_float ocr_photo ocr_caption ocr_header "
                               "ocr_footer ocr_pageno ocr_table ocr_author ocrx_word"));
  xml::Node body = xml::Node::element("body");
  body.children.push_back(build(build, t.root()));
  html.children.push_back(std::move(head));
  html.children.push_back(std::move(body));
  return html;
}

std::string to_hocr_string(const DocumentTree& t, std::span<const Word> words) {
  return xml::serialize(to_hocr(t, words));
}

const xml::Node& page_element(const xml::Node& root) {
  const xml::Node* found = nullptr;
  auto visit = [&](auto&& self, const xml::Node& n) -> void {
    if (found || !n.is_element()) return;
    if (n.attribute("dsg_cat") || has_class(n, "ocr_page")) {
      found = &n;
      return;
    }
    for (const xml::Node& c : n.children) self(self, c);
  };
  visit(visit, root);
  if (!found) throw Error("not an hOCR document: no ocr_page element");
  return *found;
}

Page from_hocr(const xml::Node& root, const CategorySet& categories) {
  const xml::Node& page = page_element(root);
  std::vector<Entity> entities;
  std::vector<Relation> parents, nexts;
  std::vector<std::pair<std::optional<long>, Word>> words;
  int generated = 0;

  auto entity_of = [&](const xml::Node& n) -> std::optional<Entity> {
    if (n.name != "div" && !n.attribute("dsg_cat")) {
      // External files may use other tags for areas; only classed ones count.
      bool mapped = false;
      if (const std::string* c = n.attribute("class")) {
        for (const std::string& t : split_ws(*c)) mapped |= inverse_table().contains(t);
      }
      if (!mapped) return std::nullopt;
    }
    Entity e;
    if (const std::string* c = n.attribute("dsg_cat")) {
      e.category = categories.parse(*c);
    } else {
      std::optional<std::string> name;
      if (const std::string* c = n.attribute("class")) {
        for (const std::string& t : split_ws(*c)) {
          if (auto it = inverse_table().find(t); it != inverse_table().end()) {
            name = it->second;
            break;
          }
        }
      }
      if (!name) return std::nullopt;
      e.category = categories.parse(*name);
    }
    const std::string* id = n.attribute("dsg_id");
    e.id = id ? *id : "gen-" + std::to_string(++generated);
    auto box = bbox_of(n);
    if (!box) throw Error("element for entity " + e.id + " has no bbox");
    e.bbox = *box;
    if (const std::string* c = n.attribute("dsg_conf")) e.confidence = parse_number(*c, "dsg_conf");
    return e;
  };

  auto visit = [&](auto&& self, const xml::Node& n, const std::optional<EntityId>& parent) -> void {
    if (!n.is_element()) return;
    if (n.name == "span" && (has_class(n, "ocrx_word") || has_class(n, "ocr_word"))) {
      if (!parent) throw Error("word outside any entity");
      auto box = bbox_of(n);
      if (!box) throw Error("word span without bbox");
      std::optional<long> index;
      if (const std::string* id = n.attribute("id"); id && id->starts_with("word_")) {
        long v = 0;
        auto [end, ec] = std::from_chars(id->data() + 5, id->data() + id->size(), v);
        if (ec == std::errc() && end == id->data() + id->size()) index = v;
      }
      words.push_back({index, Word{n.deep_text(), *box}});
      return;
    }
    std::optional<EntityId> here = parent;
    if (auto e = entity_of(n)) {
      here = e->id;
      if (parent) {
        double conf = 1.0;
        if (const std::string* c = n.attribute("dsg_parent_conf")) conf = parse_number(*c, "dsg_parent_conf");
        parents.push_back({*parent, e->id, RelationType::parent_of, conf});
      }
      if (const std::string* next = n.attribute("dsg_next")) {
        double conf = 1.0;
        if (const std::string* c = n.attribute("dsg_next_conf")) conf = parse_number(*c, "dsg_next_conf");
        nexts.push_back({e->id, *next, RelationType::followed_by, conf});
      }
      entities.push_back(std::move(*e));
    }
    for (const xml::Node& c : n.children) self(self, c, here);
  };
  visit(visit, page, std::nullopt);
  if (entities.empty()) throw Error("hOCR page carries no entities");

  PageSize size{entities.front().bbox.x1, entities.front().bbox.y1};
  if (const std::string* ps = page.attribute("dsg_page_size")) {
    auto parts = split_ws(*ps);
    if (parts.size() != 2) throw Error("malformed dsg_page_size");
    size = {parse_number(parts[0], "dsg_page_size"), parse_number(parts[1], "dsg_page_size")};
  }
  std::vector<Relation> relations = std::move(parents);
  relations.insert(relations.end(), nexts.begin(), nexts.end());

  const bool indexed = std::all_of(words.begin(), words.end(), [](const auto& w) { return w.first.has_value(); });
  if (indexed) {
    std::stable_sort(words.begin(), words.end(), [](const auto& a, const auto& b) { return *a.first < *b.first; });
  }
  Page out{DocumentTree::from_graph(DocumentGraph(size, std::move(entities), std::move(relations))), {}};
  for (auto& [index, w] : words) out.words.push_back(std::move(w));
  return out;
}

Page from_hocr(std::string_view text, const CategorySet& categories) {
  return from_hocr(xml::parse(text), categories);
}

xml::Node strip_extensions(const xml::Node& root) {
  xml::Node out = root;
  auto strip = [](auto&& self, xml::Node& n) -> void {
    std::erase_if(n.attributes, [](const auto& kv) { return kv.first.starts_with("dsg_"); });
    for (xml::Node& c : n.children) self(self, c);
  };
  strip(strip, out);
  return out;
}

}  // namespace docstruct::hocr
