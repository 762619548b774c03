#include "docstruct/query.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

#include "docstruct/hocr.hpp"

namespace docstruct::query {

namespace {

class Parser {
 public:
  explicit Parser(std::string_view text) : s_(text) {}

  Query query() {
    skip_ws();
    Query q;
    if (at_word("followedby")) {
      pos_ += 10;
      skip_ws();
      expect('(');
      q.kind = Query::Kind::followedby;
      q.path = argument();
      skip_ws();
      expect(',');
      q.second = argument();
      skip_ws();
      expect(')');
    } else if (peek() == '/') {
      q.kind = s_.substr(pos_, 2) == "//" ? Query::Kind::relative : Query::Kind::absolute;
      q.path = path();
    } else {
      // A bare name is a node name search.
      q.kind = Query::Kind::name;
      const std::size_t at = pos_;
      std::string n = name();
      if (n.empty()) fail("expected a path or node name", at);
      q.path.steps.push_back({Step::Axis::descendant, std::move(n), {}});
    }
    skip_ws();
    if (pos_ != s_.size()) fail("unexpected trailing input", pos_);
    return q;
  }

 private:
  [[noreturn]] void fail(const std::string& msg, std::size_t at) const { throw QueryError(msg, at); }

  char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }
  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool at_word(std::string_view w) const {
    if (s_.substr(pos_, w.size()) != w) return false;
    std::size_t p = pos_ + w.size();
    while (p < s_.size() && std::isspace(static_cast<unsigned char>(s_[p]))) ++p;
    return p < s_.size() && s_[p] == '(';
  }
  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'", pos_);
    ++pos_;
  }

  static bool name_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
  static bool name_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.' || c == ':';
  }
  std::string name() {
    const std::size_t start = pos_;
    if (!name_start(peek())) return {};
    while (pos_ < s_.size() && name_char(s_[pos_])) ++pos_;
    return std::string(s_.substr(start, pos_ - start));
  }

  std::string literal() {
    const char q = peek();
    if (q != '"' && q != '\'') fail("expected a quoted string", pos_);
    const std::size_t start = ++pos_;
    const std::size_t end = s_.find(q, start);
    if (end == std::string_view::npos) fail("unterminated string", start - 1);
    pos_ = end + 1;
    return std::string(s_.substr(start, end - start));
  }

  // A followedby argument: a path, or a quoted path.
  Path argument() {
    skip_ws();
    const char q = peek();
    if (q == '"' || q == '\'') {
      const std::size_t base = pos_ + 1;
      const std::string inner = literal();
      try {
        Parser sub(inner);
        Path p = sub.path();
        sub.skip_ws();
        if (sub.pos_ != inner.size()) sub.fail("unexpected trailing input", sub.pos_);
        return p;
      } catch (const QueryError& e) {
        throw QueryError(std::string(e.what()).substr(std::string(e.what()).find(": ") + 2), base + e.offset());
      }
    }
    return path();
  }

  Path path() {
    Path p;
    if (peek() != '/') fail("a path starts with '/' or '//'", pos_);
    while (peek() == '/') {
      Step::Axis axis = Step::Axis::child;
      ++pos_;
      if (peek() == '/') {
        axis = Step::Axis::descendant;
        ++pos_;
      }
      if (s_.substr(pos_, 2) == "..") {
        if (axis == Step::Axis::descendant) fail("'..' cannot follow '//'", pos_);
        pos_ += 2;
        p.steps.push_back({Step::Axis::parent, "*", {}});
        continue;
      }
      Step st{axis, {}, {}};
      if (peek() == '*') {
        ++pos_;
        st.name = "*";
      } else {
        st.name = name();
        if (st.name.empty()) fail("expected a node name, '*' or '..'", pos_);
      }
      while (peek() == '[') st.predicates.push_back(predicate());
      p.steps.push_back(std::move(st));
    }
    return p;
  }

  Predicate predicate() {
    expect('[');
    skip_ws();
    Predicate pr;
    const std::size_t at = pos_;
    bool attr = false;
    if (peek() == '@') {
      ++pos_;
      attr = true;
    }
    if (peek() == '*') {
      if (!attr) fail("expected '@*'", at);
      ++pos_;
      pr.kind = Predicate::Kind::any_attribute;
    } else {
      std::string n = name();
      if (n.empty()) fail("expected an attribute name or text()", pos_);
      if (!attr && n == "text" && peek() == '(') {
        ++pos_;
        expect(')');
        pr.kind = Predicate::Kind::text;
      } else if (n == "text") {
        pr.kind = Predicate::Kind::text;
      } else if (n == "dsg_cat" || n == "dsg_class") {
        pr.kind = Predicate::Kind::category;
      } else {
        pr.kind = Predicate::Kind::attribute;
        pr.name = std::move(n);
      }
    }
    skip_ws();
    expect('=');
    skip_ws();
    pr.value = literal();
    skip_ws();
    expect(']');
    return pr;
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

bool class_token(const xml::Node& n, std::string_view name) {
  const std::string* c = n.attribute("class");
  if (!c) return false;
  std::istringstream in(*c);
  for (std::string t; in >> t;) {
    if (t == name) return true;
  }
  return false;
}

bool name_matches(const xml::Node& n, std::string_view name) {
  if (name == "*") return true;
  if (n.name == name || class_token(n, name)) return true;
  const std::string* c = n.attribute("dsg_cat");
  return c && normalize_category(*c) == normalize_category(name);
}

bool text_matches(const xml::Node& n, const std::string& value) {
  for (const xml::Node& c : n.children) {
    if (c.kind != xml::Node::Kind::text) continue;
    std::string_view t = c.text;
    if (t == value) return true;
    // Tokens keep their attached punctuation ("Diplome,"); the bare word matches too.
    while (!t.empty() && std::string_view(",.;:!?").find(t.back()) != std::string_view::npos) {
      t.remove_suffix(1);
    }
    if (t == value && !value.empty()) return true;
  }
  return false;
}

bool predicate_holds(const xml::Node& n, const Predicate& p) {
  switch (p.kind) {
    case Predicate::Kind::text: return text_matches(n, p.value);
    case Predicate::Kind::category: {
      const std::string* c = n.attribute("dsg_cat");
      return c && normalize_category(*c) == normalize_category(p.value);
    }
    case Predicate::Kind::attribute: {
      const std::string* v = n.attribute(p.name);
      return v && *v == p.value;
    }
    case Predicate::Kind::any_attribute:
      return std::any_of(n.attributes.begin(), n.attributes.end(),
                         [&](const auto& kv) { return kv.second == p.value; });
  }
  return false;
}

void sort_unique(NodeList& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

}  // namespace

Query parse(std::string_view text) { return Parser(text).query(); }

std::string normalize_category(std::string_view name) {
  std::string out;
  for (char c : name) {
    if (std::isalnum(static_cast<unsigned char>(c))) out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  if (out == "contentblock") out = "textblock";
  return out;
}

Document::Document(xml::Node page) : page_(std::move(page)) {
  auto index = [&](auto&& self, const xml::Node& n, std::optional<std::size_t> parent) -> void {
    const std::size_t me = nodes_.size();
    nodes_.push_back({&n, parent, {}});
    if (parent) nodes_[*parent].children.push_back(me);
    for (const xml::Node& c : n.children) {
      if (c.is_element()) self(self, c, me);
    }
  };
  index(index, page_, std::nullopt);
}

Document Document::from_hocr(const xml::Node& root) { return Document(hocr::page_element(root)); }

Document Document::from_tree(const DocumentTree& t, std::span<const Word> words) {
  return from_hocr(hocr::to_hocr(t, words));
}

std::optional<std::size_t> Document::find_entity(std::string_view dsg_id) const {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const std::string* v = nodes_[i].node->attribute("dsg_id");
    if (v && *v == dsg_id) return i;
  }
  return std::nullopt;
}

NodeList query_name(const Document& doc, std::string_view name) {
  NodeList out;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    if (name_matches(doc.node(i), name)) out.push_back(i);
  }
  return out;
}

NodeList query_path(const Document& doc, const Path& path) {
  // std::nullopt stands for the document node above the page element.
  std::vector<std::optional<std::size_t>> context{std::nullopt};
  for (const Step& st : path.steps) {
    NodeList next;
    for (const auto& c : context) {
      switch (st.axis) {
        case Step::Axis::child:
          if (!c) next.push_back(0);
          else for (std::size_t k : doc.children(*c)) next.push_back(k);
          break;
        case Step::Axis::descendant: {
          // descendant-or-self::node()/child::*  ==  every proper descendant
          std::vector<std::size_t> stack;
          if (!c) stack.push_back(0);
          else stack.assign(doc.children(*c).begin(), doc.children(*c).end());
          while (!stack.empty()) {
            const std::size_t v = stack.back();
            stack.pop_back();
            next.push_back(v);
            for (std::size_t k : doc.children(v)) stack.push_back(k);
          }
          break;
        }
        case Step::Axis::parent:
          if (c) {
            if (auto p = doc.parent(*c)) next.push_back(*p);
          }
          break;
      }
    }
    sort_unique(next);
    std::erase_if(next, [&](std::size_t i) {
      const xml::Node& n = doc.node(i);
      if (st.axis != Step::Axis::parent && !name_matches(n, st.name)) return true;
      return !std::all_of(st.predicates.begin(), st.predicates.end(),
                          [&](const Predicate& p) { return predicate_holds(n, p); });
    });
    context.assign(next.begin(), next.end());
  }
  NodeList out;
  for (const auto& c : context) {
    if (c) out.push_back(*c);
  }
  return out;
}

NodeList followedby(const Document& doc, const NodeList& first, const NodeList& second, bool direct) {
  std::set<std::size_t> reached;
  for (std::size_t x : first) {
    std::size_t cur = x;
    std::set<std::size_t> seen{cur};
    while (true) {
      const std::string* next = doc.node(cur).attribute("dsg_next");
      if (!next) break;
      auto n = doc.find_entity(*next);
      if (!n || !seen.insert(*n).second) break;
      reached.insert(*n);
      if (direct) break;
      cur = *n;
    }
  }
  NodeList out;
  for (std::size_t y : second) {
    if (reached.contains(y)) out.push_back(y);
  }
  sort_unique(out);
  return out;
}

NodeList evaluate(const Document& doc, const Query& q, bool direct) {
  if (q.kind == Query::Kind::followedby) {
    return followedby(doc, query_path(doc, q.path), query_path(doc, q.second), direct);
  }
  return query_path(doc, q.path);
}

NodeList evaluate(const Document& doc, std::string_view text, bool direct) {
  return evaluate(doc, parse(text), direct);
}

std::vector<std::string> words_under(const Document& doc, std::size_t node) {
  std::vector<std::string> out;
  auto visit = [&](auto&& self, std::size_t i) -> void {
    const xml::Node& n = doc.node(i);
    if (n.name == "span" && class_token(n, "ocrx_word")) out.push_back(n.deep_text());
    for (std::size_t k : doc.children(i)) self(self, k);
  };
  visit(visit, node);
  return out;
}

Json to_json(const Document& doc, const NodeList& nodes) {
  Json out = Json::array();
  for (std::size_t i : nodes) {
    const xml::Node& n = doc.node(i);
    Json j;
    const std::string* id = n.attribute("dsg_id");
    if (!id) id = n.attribute("id");
    j["id"] = id ? Json(*id) : Json(nullptr);
    const std::string* c = n.attribute("dsg_cat");
    j["category"] = c ? Json(*c) : Json(nullptr);
    j["bbox"] = nullptr;
    if (const std::string* title = n.attribute("title")) {
      std::istringstream in(*title);
      std::string tag;
      double a, b, cc, d;
      if (in >> tag && tag == "bbox" && in >> a >> b >> cc >> d) j["bbox"] = Json::array({a, b, cc, d});
    }
    j["text"] = words_under(doc, i);
    out.push_back(std::move(j));
  }
  return out;
}

}  // namespace docstruct::query
