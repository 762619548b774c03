#include "docstruct/xml.hpp"

#include <algorithm>
#include <memory>

#include <expat.h>

namespace docstruct::xml {

const std::string* Node::attribute(std::string_view key) const {
  for (const auto& [k, v] : attributes) {
    if (k == key) return &v;
  }
  return nullptr;
}

void Node::set_attribute(std::string key, std::string value) {
  for (auto& [k, v] : attributes) {
    if (k == key) {
      v = std::move(value);
      return;
    }
  }
  attributes.emplace_back(std::move(key), std::move(value));
}

void Node::remove_attribute(std::string_view key) {
  std::erase_if(attributes, [&](const auto& kv) { return kv.first == key; });
}

std::string Node::own_text() const {
  std::string out;
  for (const Node& c : children) {
    if (c.kind == Kind::text) out += c.text;
  }
  return out;
}

std::string Node::deep_text() const {
  if (kind == Kind::text) return text;
  std::string out;
  for (const Node& c : children) out += c.deep_text();
  return out;
}

namespace {

struct Builder {
  std::vector<Node> stack;
  std::optional<Node> root;
  std::string pending;

  void flush_text() {
    if (pending.empty()) return;
    const bool blank = std::all_of(pending.begin(), pending.end(), [](unsigned char c) {
      return c == ' ' || c == '\t' || c == '\n' || c == '\r';
    });
    if (!blank && !stack.empty()) stack.back().children.push_back(Node::text_node(pending));
    pending.clear();
  }
};

void on_start(void* data, const XML_Char* name, const XML_Char** atts) {
  auto* b = static_cast<Builder*>(data);
  b->flush_text();
  Node n = Node::element(name);
  for (const XML_Char** a = atts; *a; a += 2) n.attributes.emplace_back(a[0], a[1]);
  b->stack.push_back(std::move(n));
}

void on_end(void* data, const XML_Char*) {
  auto* b = static_cast<Builder*>(data);
  b->flush_text();
  Node n = std::move(b->stack.back());
  b->stack.pop_back();
  if (b->stack.empty()) b->root = std::move(n);
  else b->stack.back().children.push_back(std::move(n));
}

void on_text(void* data, const XML_Char* s, int len) {
  static_cast<Builder*>(data)->pending.append(s, static_cast<std::size_t>(len));
}

void write(const Node& n, int depth, std::string& out) {
  const std::string indent(static_cast<std::size_t>(2 * depth), ' ');
  if (n.kind == Node::Kind::text) {
    out += indent + escape(n.text, false) + "\n";
    return;
  }
  out += indent + "<" + n.name;
  for (const auto& [k, v] : n.attributes) out += " " + k + "=\"" + escape(v, true) + "\"";
  if (n.children.empty()) {
    out += "/>\n";
    return;
  }
  const bool has_text = std::any_of(n.children.begin(), n.children.end(),
                                    [](const Node& c) { return c.kind == Node::Kind::text; });
  if (has_text) {
    // Inline: no whitespace may be introduced around text.
    out += ">";
    std::string inner;
    for (const Node& c : n.children) {
      if (c.kind == Node::Kind::text) {
        inner += escape(c.text, false);
      } else {
        std::string sub;
        write(c, 0, sub);
        if (!sub.empty() && sub.back() == '\n') sub.pop_back();
        inner += sub;
      }
    }
    out += inner + "</" + n.name + ">\n";
    return;
  }
  out += ">\n";
  for (const Node& c : n.children) write(c, depth + 1, out);
  out += indent + "</" + n.name + ">\n";
}

}  // namespace

Node parse(std::string_view text) {
  std::unique_ptr<std::remove_pointer_t<XML_Parser>, decltype(&XML_ParserFree)> parser(
      XML_ParserCreate("UTF-8"), &XML_ParserFree);
  if (!parser) throw Error("cannot create XML parser");
  Builder b;
  XML_SetUserData(parser.get(), &b);
  XML_SetElementHandler(parser.get(), on_start, on_end);
  XML_SetCharacterDataHandler(parser.get(), on_text);
  if (XML_Parse(parser.get(), text.data(), static_cast<int>(text.size()), XML_TRUE) == XML_STATUS_ERROR) {
    const XML_Index byte = XML_GetCurrentByteIndex(parser.get());
    throw ParseError(XML_ErrorString(XML_GetErrorCode(parser.get())),
                     XML_GetCurrentLineNumber(parser.get()), XML_GetCurrentColumnNumber(parser.get()),
                     byte < 0 ? 0 : static_cast<std::size_t>(byte));
  }
  if (!b.root) throw ParseError("no element found", 1, 0, 0);
  return std::move(*b.root);
}

std::string serialize(const Node& root) {
  std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  write(root, 0, out);
  return out;
}

std::string escape(std::string_view text, bool attribute) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"':
        if (attribute) out += "&quot;";
        else out += c;
        break;
      case '\n':
        if (attribute) out += "&#10;";
        else out += c;
        break;
      case '\t':
        if (attribute) out += "&#9;";
        else out += c;
        break;
      case '\r': out += "&#13;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace docstruct::xml
