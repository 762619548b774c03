#include <doctest.h>

#include <algorithm>

#include "docstruct/hocr.hpp"
#include "docstruct/query.hpp"
#include "oracles.hpp"
#include "querygen.hpp"
#include "synth.hpp"

using namespace docstruct;
using namespace docstruct::query;

namespace {

std::vector<std::string> ids(const Document& doc, const NodeList& nodes) {
  std::vector<std::string> out;
  for (std::size_t n : nodes) out.push_back(*doc.node(n).attribute("id"));
  return out;
}

std::vector<std::string> dsg_ids(const Document& doc, const NodeList& nodes) {
  std::vector<std::string> out;
  for (std::size_t n : nodes) out.push_back(*doc.node(n).attribute("dsg_id"));
  return out;
}

std::size_t error_offset(std::string_view text) {
  try {
    parse(text);
  } catch (const QueryError& e) {
    return e.offset();
  }
  return std::string::npos;
}

using Strings = std::vector<std::string>;

}  // namespace

TEST_CASE("parse errors carry byte offsets") {
  CHECK(error_offset("") == 0);
  CHECK(error_offset("//div[") == 6);
  CHECK(error_offset("//div[dsg_cat=\"x]") == 14);
  CHECK(error_offset("//div]") == 5);
  CHECK(error_offset("//..") == 2);
  CHECK(error_offset("followedby(//a, //b") == 19);
  CHECK(error_offset("followedby('//a[', //b)") == 16);
  CHECK(error_offset("/div/") == 5);
  CHECK(parse("heading").kind == Query::Kind::name);
  CHECK(parse("/div").kind == Query::Kind::absolute);
  CHECK(parse("//div/..").kind == Query::Kind::relative);
  CHECK(parse("followedby(//a, '//b')").kind == Query::Kind::followedby);
}

TEST_CASE("category names normalize") {
  CHECK(normalize_category("orderedgroup") == normalize_category("ordered_group"));
  CHECK(normalize_category("Ordered-Group") == normalize_category("ordered_group"));
  CHECK(normalize_category("contentblock") == normalize_category("text_block"));
  CHECK(normalize_category("heading") != normalize_category("header"));
}

TEST_CASE("worked examples on the magazine page") {
  const testing::PageWithWords p = testing::magazine_page();
  const Document doc = Document::from_tree(DocumentTree::from_graph(p.graph), p.words);

  const NodeList row = evaluate(
      doc, R"(//div[@dsg_class="tabular"]/*/div[@dsg_class="row"]/span[text()="Diplome"]/..)");
  REQUIRE(row.size() == 1);
  CHECK(words_under(doc, row[0]) == Strings{"Institutionen,", "Kurse,", "Diplome,", "XII"});

  const NodeList headings = evaluate(doc, R"(//div[@dsg_class="heading"])");
  REQUIRE(headings.size() >= 2);
  CHECK(words_under(doc, headings[0]) == Strings{"Das", "Wallis", "im", "Profil"});
  CHECK(words_under(doc, headings[1]) == Strings{"Biographie", "-", "Bibliographie", "Maurice", "Chappaz"});

  const NodeList after = evaluate(
      doc, R"(followedby('//div[@dsg_cat="heading"]/span[text()="Biographie"]/..', '//div[@dsg_cat="contentblock"]'))");
  REQUIRE(after.size() == 1);
  CHECK(words_under(doc, after[0]) == Strings{"Geboren", "am", "21.12.191", "6", "in", "Martigny"});

  const NodeList results =
      evaluate(doc, R"(//div[dsg_cat="orderedgroup"]/*/div[dsg_cat="heading"]/span[@text="results"]/..)");
  CHECK(dsg_ids(doc, results) == Strings{"h3"});

  const NodeList tb = evaluate(doc, R"(followedby(//div[dsg_cat="heading"], //div[dsg_cat="textblock"]))");
  CHECK(dsg_ids(doc, tb) == Strings{"t1", "t3"});

  CHECK(dsg_ids(doc, evaluate(doc, "/ocr_page")) == Strings{"root"});
  CHECK(dsg_ids(doc, evaluate(doc, "/div")) == Strings{"root"});
  CHECK(evaluate(doc, "/ocrx_block").empty());
  CHECK(evaluate(doc, "equation").empty());
  CHECK(dsg_ids(doc, query_name(doc, "heading")) == Strings{"h1", "h2", "h3"});
}

TEST_CASE("followedby semantics") {
  const testing::PageWithWords p = testing::magazine_page();
  const Document doc = Document::from_tree(DocumentTree::from_graph(p.graph), p.words);
  const NodeList row1 = evaluate(doc, "//row/span[text()=\"Inhalt\"]/..");
  const NodeList rows = evaluate(doc, "//row");
  REQUIRE(row1.size() == 1);
  CHECK(followedby(doc, row1, rows).size() == 2);
  CHECK(followedby(doc, row1, rows, true).size() == 1);
  CHECK(followedby(doc, rows, query_name(doc, "heading")).empty());
  CHECK(followedby(doc, {}, rows).empty());
}

TEST_CASE("random documents agree with the reference evaluator") {
  testing::Rng rng(12);
  for (int i = 0; i < 150; ++i) {
    const DocumentTree t = DocumentTree::from_graph(testing::random_tree_graph(rng, 2 + i % 20));
    const auto words = testing::random_words(rng, t.graph(), rng() % 20, true);
    const std::string text = hocr::to_hocr_string(t, words);
    const oracle::XPath ref(text);
    const Document doc = Document::from_hocr(xml::parse(text));
    for (int k = 0; k < 10; ++k) {
      const testing::QueryPair q = testing::random_query(rng, t.graph(), words);
      INFO(q.engine);
      const NodeList got = evaluate(doc, q.engine);
      CHECK(ids(doc, got) == ref.select(q.xpath));
      CHECK(std::is_sorted(got.begin(), got.end()));
      CHECK(std::adjacent_find(got.begin(), got.end()) == got.end());
    }
    for (const Category& c : CategorySet::magazine().categories()) {
      CHECK(query_name(doc, c.name()) == evaluate(doc, "//" + c.name()));
    }
    const NodeList y = evaluate(doc, "//div");
    const NodeList f = followedby(doc, evaluate(doc, "//*"), y);
    CHECK(std::includes(y.begin(), y.end(), f.begin(), f.end()));
  }
}

TEST_CASE("JSON output") {
  const testing::PageWithWords p = testing::magazine_page();
  const Document doc = Document::from_tree(DocumentTree::from_graph(p.graph), p.words);
  const Json j = to_json(doc, evaluate(doc, "//div[dsg_cat=\"page_nr\"]"));
  REQUIRE(j.size() == 1);
  CHECK(j[0]["id"] == "pnr");
  CHECK(j[0]["category"] == "page_nr");
  CHECK(j[0]["text"] == Json::array({"XII"}));
  CHECK(j[0]["bbox"].size() == 4);
}
