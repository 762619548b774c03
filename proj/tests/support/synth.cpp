#include "synth.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace docstruct::testing {

namespace {

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

std::size_t below(Rng& rng, std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); }

double confidence(Rng& rng) {
  // Frequent exact ties exercise the tie-breaking rules.
  static const double levels[] = {0.25, 0.5, 0.75, 1.0};
  if (below(rng, 3) == 0) return levels[below(rng, 4)];
  return uniform(rng, 0.0, 1.0);
}

BBox sub_box(Rng& rng, const BBox& outer, bool integer) {
  const double w = outer.width(), h = outer.height();
  double x0 = outer.x0 + uniform(rng, 0, 0.5) * w;
  double y0 = outer.y0 + uniform(rng, 0, 0.5) * h;
  double x1 = x0 + uniform(rng, 0.2, 1.0) * (outer.x1 - x0);
  double y1 = y0 + uniform(rng, 0.2, 1.0) * (outer.y1 - y0);
  if (integer) {
    x0 = std::floor(x0), y0 = std::floor(y0), x1 = std::ceil(x1), y1 = std::ceil(y1);
    x1 = std::min(std::max(x1, x0 + 1), outer.x1);
    y1 = std::min(std::max(y1, y0 + 1), outer.y1);
    x0 = std::min(x0, x1 - 1);
    y0 = std::min(y0, y1 - 1);
  }
  return {x0, y0, x1, y1};
}

}  // namespace

const std::vector<Category>& non_root_categories() {
  static const std::vector<Category> cats = [] {
    std::vector<Category> v;
    for (const Category& c : CategorySet::magazine().categories()) {
      if (c != cat::document_root) v.push_back(c);
    }
    return v;
  }();
  return cats;
}

DocumentGraph random_tree_graph(Rng& rng, std::size_t max_entities, bool integer_boxes) {
  const std::size_t n = 1 + below(rng, std::max<std::size_t>(max_entities, 1));
  std::vector<Entity> entities{{"e0", cat::document_root, {0, 0, kPage.width, kPage.height}, confidence(rng)}};
  std::vector<Relation> relations;
  std::map<std::size_t, std::vector<std::size_t>> children;
  for (std::size_t i = 1; i < n; ++i) {
    const std::size_t parent = below(rng, entities.size());
    const Category& c = non_root_categories()[below(rng, non_root_categories().size())];
    entities.push_back({"e" + std::to_string(i), c, sub_box(rng, entities[parent].bbox, integer_boxes),
                        confidence(rng)});
    relations.push_back({entities[parent].id, entities[i].id, RelationType::parent_of, confidence(rng)});
    children[parent].push_back(i);
  }
  for (auto& [parent, kids] : children) {
    if (entities[parent].category == cat::unordered_group || kids.size() < 2) continue;
    std::shuffle(kids.begin(), kids.end(), rng);
    const std::size_t chain = below(rng, kids.size() + 1);
    for (std::size_t k = 0; k + 1 < chain; ++k) {
      if (entities[kids[k]].category == cat::unordered_group ||
          entities[kids[k + 1]].category == cat::unordered_group) {
        continue;
      }
      relations.push_back({entities[kids[k]].id, entities[kids[k + 1]].id, RelationType::followed_by,
                           confidence(rng)});
    }
  }
  // Entity order in the file is arbitrary.
  std::shuffle(entities.begin(), entities.end(), rng);
  std::shuffle(relations.begin(), relations.end(), rng);
  return DocumentGraph(kPage, std::move(entities), std::move(relations));
}

std::vector<Word> random_words(Rng& rng, const DocumentGraph& g, std::size_t n, bool plain_text) {
  static const std::vector<std::string> plain = {"Das", "Wallis", "im", "Profil", "results", "Kurse",
                                                 "Diplome", "XII", "Martigny", "am", "in", "Geboren"};
  static const std::vector<std::string> odd = {"a&b", "<tag>", "\"quoted\"", "Zürich", "x>y", "it's",
                                               "Diplome,", "end."};
  std::set<std::string> parents;
  for (const Relation& r : g.relations()) {
    if (r.type == RelationType::parent_of) parents.insert(r.subject);
  }
  std::vector<const Entity*> leaves;
  for (const Entity& e : g.entities()) {
    if (!parents.contains(e.id)) leaves.push_back(&e);
  }
  std::vector<Word> words;
  for (std::size_t i = 0; i < n; ++i) {
    std::string text = plain[below(rng, plain.size())];
    if (!plain_text && below(rng, 4) == 0) text = odd[below(rng, odd.size())];
    BBox box;
    if (below(rng, 8) == 0 || leaves.empty()) {
      box = sub_box(rng, {0, 0, kPage.width, kPage.height}, true);
    } else {
      box = sub_box(rng, leaves[below(rng, leaves.size())]->bbox, true);
    }
    words.push_back({text, box});
  }
  return words;
}

DocumentGraph fuzz_graph(Rng& rng, std::size_t max_entities, std::size_t max_relations) {
  const std::size_t n = 1 + below(rng, max_entities);
  std::vector<Entity> entities;
  const auto& all = CategorySet::magazine().categories();
  for (std::size_t i = 0; i < n; ++i) {
    // Roots are over-represented so that 0, 1 and several roots all occur.
    const Category c = below(rng, 6) == 0 ? cat::document_root : all[below(rng, all.size())];
    entities.push_back({"n" + std::to_string(i), c,
                        sub_box(rng, {0, 0, kPage.width, kPage.height}, false), confidence(rng)});
  }
  std::vector<Relation> relations;
  std::set<std::tuple<std::size_t, std::size_t, int>> used;
  const std::size_t m = n < 2 ? 0 : below(rng, max_relations + 1);
  for (std::size_t k = 0; k < m; ++k) {
    const std::size_t s = below(rng, n), o = below(rng, n);
    if (s == o) continue;
    const int t = below(rng, 10) < 5 ? 0 : (below(rng, 5) < 4 ? 1 : 2);
    if (!used.emplace(s, o, t).second) continue;
    relations.push_back({entities[s].id, entities[o].id, static_cast<RelationType>(t), confidence(rng)});
  }
  return DocumentGraph(kPage, std::move(entities), std::move(relations));
}

DocumentGraph layout_page(Rng& rng) {
  std::vector<Entity> e;
  std::vector<Relation> r;
  auto add = [&](const std::string& id, const Category& c, BBox b) { e.push_back({id, c, b, 1.0}); };
  auto rel = [&](const std::string& s, const std::string& o, RelationType t) { r.push_back({s, o, t, 1.0}); };

  const double W = kPage.width, H = kPage.height;
  add("root", cat::document_root, {0, 0, W, H});
  const double top = uniform(rng, 40, 80);
  const BBox nr{uniform(rng, 40, 120), top - 30, uniform(rng, 150, 200), top};
  const BBox hd{uniform(rng, 400, 500), top - 30, uniform(rng, 700, 950), top};
  add("meta", cat::meta, BBox::enclosing(nr, hd));
  add("nr", cat::page_nr, nr);
  add("hd", cat::header, hd);
  rel("root", "meta", RelationType::parent_of);
  rel("meta", "nr", RelationType::parent_of);
  rel("meta", "hd", RelationType::parent_of);

  const double y0 = top + uniform(rng, 30, 60), y1 = H - uniform(rng, 40, 120);
  const double gap = uniform(rng, 20, 60), mid = W / 2 + uniform(rng, -60, 60);
  const BBox left{uniform(rng, 40, 80), y0, mid - gap / 2, y1};
  const BBox right{mid + gap / 2, y0, W - uniform(rng, 40, 80), y1};
  add("article", cat::article, BBox::enclosing(left, right));
  add("col0", cat::column, left);
  add("col1", cat::column, right);
  rel("root", "article", RelationType::parent_of);
  rel("article", "col0", RelationType::parent_of);
  rel("article", "col1", RelationType::parent_of);
  rel("col0", "col1", RelationType::followed_by);

  int block = 0;
  for (const auto& [col, box] : {std::pair{"col0", left}, std::pair{"col1", right}}) {
    const std::size_t k = 1 + below(rng, 4);
    const double slot = box.height() / static_cast<double>(k);
    for (std::size_t i = 0; i < k; ++i) {
      const double sy = box.y0 + slot * static_cast<double>(i);
      const BBox b{box.x0 + uniform(rng, 0, 10), sy + uniform(rng, 2, 0.2 * slot),
                   box.x1 - uniform(rng, 0, 10), sy + uniform(rng, 0.5, 0.95) * slot};
      const std::string id = "b" + std::to_string(block++);
      add(id, below(rng, 3) == 0 ? cat::heading : cat::text_block, b);
      rel(col, id, RelationType::parent_of);
    }
  }
  std::shuffle(e.begin(), e.end(), rng);
  return DocumentGraph(kPage, std::move(e), std::move(r));
}

std::vector<DocumentGraph> layout_corpus(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<DocumentGraph> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(layout_page(rng));
  return out;
}

std::vector<Word> words_in(const BBox& box, const std::vector<std::string>& texts) {
  std::vector<Word> out;
  const double step = box.width() / static_cast<double>(texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) {
    const double x0 = std::round(box.x0 + step * static_cast<double>(i));
    out.push_back({texts[i], {x0 + 1, box.y0 + 2, std::round(x0 + step) - 1, box.y1 - 2}});
  }
  return out;
}

PageWithWords magazine_page() {
  std::vector<Entity> e;
  std::vector<Relation> r;
  std::vector<Word> words;
  auto add = [&](const std::string& id, const Category& c, BBox b, std::vector<std::string> texts = {}) {
    e.push_back({id, c, b, 1.0});
    if (!texts.empty()) {
      auto w = words_in(b, texts);
      words.insert(words.end(), w.begin(), w.end());
    }
  };
  auto parent = [&](const std::string& s, const std::string& o) { r.push_back({s, o, RelationType::parent_of, 1.0}); };
  auto next = [&](const std::string& s, const std::string& o) { r.push_back({s, o, RelationType::followed_by, 1.0}); };

  add("root", cat::document_root, {0, 0, 1000, 1400});
  add("meta", cat::meta, {40, 20, 960, 60});
  add("pnr", cat::page_nr, {40, 20, 100, 60}, {"XII"});
  parent("root", "meta");
  parent("meta", "pnr");

  add("toc", cat::table_of_contents, {40, 80, 960, 300});
  add("tab", cat::tabular, {40, 80, 960, 300});
  add("tcol", cat::column, {40, 80, 960, 300});
  add("row1", cat::row, {40, 80, 960, 150}, {"Inhalt"});
  add("row2", cat::row, {40, 160, 960, 230}, {"Institutionen,", "Kurse,", "Diplome,", "XII"});
  add("row3", cat::row, {40, 240, 960, 300}, {"Das", "Wallis", "im", "Profil", "3"});
  parent("root", "toc");
  parent("toc", "tab");
  parent("tab", "tcol");
  parent("tcol", "row1");
  parent("tcol", "row2");
  parent("tcol", "row3");
  next("row1", "row2");
  next("row2", "row3");

  add("art", cat::article, {40, 320, 960, 1360});
  add("h1", cat::heading, {40, 320, 960, 400}, {"Das", "Wallis", "im", "Profil"});
  add("og", cat::ordered_group, {40, 420, 960, 1360});
  add("c1", cat::column, {40, 420, 480, 1360});
  add("h2", cat::heading, {40, 420, 480, 520}, {"Biographie", "-", "Bibliographie", "Maurice", "Chappaz"});
  add("t1", cat::text_block, {40, 540, 480, 700}, {"Geboren", "am", "21.12.191", "6", "in", "Martigny"});
  add("c2", cat::column, {520, 420, 960, 1360});
  add("h3", cat::heading, {520, 420, 960, 520}, {"Selected", "results"});
  add("t3", cat::text_block, {520, 540, 960, 800}, {"Werke", "und", "Preise"});
  parent("root", "art");
  parent("art", "h1");
  parent("art", "og");
  next("h1", "og");
  parent("og", "c1");
  parent("og", "c2");
  next("c1", "c2");
  parent("c1", "h2");
  parent("c1", "t1");
  next("h2", "t1");
  parent("c2", "h3");
  parent("c2", "t3");
  next("h3", "t3");
  return {DocumentGraph({1000, 1400}, std::move(e), std::move(r)), std::move(words)};
}

}  // namespace docstruct::testing
