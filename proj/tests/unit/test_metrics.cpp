#include <doctest.h>

#include "docstruct/metrics.hpp"
#include "oracles.hpp"
#include "synth.hpp"

using namespace docstruct;
using namespace docstruct::metrics;

namespace {

BBox int_box(testing::Rng& rng, int extent) {
  std::uniform_int_distribution<int> d(0, extent);
  int x0 = d(rng), x1 = d(rng), y0 = d(rng), y1 = d(rng);
  if (x0 > x1) std::swap(x0, x1);
  if (y0 > y1) std::swap(y0, y1);
  return {double(x0), double(y0), double(x1), double(y1)};
}

std::vector<Entity> jittered(testing::Rng& rng, std::size_t n, const std::vector<Category>& cats) {
  std::uniform_real_distribution<double> u(0, 60), s(5, 40), c(0, 1);
  std::vector<Entity> out;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = u(rng), y = u(rng);
    out.push_back({"p" + std::to_string(i), cats[rng() % cats.size()], {x, y, x + s(rng), y + s(rng)}, c(rng)});
  }
  return out;
}

}  // namespace

TEST_CASE("iou") {
  CHECK(iou({0, 0, 10, 10}, {0, 0, 10, 10}) == 1.0);
  CHECK(iou({0, 0, 10, 10}, {10, 0, 20, 10}) == 0.0);
  CHECK(iou({0, 0, 10, 10}, {5, 0, 15, 10}) == doctest::Approx(1.0 / 3.0));
  CHECK(iou({0, 0, 0, 0}, {0, 0, 0, 0}) == 0.0);
  testing::Rng rng(1);
  for (int i = 0; i < 300; ++i) {
    const BBox a = int_box(rng, 30), b = int_box(rng, 30);
    CHECK(iou(a, b) == oracle::raster_iou(a, b));
    CHECK(iou(a, b) == iou(b, a));
  }
}

TEST_CASE("matching is one to one, same category, strictly above threshold") {
  const std::vector<Entity> gt{{"g1", cat::heading, {0, 0, 10, 10}, 1}, {"g2", cat::text_block, {0, 0, 10, 10}, 1}};
  const std::vector<Entity> pred{{"p1", cat::heading, {0, 0, 10, 10}, 1}, {"p2", cat::heading, {0, 0, 10, 10}, 1},
                                 {"p3", cat::text_block, {5, 0, 15, 10}, 1}};
  const MatchResult m = match_entities(pred, gt, 1.0 / 3.0);
  REQUIRE(m.pairs.size() == 1);
  CHECK(m.pairs[0].ground_truth == "g1");
  CHECK(m.unmatched_ground_truth == std::vector<EntityId>{"g2"});
  CHECK(m.unmatched_predictions.size() == 2);
  CHECK_THROWS_AS(match_entities(pred, gt, 0.0), Error);
  CHECK_THROWS_AS(match_entities(pred, gt, 1.5), Error);
}

TEST_CASE("optimal matching beats greedy where greedy is myopic") {
  // p1 overlaps g1 best, but taking it leaves p2 without a partner.
  const std::vector<Entity> gt{{"g1", cat::heading, {10, 0, 20, 10}, 1}, {"g2", cat::heading, {18, 0, 28, 10}, 1}};
  const std::vector<Entity> pred{{"p1", cat::heading, {11, 0, 21, 10}, 1}, {"p2", cat::heading, {4, 0, 14, 10}, 1}};
  CHECK(match_entities(pred, gt, 0.15, MatchStrategy::optimal).pairs.size() == 2);
  CHECK(match_entities(pred, gt, 0.15, MatchStrategy::greedy).pairs.size() == 1);
}

TEST_CASE("optimal matching equals exhaustive search") {
  testing::Rng rng(2);
  const std::vector<Category> cats{cat::heading, cat::text_block};
  for (int i = 0; i < 300; ++i) {
    const auto pred = jittered(rng, 1 + rng() % 5, cats);
    auto gt = jittered(rng, 1 + rng() % 5, cats);
    for (auto& g : gt) g.id[0] = 'g';
    const auto ref = oracle::best_assignment(pred, gt, 0.3);
    const MatchResult m = match_entities(pred, gt, 0.3);
    double sum = 0;
    for (const auto& p : m.pairs) sum += p.iou;
    CHECK(m.pairs.size() == ref.count);
    CHECK(sum == doctest::Approx(ref.iou_sum).epsilon(1e-12));
    CHECK(m.pairs.size() + m.unmatched_predictions.size() == pred.size());
    CHECK(m.pairs.size() + m.unmatched_ground_truth.size() == gt.size());
  }
}

TEST_CASE("average precision") {
  const std::vector<Entity> gt{{"g1", cat::heading, {0, 0, 10, 10}, 1}, {"g2", cat::heading, {20, 0, 30, 10}, 1}};
  CHECK(*average_precision(gt, gt, cat::heading, 0.5) == doctest::Approx(100.0));
  CHECK_FALSE(average_precision(gt, gt, cat::table, 0.5).has_value());
  // One hit at top confidence, then a miss: precision 1 up to recall 0.5.
  const std::vector<Entity> pred{{"p1", cat::heading, {0, 0, 10, 10}, 0.9}, {"p2", cat::heading, {50, 0, 60, 10}, 0.8}};
  CHECK(*average_precision(pred, gt, cat::heading, 0.5) == doctest::Approx(100.0 * 51.0 / 101.0));

  testing::Rng rng(4);
  const std::vector<Category> cats{cat::heading, cat::text_block, cat::figure};
  for (int i = 0; i < 100; ++i) {
    std::vector<DocumentGraph> preds, gts;
    for (int p = 0; p < 3; ++p) {
      preds.emplace_back(PageSize{100, 100}, jittered(rng, rng() % 7, cats), std::vector<Relation>{});
      auto g = jittered(rng, rng() % 7, cats);
      gts.emplace_back(PageSize{100, 100}, std::move(g), std::vector<Relation>{});
    }
    std::vector<PagePair> pages;
    std::vector<std::pair<const DocumentGraph*, const DocumentGraph*>> ref_pages;
    for (int p = 0; p < 3; ++p) {
      pages.push_back({&preds[p], &gts[p]});
      ref_pages.emplace_back(&preds[p], &gts[p]);
    }
    for (const Category& c : cats) {
      const auto a = average_precision(pages, c, 0.5);
      const auto b = oracle::average_precision(ref_pages, c, 0.5);
      REQUIRE(a.has_value() == b.has_value());
      if (a) CHECK(*a == doctest::Approx(*b).epsilon(1e-12));
    }
  }
}

TEST_CASE("relation f1") {
  testing::Rng rng(6);
  for (int i = 0; i < 200; ++i) {
    const DocumentGraph g = testing::random_tree_graph(rng, 12);
    const RelationScore s = relation_f1(g, g, 0.5);
    CHECK(s.precision == 1.0);
    CHECK(s.recall == 1.0);
    CHECK(s.f1 == 1.0);
  }
  const DocumentGraph empty({10, 10}, {}, {});
  CHECK(relation_f1(empty, empty, 0.5).f1 == 1.0);
  CHECK(f1_score(0, 0) == 0.0);
  CHECK(score({1, 2, 4}).f1 == doctest::Approx(2 * 0.5 * 0.25 / 0.75));

  const std::vector<Category> cats{cat::heading, cat::text_block};
  int compared = 0;
  for (int i = 0; i < 300; ++i) {
    auto make = [&](char prefix) {
      auto ents = jittered(rng, 5, cats);
      for (auto& e : ents) e.id[0] = prefix;
      std::vector<Relation> rels;
      for (int k = 0; k < 8; ++k) {
        const auto s = rng() % 5, o = rng() % 5;
        const auto t = static_cast<RelationType>(rng() % 3);
        if (s == o) continue;
        bool dup = false;
        for (const auto& r : rels) dup |= r.subject == ents[s].id && r.object == ents[o].id && r.type == t;
        if (!dup) rels.push_back({ents[s].id, ents[o].id, t, 1.0});
      }
      return DocumentGraph({100, 100}, std::move(ents), std::move(rels));
    };
    const DocumentGraph p = make('p'), g = make('g');
    const auto ref = oracle::triple_counts(p, g, 0.1);
    if (ref.ambiguous) continue;
    ++compared;
    const RelationCounts c = count_relation_matches(p, g, 0.1);
    CHECK(c.matched == ref.matched);
    CHECK(c.predicted == ref.predicted);
    CHECK(c.ground_truth == ref.ground_truth);
  }
  CHECK(compared > 250);
}

TEST_CASE("evaluation report") {
  testing::Rng rng(8);
  const DocumentGraph g = testing::layout_page(rng);
  const PagePair pages[] = {{&g, &g}};
  const EvalReport r = evaluate(pages, 0.75);
  CHECK(r.map_score == doctest::Approx(100.0));
  const Json j = to_json(r);
  CHECK(j["iou_threshold"] == 0.75);
  CHECK(j["relation"]["f1"] == 1.0);
  CHECK(j["per_category_ap"].contains("column"));
}
