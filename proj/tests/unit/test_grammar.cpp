#include <doctest.h>

#include <algorithm>

#include "docstruct/grammar.hpp"
#include "oracles.hpp"
#include "synth.hpp"

using namespace docstruct;
using namespace docstruct::grammar;

namespace {

Entity ent(const char* id, const Category& c, BBox b = {0, 0, 10, 10}, double conf = 1.0) {
  return {id, c, b, conf};
}
Relation parent(const char* s, const char* o, double conf = 1.0) { return {s, o, RelationType::parent_of, conf}; }
Relation next(const char* s, const char* o, double conf = 1.0) { return {s, o, RelationType::followed_by, conf}; }

bool has_relation(const DocumentGraph& g, const EntityId& s, const EntityId& o, RelationType t) {
  return std::any_of(g.relations().begin(), g.relations().end(),
                     [&](const Relation& r) { return r.subject == s && r.object == o && r.type == t; });
}

std::size_t count(const DocumentGraph& g, const Category& c) {
  return static_cast<std::size_t>(
      std::count_if(g.entities().begin(), g.entities().end(), [&](const Entity& e) { return e.category == c; }));
}

std::size_t count(const RepairTrace& t, Action a) {
  return static_cast<std::size_t>(std::count_if(t.begin(), t.end(), [&](const Repair& r) { return r.action == a; }));
}

const PageSize page{100, 100};

}  // namespace

TEST_CASE("root skeleton") {
  RepairTrace trace;
  const DocumentGraph empty = add_root_skeleton(DocumentGraph(page, {}, {}), &trace);
  CHECK(count(empty, cat::document_root) == 1);
  CHECK(count(empty, cat::meta) == 1);
  CHECK(count(empty, cat::article) == 0);
  for (const Entity& e : empty.entities()) {
    CHECK(e.bbox == BBox{0, 0, 100, 100});
    CHECK(e.confidence == 1.0);
  }
  CHECK(trace.size() == 3);  // root, meta, and the relation between them
  CHECK(std::all_of(trace.begin(), trace.end(), [](const Repair& r) { return r.stage == Stage::root; }));

  const DocumentGraph with_root(page, {ent("r", cat::document_root), ent("m", cat::meta)}, {parent("r", "m")});
  trace.clear();
  CHECK(add_root_skeleton(with_root, &trace) == with_root);
  CHECK(trace.empty());

  const DocumentGraph orphans(page,
                              {ent("t1", cat::text_block), ent("t2", cat::text_block), ent("t3", cat::text_block)},
                              {});
  const DocumentGraph sk = add_root_skeleton(orphans);
  CHECK(count(sk, cat::article) == 1);
  CHECK(count(sk, cat::document_root) == 1);

  // Two roots: the stronger one stays, the other goes with its relations.
  const DocumentGraph two(page, {ent("r1", cat::document_root, {}, 0.4), ent("r2", cat::document_root, {}, 0.9),
                                 ent("m", cat::meta)},
                          {parent("r1", "m")});
  trace.clear();
  const DocumentGraph one = add_root_skeleton(two, &trace);
  CHECK(count(one, cat::document_root) == 1);
  CHECK(one.find("r2") != nullptr);
  CHECK(one.relations().empty());
}

TEST_CASE("anti-symmetric conflicts keep the stronger relation") {
  const DocumentGraph g(page, {ent("r", cat::document_root), ent("a", cat::article), ent("b", cat::column)},
                        {parent("r", "a"), parent("a", "b", 0.9), parent("b", "a", 0.4)});
  RepairTrace trace;
  const DocumentGraph out = remove_illegal(g, &trace);
  CHECK(has_relation(out, "a", "b", RelationType::parent_of));
  CHECK_FALSE(has_relation(out, "b", "a", RelationType::parent_of));
  REQUIRE(trace.size() >= 1);
  CHECK(trace[0].rule == "anti_symmetric");
  CHECK(trace[0].relation->subject == "b");
  REQUIRE(trace[0].competitors.size() == 1);
  CHECK(trace[0].competitors[0].confidence == 0.9);
}

TEST_CASE("root may only be a parent") {
  const DocumentGraph g(page, {ent("r", cat::document_root), ent("a", cat::article)},
                        {parent("r", "a"), next("a", "r"), parent("a", "r", 0.2)});
  RepairTrace trace;
  const DocumentGraph out = remove_illegal(g, &trace);
  CHECK(out.relations().size() == 1);
  CHECK(trace.size() == 2);
  for (const Repair& r : trace) CHECK(r.rule == "root_only_parent");
}

TEST_CASE("cycle loses its weakest edge") {
  const DocumentGraph g(page,
                        {ent("r", cat::document_root), ent("a", cat::column), ent("b", cat::column),
                         ent("c", cat::column)},
                        {parent("a", "b", 0.7), parent("b", "c", 0.9), parent("c", "a", 0.3)});
  RepairTrace trace;
  const DocumentGraph out = remove_illegal(g, &trace);
  CHECK(out.relations().size() == 2);
  CHECK_FALSE(has_relation(out, "c", "a", RelationType::parent_of));
  REQUIRE(trace.size() == 1);
  CHECK(trace[0].rule == "acyclic");
  CHECK(trace[0].competitors.size() == 2);
}

TEST_CASE("single parent, single predecessor and single successor") {
  const DocumentGraph g(page,
                        {ent("r", cat::document_root), ent("p", cat::column), ent("q", cat::column),
                         ent("x", cat::text_block), ent("y", cat::text_block), ent("z", cat::text_block)},
                        {parent("r", "p"), parent("r", "q"), parent("p", "x", 0.8), parent("q", "x", 0.6),
                         parent("p", "y"), parent("p", "z"), next("x", "y", 0.5), next("x", "z", 0.7),
                         next("y", "z", 0.4)});
  RepairTrace trace;
  const DocumentGraph out = remove_illegal(g, &trace);
  CHECK_FALSE(has_relation(out, "q", "x", RelationType::parent_of));
  CHECK(has_relation(out, "x", "z", RelationType::followed_by));
  CHECK_FALSE(has_relation(out, "y", "z", RelationType::followed_by));
  CHECK_FALSE(has_relation(out, "x", "y", RelationType::followed_by));
  std::vector<std::string> rules;
  for (const Repair& r : trace) rules.push_back(r.rule);
  CHECK(rules == std::vector<std::string>{"single_parent", "single_predecessor", "single_successor"});
}

TEST_CASE("unordered groups and sibling order") {
  const DocumentGraph g(page,
                        {ent("r", cat::document_root), ent("a", cat::article), ent("u", cat::unordered_group),
                         ent("v", cat::column), ent("t1", cat::text_block), ent("t2", cat::text_block),
                         ent("t3", cat::text_block)},
                        {parent("r", "a"), parent("a", "u"), parent("a", "v"), next("u", "v"), parent("u", "t1"),
                         parent("u", "t2"), next("t1", "t2"), parent("v", "t3"), next("t2", "t3")});
  const DocumentGraph loose = remove_illegal(g);
  CHECK_FALSE(has_relation(loose, "u", "v", RelationType::followed_by));
  CHECK(has_relation(loose, "t1", "t2", RelationType::followed_by));
  CHECK_FALSE(has_relation(loose, "t2", "t3", RelationType::followed_by));
  const DocumentGraph strict = remove_illegal(g, nullptr, {true});
  CHECK_FALSE(has_relation(strict, "t1", "t2", RelationType::followed_by));
  CHECK(postprocess(g, nullptr, {true}).tree.graph().relations().size() == 7);
}

TEST_CASE("missing parents follow scores, then the fallback ranking") {
  const DocumentGraph g(page,
                        {ent("r", cat::document_root, {0, 0, 100, 100}), ent("m", cat::meta, {0, 0, 100, 100}),
                         ent("a", cat::article, {0, 0, 100, 100}), ent("c1", cat::column, {0, 0, 50, 100}),
                         ent("c2", cat::column, {50, 0, 100, 100}), ent("t", cat::text_block, {60, 10, 90, 20})},
                        {parent("r", "m"), parent("r", "a"), parent("a", "c1"), parent("a", "c2")});
  ScoreTable scores;
  scores.set("c1", "t", 0.8);
  scores.set("c2", "t", 0.3);
  RepairTrace trace;
  const DocumentTree scored = complete_missing(g, &scores, &trace);
  CHECK(scored.parent_of("t") == "c1");
  REQUIRE(trace.size() == 1);
  CHECK(trace[0].relation->confidence == 0.8);
  CHECK(trace[0].stage == Stage::missing);

  // Without scores the column that contains the block wins.
  const DocumentTree geometric = complete_missing(g, nullptr);
  CHECK(geometric.parent_of("t") == "c2");

  // A lone orphan with only the root available.
  const DocumentGraph bare(page, {ent("r", cat::document_root), ent("t", cat::text_block)}, {});
  CHECK(complete_missing(bare, nullptr).parent_of("t") == "r");
}

TEST_CASE("one cycle and one orphan") {
  const DocumentGraph g(page,
                        {ent("r", cat::document_root), ent("m", cat::meta), ent("art", cat::article),
                         ent("a", cat::column), ent("b", cat::column), ent("c", cat::text_block),
                         ent("d", cat::text_block)},
                        {parent("r", "m"), parent("r", "art"), parent("art", "a"), parent("art", "b"),
                         next("a", "b", 0.9), parent("b", "c", 0.8), next("c", "a", 0.2)});
  const Result res = postprocess(g);
  CHECK(res.trace.size() == 2);
  CHECK(count(res.trace, Action::removed_relation) == 1);
  CHECK(count(res.trace, Action::added_relation) == 1);
  CHECK(res.trace[0].rule == "acyclic");
  CHECK(res.tree.parent_of("d").has_value());
}

TEST_CASE("valid input is untouched") {
  testing::Rng rng(4);
  for (int i = 0; i < 100; ++i) {
    const DocumentGraph g = testing::random_tree_graph(rng, 15);
    const Result r = postprocess(g);
    CHECK(r.trace.empty());
    CHECK(r.tree.graph() == g);
  }
  const Result empty = postprocess(DocumentGraph(page, {}, {}));
  CHECK(empty.tree.graph().entities().size() == 2);
}

TEST_CASE("fuzz: total, idempotent, monotone, replayable") {
  testing::Rng rng(99);
  for (int i = 0; i < 1000; ++i) {
    const DocumentGraph g = testing::fuzz_graph(rng, 8 + i % 13, 2 * (8 + i % 13));
    ScoreTable scores;
    for (const Entity& a : g.entities()) {
      for (const Entity& b : g.entities()) {
        if (a.id != b.id && rng() % 3 == 0) scores.set(a.id, b.id, static_cast<double>(rng() % 5) / 4);
      }
    }
    for (bool strict : {false, true}) {
      const Result r = postprocess(g, i % 2 ? &scores : nullptr, {strict});
      REQUIRE(oracle::is_valid_tree(r.tree.graph(), strict));
      const Result again = postprocess(r.tree.graph(), nullptr, {strict});
      CHECK(again.trace.empty());
      CHECK(again.tree == r.tree);
      CHECK(replay(g, r.trace) == r.tree.graph());
      for (const Repair& rep : r.trace) {
        if (rep.stage != Stage::illegal) continue;
        CHECK(rep.action == Action::removed_relation);
        for (const Relation& c : rep.competitors) CHECK(c.confidence >= rep.relation->confidence);
      }
      CHECK(trace_from_json(Json::parse(dump(to_json(r.trace)))) == r.trace);
    }
  }
}

TEST_CASE("trace JSON rejects unknown stages") {
  Json j = Json::array({{{"stage", "g_xyz"}, {"action", "added_entity"}, {"rule", "skeleton"}}});
  CHECK_THROWS_AS(trace_from_json(j), Error);
  const Result r = postprocess(DocumentGraph(page, {ent("t", cat::text_block)}, {}));
  const Json out = to_json(r.trace);
  CHECK(out[0]["stage"] == "g_rt");
  CHECK(out.back()["stage"] == "g_mis");
}
