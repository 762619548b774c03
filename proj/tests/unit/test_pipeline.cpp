#include <doctest.h>

#include <cstdlib>
#include <filesystem>

#include "docstruct/pipeline.hpp"
#include "docstruct/relhead.hpp"
#include "synth.hpp"

using namespace docstruct;
namespace fs = std::filesystem;

namespace {

const std::string cli = DOCSTRUCT_CLI;

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("docstruct_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

int run(const std::string& args, const fs::path& log) {
  const std::string cmd = "\"" + cli + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

// Model with small random weights so the pipeline has something to repair.
fs::path write_model(const fs::path& dir) {
  const auto corpus = testing::layout_corpus(4, 3);
  relhead::TrainConfig cfg;
  cfg.fusion_dim = 16;
  const fs::path p = dir / "model.json";
  relhead::save_model(p, relhead::initial_model(corpus, CategorySet::magazine(), cfg));
  return p;
}

void write_pages(const fs::path& dir, std::size_t n, std::uint64_t seed) {
  fs::create_directories(dir);
  testing::Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const DocumentGraph g = testing::layout_page(rng);
    const std::string stem = "p" + std::to_string(i);
    save_graph(dir / (stem + ".json"), g);
    write_json_file(dir / (stem + ".words.json"), to_json(testing::random_words(rng, g, 12)));
  }
}

}  // namespace

TEST_CASE("version and invocation errors") {
  TempDir tmp("cli_basic");
  CHECK(run("--version", tmp.path / "log") == 0);
  CHECK(read_text_file(tmp.path / "log").find('.') != std::string::npos);
  CHECK(run("pipeline --bogus", tmp.path / "log") == 2);
  CHECK(run("", tmp.path / "log") == 2);
  CHECK(run("infer --model nowhere.json --page nowhere.json --out x", tmp.path / "log") == 2);
  CHECK(run("evaluate --pred " + q(tmp.path) + " --gold " + q(tmp.path) + " --iou 1.5", tmp.path / "log") == 2);
}

TEST_CASE("empty input directory") {
  TempDir tmp("cli_empty");
  const fs::path model = write_model(tmp.path);
  fs::create_directories(tmp.path / "in");
  CHECK(run("pipeline --model " + q(model) + " --input " + q(tmp.path / "in") + " --out " + q(tmp.path / "out"),
            tmp.path / "log") == 0);
  const Json s = read_json_file(tmp.path / "out" / "summary.json");
  CHECK(s["pages"].empty());
  CHECK(s["errors"].empty());
}

TEST_CASE("one page with ground truth") {
  TempDir tmp("cli_one");
  const fs::path model = write_model(tmp.path);
  write_pages(tmp.path / "in", 1, 7);
  CHECK(run("pipeline --model " + q(model) + " --input " + q(tmp.path / "in") + " --gold " + q(tmp.path / "in") +
                " --out " + q(tmp.path / "out"),
            tmp.path / "log") == 0);
  for (const char* ext : {".pred.json", ".tree.json", ".trace.json", ".hocr"}) {
    CHECK(fs::exists(tmp.path / "out" / (std::string("p0") + ext)));
  }
  CHECK(std::distance(fs::directory_iterator(tmp.path / "out"), fs::directory_iterator{}) == 5);
  const Json s = read_json_file(tmp.path / "out" / "summary.json");
  REQUIRE(s["evaluation"].size() == 2);
  CHECK(s["evaluation"][0]["iou_threshold"] == 0.5);
  CHECK(s["evaluation"][1]["iou_threshold"] == 0.75);
  CHECK(s["evaluation"][0].contains("map"));
  CHECK(s["evaluation"][0]["relation"].contains("f1"));
  CHECK(read_text_file(tmp.path / "out" / "p0.hocr").find("ocrx_word") != std::string::npos);
}

TEST_CASE("a corrupted page does not stop the others") {
  TempDir tmp("cli_corrupt");
  const fs::path model = write_model(tmp.path);
  write_pages(tmp.path / "in", 3, 8);
  write_text_file(tmp.path / "in" / "p1.json", "{\"entities\": [");
  CHECK(run("--quiet pipeline --model " + q(model) + " --input " + q(tmp.path / "in") + " --out " +
                q(tmp.path / "out"),
            tmp.path / "log") == 1);
  const Json s = read_json_file(tmp.path / "out" / "summary.json");
  CHECK(s["pages"] == Json::array({"p0", "p2"}));
  REQUIRE(s["errors"].size() == 1);
  CHECK(s["errors"][0]["file"] == "p1.json");
  CHECK(fs::exists(tmp.path / "out" / "p2.hocr"));
  CHECK_FALSE(fs::exists(tmp.path / "out" / "p1.hocr"));
  const std::string log = read_text_file(tmp.path / "log");
  CHECK(log.find("level=error") != std::string::npos);
  CHECK(log.find("level=info") == std::string::npos);
}

TEST_CASE("pipeline equals the subcommands run one after another") {
  TempDir tmp("cli_compose");
  const fs::path model = write_model(tmp.path);
  write_pages(tmp.path / "in", 2, 9);
  const fs::path out = tmp.path / "out", man = tmp.path / "manual", log = tmp.path / "log";
  REQUIRE(run("pipeline --jobs 2 --model " + q(model) + " --input " + q(tmp.path / "in") + " --out " + q(out), log) ==
          0);
  fs::create_directories(man);
  for (const char* stem : {"p0", "p1"}) {
    const std::string name = stem;
    REQUIRE(run("infer --model " + q(model) + " --page " + q(tmp.path / "in" / (name + ".json")) + " --out " +
                    q(man / (name + ".pred.json")) + " --scores " + q(man / (name + ".scores.json")),
                log) == 0);
    REQUIRE(run("postprocess --page " + q(man / (name + ".pred.json")) + " --scores " + q(man / (name + ".scores.json")) +
                    " --out " + q(man / (name + ".tree.json")) + " --trace " + q(man / (name + ".trace.json")),
                log) == 0);
    REQUIRE(run("convert --tree " + q(man / (name + ".tree.json")) + " --words " +
                    q(tmp.path / "in" / (name + ".words.json")) + " --out " + q(man / (name + ".hocr")),
                log) == 0);
    for (const char* ext : {".pred.json", ".tree.json", ".trace.json", ".hocr"}) {
      INFO((name + ext));
      CHECK(read_text_file(out / (name + ext)) == read_text_file(man / (name + ext)));
    }
  }
  REQUIRE(run("query --doc " + q(out / "p0.hocr") + " --expr '//div'", log) == 0);
  CHECK(Json::parse(read_text_file(log)).size() == read_json_file(out / "p0.tree.json")["entities"].size());
  CHECK(run("query --doc " + q(out / "p0.hocr") + " --expr '//div['", log) == 2);
  REQUIRE(run("evaluate --pred " + q(out) + " --gold " + q(tmp.path / "in") + " --iou 0.5", log) == 0);
  CHECK(Json::parse(read_text_file(log)).size() == 1);
}

TEST_CASE("config file with flag overrides") {
  TempDir tmp("cli_config");
  const fs::path model = write_model(tmp.path);
  write_pages(tmp.path / "in", 1, 10);
  write_json_file(tmp.path / "cfg.json", Json{{"pipeline",
                                               {{"model", model.string()},
                                                {"input", (tmp.path / "in").string()},
                                                {"output", (tmp.path / "a").string()},
                                                {"seed", 3}}}});
  CHECK(run("--config " + q(tmp.path / "cfg.json") + " pipeline", tmp.path / "log") == 0);
  CHECK(read_json_file(tmp.path / "a" / "summary.json")["seed"] == 3);
  CHECK(run("--config " + q(tmp.path / "cfg.json") + " pipeline --seed 4 --out " + q(tmp.path / "b"),
            tmp.path / "log") == 0);
  CHECK(read_json_file(tmp.path / "b" / "summary.json")["seed"] == 4);
  write_json_file(tmp.path / "bad.json", Json{{"pipeline", {{"colour", "red"}}}});
  CHECK(run("--config " + q(tmp.path / "bad.json") + " pipeline", tmp.path / "log") == 2);
}

TEST_CASE("threshold parsing") {
  CHECK(pipeline::parse_thresholds("0.5, 0.75") == std::vector<double>{0.5, 0.75});
  CHECK_THROWS_AS(pipeline::parse_thresholds("0"), Error);
  CHECK_THROWS_AS(pipeline::parse_thresholds("a"), Error);
  CHECK_THROWS_AS(pipeline::parse_thresholds(""), Error);
}
