#include "docstruct/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <future>
#include <iostream>
#include <mutex>

#include "docstruct/dataio.hpp"
#include "docstruct/hocr.hpp"

namespace docstruct::pipeline {

namespace fs = std::filesystem;

namespace log {

namespace {
std::atomic<bool> quiet_flag{false};
std::mutex sink;

std::string quoted(const std::string& v) {
  const bool plain = !v.empty() && v.find_first_of(" \t\n\"=") == std::string::npos;
  return plain ? v : Json(v).dump();
}

void emit(std::string_view level, std::string_view event, std::initializer_list<Field> fields) {
  std::string line = "level=" + std::string(level) + " event=" + std::string(event);
  for (const auto& [k, v] : fields) line += " " + std::string(k) + "=" + quoted(v);
  std::lock_guard lock(sink);
  std::cerr << line << '\n';
}
}  // namespace

void set_quiet(bool quiet) { quiet_flag = quiet; }

void info(std::string_view event, std::initializer_list<Field> fields) {
  if (!quiet_flag) emit("info", event, fields);
}

void error(std::string_view event, std::initializer_list<Field> fields) { emit("error", event, fields); }

}  // namespace log

Inference infer_page(const DocumentGraph& page, const relhead::RelationModel& model) {
  // Any relations on the input are ignored; inference only looks at entities.
  const DocumentGraph entities_only(page.page_size(), {page.entities().begin(), page.entities().end()}, {});
  Inference out;
  out.scores = relhead::score_pairs(entities_only, model);
  out.predicted = relhead::predict_relations(entities_only, model, out.scores);
  return out;
}

grammar::Result repair_page(const DocumentGraph& predicted, const std::vector<relhead::PairScore>* scores,
                            bool strict_grammar) {
  std::optional<grammar::ScoreTable> table;
  if (scores) table.emplace(*scores);
  return grammar::postprocess(predicted, table ? &*table : nullptr, grammar::Options{strict_grammar});
}

Json evaluate_pages(std::span<const DocumentGraph> predicted, std::span<const DocumentGraph> gold,
                    std::span<const double> thresholds) {
  if (predicted.size() != gold.size()) throw Error("prediction and ground truth page counts differ");
  std::vector<metrics::PagePair> pairs;
  for (std::size_t i = 0; i < predicted.size(); ++i) pairs.push_back({&predicted[i], &gold[i]});
  Json out = Json::array();
  for (double t : thresholds) out.push_back(metrics::to_json(metrics::evaluate(pairs, t)));
  return out;
}

std::vector<double> parse_thresholds(std::string_view text) {
  std::vector<double> out;
  while (!text.empty()) {
    const std::size_t comma = text.find(',');
    std::string_view item = text.substr(0, comma);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    double v = 0;
    auto [end, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (ec != std::errc() || end != item.data() + item.size()) {
      throw Error("invalid IoU threshold '" + std::string(item) + "'");
    }
    if (!(v > 0 && v <= 1)) throw Error("IoU threshold must lie in (0, 1]");
    out.push_back(v);
    text = comma == std::string_view::npos ? std::string_view{} : text.substr(comma + 1);
  }
  if (out.empty()) throw Error("no IoU thresholds given");
  return out;
}

void PipelineConfig::check() const {
  if (model.empty()) throw Error("no model file given");
  if (input.empty()) throw Error("no input directory given");
  if (output.empty()) throw Error("no output directory given");
  if (tau && !(*tau > 0 && *tau < 1)) throw Error("tau must lie in (0, 1)");
  if (iou_thresholds.empty()) throw Error("no IoU thresholds given");
  for (double t : iou_thresholds) {
    if (!(t > 0 && t <= 1)) throw Error("IoU threshold must lie in (0, 1]");
  }
  if (jobs == 0) throw Error("jobs must be positive");
}

PipelineConfig pipeline_config_from_json(const Json& j, PipelineConfig c) {
  if (!j.is_object()) throw Error("pipeline config must be a JSON object");
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "model") c.model = v.get<std::string>();
      else if (key == "input") c.input = v.get<std::string>();
      else if (key == "output") c.output = v.get<std::string>();
      else if (key == "words") c.words = v.get<std::string>();
      else if (key == "gold") c.gold = v.get<std::string>();
      else if (key == "tau") c.tau = v.get<double>();
      else if (key == "iou") c.iou_thresholds = v.get<std::vector<double>>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "strict_grammar") c.strict_grammar = v.get<bool>();
      else if (key == "jobs") c.jobs = v.get<unsigned>();
      else throw Error("unknown pipeline config key: " + key);
    }
  } catch (const Json::exception& e) {
    throw Error(std::string("malformed pipeline config: ") + e.what());
  }
  return c;
}

namespace {

struct PageOutcome {
  std::string stem;
  std::optional<DocumentGraph> tree;
  std::optional<DocumentGraph> gold;
  std::vector<FileError> errors;
};

PageOutcome process(const fs::path& file, const PipelineConfig& cfg, const relhead::RelationModel& model) {
  PageOutcome out;
  out.stem = file.stem().string();
  const fs::path out_base = cfg.output / out.stem;
  try {
    const dataio::LoadedPage page = dataio::load_page(file, model.categories);
    std::vector<Word> words;
    const fs::path words_file = cfg.words.value_or(cfg.input) / (out.stem + ".words.json");
    if (fs::exists(words_file)) words = words_from_json(read_json_file(words_file));

    const Inference inf = infer_page(page.graph, model);
    const grammar::Result repaired = repair_page(inf.predicted, &inf.scores, cfg.strict_grammar);

    write_json_file(fs::path(out_base) += ".pred.json", to_json(inf.predicted));
    write_json_file(fs::path(out_base) += ".tree.json", to_json(repaired.tree.graph()));
    write_json_file(fs::path(out_base) += ".trace.json", grammar::to_json(repaired.trace));
    write_text_file(fs::path(out_base) += ".hocr", hocr::to_hocr_string(repaired.tree, words));
    out.tree = repaired.tree.graph();
  } catch (const std::exception& e) {
    out.errors.push_back({file.filename().string(), e.what()});
    return out;
  }
  if (cfg.gold) {
    const fs::path gold_file = *cfg.gold / file.filename();
    try {
      out.gold = load_graph(gold_file, model.categories);
    } catch (const std::exception& e) {
      out.errors.push_back({gold_file.filename().string(), e.what()});
    }
  }
  return out;
}

}  // namespace

RunReport run_pipeline(const PipelineConfig& cfg) {
  cfg.check();
  relhead::RelationModel model = relhead::load_model(cfg.model);
  if (cfg.tau) model.tau = *cfg.tau;
  fs::create_directories(cfg.output);
  const std::vector<fs::path> files = dataio::page_files(cfg.input);
  log::info("pipeline_start", {{"pages", std::to_string(files.size())}, {"jobs", std::to_string(cfg.jobs)}});

  std::vector<PageOutcome> outcomes(files.size());
  auto work = [&](std::size_t begin, std::size_t step) {
    for (std::size_t i = begin; i < files.size(); i += step) {
      outcomes[i] = process(files[i], cfg, model);
      if (outcomes[i].errors.empty()) log::info("page_done", {{"page", outcomes[i].stem}});
    }
  };
  std::vector<std::future<void>> tasks;
  for (unsigned t = 1; t < cfg.jobs; ++t) tasks.push_back(std::async(std::launch::async, work, t, cfg.jobs));
  work(0, cfg.jobs);
  for (auto& t : tasks) t.get();

  RunReport report;
  std::vector<DocumentGraph> predicted, gold;
  for (PageOutcome& o : outcomes) {
    for (FileError& e : o.errors) {
      log::error("page_failed", {{"file", e.file}, {"message", e.message}});
      report.errors.push_back(std::move(e));
    }
    if (!o.tree) continue;
    report.pages.push_back(o.stem);
    if (o.gold) {
      predicted.push_back(std::move(*o.tree));
      gold.push_back(std::move(*o.gold));
    }
  }

  Json errors = Json::array();
  for (const FileError& e : report.errors) errors.push_back({{"file", e.file}, {"message", e.message}});
  report.summary = Json{{"pages", report.pages}, {"errors", std::move(errors)}, {"seed", cfg.seed}};
  if (cfg.gold) report.summary["evaluation"] = evaluate_pages(predicted, gold, cfg.iou_thresholds);
  write_json_file(cfg.output / "summary.json", report.summary);
  log::info("pipeline_done", {{"pages", std::to_string(report.pages.size())},
                              {"errors", std::to_string(report.errors.size())}});
  return report;
}

}  // namespace docstruct::pipeline
