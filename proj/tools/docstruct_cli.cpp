// docstruct: command-line entry point.
//
// Exit codes: 0 success, 1 failure (or partial failure), 2 invalid invocation.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "docstruct/dataio.hpp"
#include "docstruct/grammar.hpp"
#include "docstruct/hocr.hpp"
#include "docstruct/json_io.hpp"
#include "docstruct/metrics.hpp"
#include "docstruct/pipeline.hpp"
#include "docstruct/query.hpp"
#include "docstruct/relhead.hpp"

namespace fs = std::filesystem;
using namespace docstruct;

namespace {

struct Usage : Error {
  using Error::Error;
};

// Config file section for a subcommand: the object under `key` if present, else
// the whole file.
Json config_section(const std::string& file, const char* key) {
  if (file.empty()) return Json::object();
  Json j = read_json_file(file);
  if (!j.is_object()) throw Usage("config file must hold a JSON object");
  if (j.contains(key)) return j[key];
  return j;
}

void write_or_print(const std::string& out, const Json& j) {
  if (out.empty()) std::cout << dump(j);
  else write_json_file(out, j);
}

std::vector<double> thresholds_flag(const std::string& s) {
  try {
    return pipeline::parse_thresholds(s);
  } catch (const Error& e) {
    throw Usage(e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Document structure generation: relation inference, grammar repair, hOCR"};
  app.set_version_flag("--version", DOCSTRUCT_VERSION);
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_file;
  bool quiet = false;
  unsigned jobs = 1;
  app.add_option("--config", config_file, "JSON config file; flags override its values")->check(CLI::ExistingFile);
  app.add_flag("--quiet", quiet, "only log errors");
  app.add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);

  // train
  auto* train = app.add_subcommand("train", "train the relation classifier on a corpus");
  std::string train_corpus, train_splits, train_out, train_log;
  std::optional<std::int64_t> max_it, batch, pairs, fusion;
  std::optional<double> lr, train_tau;
  std::optional<std::uint64_t> seed;
  train->add_option("--corpus", train_corpus, "directory of page files")->required()->check(CLI::ExistingDirectory);
  train->add_option("--splits", train_splits, "split file")->required()->check(CLI::ExistingFile);
  train->add_option("--out", train_out, "model file to write")->required();
  train->add_option("--log", train_log, "write the loss history here");
  train->add_option("--max-iterations", max_it);
  train->add_option("--batch-size", batch);
  train->add_option("--pair-sample-size", pairs);
  train->add_option("--fusion-dim", fusion);
  train->add_option("--learning-rate", lr);
  train->add_option("--tau", train_tau);
  train->add_option("--seed", seed);

  // infer
  auto* infer = app.add_subcommand("infer", "predict relations for one page");
  std::string infer_model, infer_page, infer_out, infer_scores;
  std::optional<double> infer_tau;
  infer->add_option("--model", infer_model)->required()->check(CLI::ExistingFile);
  infer->add_option("--page", infer_page)->required()->check(CLI::ExistingFile);
  infer->add_option("--out", infer_out)->required();
  infer->add_option("--scores", infer_scores, "also write all pair probabilities");
  infer->add_option("--tau", infer_tau);

  // postprocess
  auto* post = app.add_subcommand("postprocess", "repair a predicted page into a valid tree");
  std::string post_page, post_out, post_scores, post_trace;
  bool strict = false;
  post->add_option("--page", post_page)->required()->check(CLI::ExistingFile);
  post->add_option("--out", post_out)->required();
  post->add_option("--scores", post_scores, "pair probabilities from infer")->check(CLI::ExistingFile);
  post->add_option("--trace", post_trace, "write the repair trace here");
  post->add_flag("--strict-grammar", strict, "forbid reading order inside unordered groups");

  // convert
  auto* convert = app.add_subcommand("convert", "write a tree and its words as hOCR");
  std::string conv_tree, conv_words, conv_out;
  convert->add_option("--tree", conv_tree)->required()->check(CLI::ExistingFile);
  convert->add_option("--words", conv_words)->check(CLI::ExistingFile);
  convert->add_option("--out", conv_out)->required();

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "score predictions against ground truth");
  std::string eval_pred, eval_gold, eval_out, eval_iou = "0.5,0.75";
  evaluate->add_option("--pred", eval_pred, "page file or directory")->required()->check(CLI::ExistingPath);
  evaluate->add_option("--gold", eval_gold, "page file or directory")->required()->check(CLI::ExistingPath);
  evaluate->add_option("--iou", eval_iou, "comma-separated IoU thresholds");
  evaluate->add_option("--out", eval_out, "report file (default stdout)");

  // query
  auto* query = app.add_subcommand("query", "run a structure query on an hOCR file");
  std::string query_doc, query_expr;
  bool direct = false;
  query->add_option("--doc", query_doc)->required()->check(CLI::ExistingFile);
  query->add_option("--expr", query_expr)->required();
  query->add_flag("--direct", direct, "followedby: immediate successors only");

  // stats
  auto* stats = app.add_subcommand("stats", "corpus statistics");
  std::string stats_corpus, stats_splits, stats_out;
  stats->add_option("--corpus", stats_corpus)->required()->check(CLI::ExistingDirectory);
  stats->add_option("--splits", stats_splits)->required()->check(CLI::ExistingFile);
  stats->add_option("--out", stats_out, "stats file (default stdout)");

  // pipeline
  auto* pipe = app.add_subcommand("pipeline", "infer, repair and convert every page of a directory");
  std::string p_model, p_input, p_out, p_gold, p_words, p_iou;
  std::optional<double> p_tau;
  std::optional<std::uint64_t> p_seed;
  bool p_strict = false;
  pipe->add_option("--model", p_model);
  pipe->add_option("--input", p_input, "directory of page files");
  pipe->add_option("--out", p_out, "output directory");
  pipe->add_option("--gold", p_gold, "directory of ground-truth pages");
  pipe->add_option("--words", p_words, "directory of <stem>.words.json files");
  pipe->add_option("--tau", p_tau);
  pipe->add_option("--iou", p_iou, "comma-separated IoU thresholds");
  pipe->add_option("--seed", p_seed);
  pipe->add_flag("--strict-grammar", p_strict);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  pipeline::log::set_quiet(quiet);

  try {
    if (*train) {
      relhead::TrainConfig cfg = relhead::train_config_from_json(config_section(config_file, "train"));
      if (max_it) cfg.max_iterations = *max_it;
      if (batch) cfg.batch_size = *batch;
      if (pairs) cfg.pair_sample_size = *pairs;
      if (fusion) cfg.fusion_dim = *fusion;
      if (lr) cfg.learning_rate = *lr;
      if (train_tau) cfg.tau = *train_tau;
      if (seed) cfg.seed = *seed;
      try {
        cfg.check();
      } catch (const Error& e) {
        throw Usage(e.what());
      }
      const dataio::Corpus corpus = dataio::load_corpus(train_corpus, train_splits, CategorySet::magazine(), jobs);
      const auto train_set = corpus.graphs(dataio::Split::train);
      const auto val_set = corpus.graphs(dataio::Split::val);
      pipeline::log::info("train_start", {{"train_pages", std::to_string(train_set.size())},
                                          {"val_pages", std::to_string(val_set.size())}});
      const relhead::TrainResult r = relhead::train(train_set, val_set, cfg, corpus.categories);
      relhead::save_model(train_out, r.model);
      if (!train_log.empty()) {
        write_json_file(train_log, Json{{"config", relhead::to_json(cfg)},
                                        {"iterations", r.iterations},
                                        {"best_validation_f1", r.best_validation_f1},
                                        {"loss", r.loss_history}});
      }
      pipeline::log::info("train_done", {{"iterations", std::to_string(r.iterations)},
                                         {"best_validation_f1", std::to_string(r.best_validation_f1)}});
      return 0;
    }
    if (*infer) {
      relhead::RelationModel model = relhead::load_model(infer_model);
      if (infer_tau) model.tau = *infer_tau;
      model.check();
      const pipeline::Inference inf = pipeline::infer_page(load_graph(infer_page, model.categories), model);
      save_graph(infer_out, inf.predicted);
      if (!infer_scores.empty()) write_json_file(infer_scores, relhead::to_json(inf.scores));
      return 0;
    }
    if (*post) {
      const DocumentGraph g = load_graph(post_page);
      std::optional<std::vector<relhead::PairScore>> scores;
      if (!post_scores.empty()) scores = relhead::pair_scores_from_json(read_json_file(post_scores));
      const grammar::Result r = pipeline::repair_page(g, scores ? &*scores : nullptr, strict);
      save_graph(post_out, r.tree.graph());
      if (!post_trace.empty()) write_json_file(post_trace, grammar::to_json(r.trace));
      return 0;
    }
    if (*convert) {
      const DocumentTree t = DocumentTree::from_graph(load_graph(conv_tree));
      std::vector<Word> words;
      if (!conv_words.empty()) words = words_from_json(read_json_file(conv_words));
      write_text_file(conv_out, hocr::to_hocr_string(t, words));
      return 0;
    }
    if (*evaluate) {
      const std::vector<double> thresholds = thresholds_flag(eval_iou);
      if (fs::is_directory(eval_pred) != fs::is_directory(eval_gold)) {
        throw Usage("--pred and --gold must both be files or both directories");
      }
      std::vector<DocumentGraph> pred, gold;
      if (fs::is_directory(eval_gold)) {
        // Pipeline output (<stem>.tree.json) or plain page files (<stem>.json).
        for (const fs::path& f : dataio::page_files(eval_gold)) {
          const std::string stem = f.stem().string();
          fs::path candidate = fs::path(eval_pred) / (stem + ".tree.json");
          if (!fs::exists(candidate)) candidate = fs::path(eval_pred) / (stem + ".json");
          if (!fs::exists(candidate)) throw Error("no prediction for " + f.filename().string());
          pred.push_back(load_graph(candidate));
          gold.push_back(load_graph(f));
        }
      } else {
        pred.push_back(load_graph(eval_pred));
        gold.push_back(load_graph(eval_gold));
      }
      write_or_print(eval_out, pipeline::evaluate_pages(pred, gold, thresholds));
      return 0;
    }
    if (*query) {
      const query::Document doc = query::Document::from_hocr(xml::parse(read_text_file(query_doc)));
      std::optional<query::Query> q;
      try {
        q = query::parse(query_expr);
      } catch (const query::QueryError& e) {
        throw Usage(e.what());
      }
      std::cout << dump(query::to_json(doc, query::evaluate(doc, *q, direct)));
      return 0;
    }
    if (*stats) {
      const dataio::Corpus c = dataio::load_corpus(stats_corpus, stats_splits, CategorySet::magazine(), jobs);
      write_or_print(stats_out, dataio::to_json(dataio::compute_stats(c)));
      return 0;
    }
    if (*pipe) {
      pipeline::PipelineConfig cfg;
      try {
        cfg = pipeline::pipeline_config_from_json(config_section(config_file, "pipeline"));
        if (!p_model.empty()) cfg.model = p_model;
        if (!p_input.empty()) cfg.input = p_input;
        if (!p_out.empty()) cfg.output = p_out;
        if (!p_gold.empty()) cfg.gold = fs::path(p_gold);
        if (!p_words.empty()) cfg.words = fs::path(p_words);
        if (p_tau) cfg.tau = *p_tau;
        if (!p_iou.empty()) cfg.iou_thresholds = thresholds_flag(p_iou);
        if (p_seed) cfg.seed = *p_seed;
        if (p_strict) cfg.strict_grammar = true;
        if (app.count("--jobs")) cfg.jobs = jobs;
        cfg.check();
      } catch (const Usage&) {
        throw;
      } catch (const Error& e) {
        throw Usage(e.what());
      }
      return pipeline::run_pipeline(cfg).exit_code();
    }
  } catch (const Usage& e) {
    pipeline::log::error("invalid_invocation", {{"message", e.what()}});
    return 2;
  } catch (const std::exception& e) {
    pipeline::log::error("failed", {{"message", e.what()}});
    return 1;
  }
  return 0;
}
