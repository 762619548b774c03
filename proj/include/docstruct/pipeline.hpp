#pragma once

// Page-level pipeline: relation inference, grammar repair, hOCR output and
// evaluation, shared by the command-line subcommands.

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "docstruct/core.hpp"
#include "docstruct/grammar.hpp"
#include "docstruct/json_io.hpp"
#include "docstruct/metrics.hpp"
#include "docstruct/relhead.hpp"

namespace docstruct::pipeline {

// Line-oriented key=value logging on stderr.
namespace log {
void set_quiet(bool quiet);
using Field = std::pair<std::string_view, std::string>;
void info(std::string_view event, std::initializer_list<Field> fields = {});
void error(std::string_view event, std::initializer_list<Field> fields = {});
}  // namespace log

struct Inference {
  DocumentGraph predicted;
  std::vector<relhead::PairScore> scores;
};

Inference infer_page(const DocumentGraph& page, const relhead::RelationModel& model);
grammar::Result repair_page(const DocumentGraph& predicted, const std::vector<relhead::PairScore>* scores,
                            bool strict_grammar);

/// One report per threshold, pooled over all pages.
Json evaluate_pages(std::span<const DocumentGraph> predicted, std::span<const DocumentGraph> gold,
                    std::span<const double> thresholds);

/// Parses "0.5,0.75"; throws Error unless every value is in (0, 1].
std::vector<double> parse_thresholds(std::string_view text);

struct PipelineConfig {
  std::filesystem::path model;
  std::filesystem::path input;   // directory of page files
  std::filesystem::path output;  // created if missing
  std::optional<std::filesystem::path> words;  // defaults to the input directory
  std::optional<std::filesystem::path> gold;
  std::optional<double> tau;
  std::vector<double> iou_thresholds{0.5, 0.75};
  std::uint64_t seed = 0;
  bool strict_grammar = false;
  unsigned jobs = 1;

  /// Throws Error on missing paths or out-of-range values.
  void check() const;
};

/// Keys: model, input, output, words, gold, tau, iou (list), seed, strict_grammar, jobs.
PipelineConfig pipeline_config_from_json(const Json& j, PipelineConfig base = {});

struct FileError {
  std::string file;
  std::string message;
};

struct RunReport {
  std::vector<std::string> pages;  // processed page stems
  std::vector<FileError> errors;
  Json summary;
  int exit_code() const { return errors.empty() ? 0 : 1; }
};

/// Writes <stem>.pred.json, .tree.json, .trace.json and .hocr per page plus
/// summary.json. Pages that fail are reported and skipped.
RunReport run_pipeline(const PipelineConfig& cfg);

}  // namespace docstruct::pipeline
