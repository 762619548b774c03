#pragma once

// Strict evaluation protocol: IoU, unique entity matching, COCO-style AP/mAP and
// exact relation-triple precision/recall/F1.

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "docstruct/core.hpp"
#include "docstruct/json_io.hpp"

namespace docstruct::metrics {

/// area(a ∩ b) / area(a ∪ b); 0 when the union is empty.
double iou(const BBox& a, const BBox& b);

struct MatchPair {
  EntityId predicted;
  EntityId ground_truth;
  double iou = 0;
  bool operator==(const MatchPair&) const = default;
};

struct MatchResult {
  std::vector<MatchPair> pairs;                  // sorted by ground-truth id
  std::vector<EntityId> unmatched_predictions;   // false positives, sorted
  std::vector<EntityId> unmatched_ground_truth;  // false negatives, sorted
};

enum class MatchStrategy {
  // One-to-one assignment maximizing the number of matches, then total IoU.
  optimal,
  // Take same-category pairs in descending IoU order while both ends are free.
  greedy,
};

/// Pairs predictions with same-category ground truth whose IoU is strictly above
/// `threshold`. Throws Error unless threshold is in (0, 1].
MatchResult match_entities(std::span<const Entity> predicted, std::span<const Entity> ground_truth,
                           double threshold, MatchStrategy strategy = MatchStrategy::optimal);

struct PagePair {
  const DocumentGraph* predicted = nullptr;
  const DocumentGraph* ground_truth = nullptr;
};

/// 101-point interpolated AP (x100) for one category, pooled over pages.
/// Predictions are swept in descending confidence and each takes the best still
/// unmatched ground truth above the threshold. nullopt when the category has no
/// ground truth.
std::optional<double> average_precision(std::span<const PagePair> pages, const Category& category,
                                        double threshold);
std::optional<double> average_precision(std::span<const Entity> predicted,
                                        std::span<const Entity> ground_truth,
                                        const Category& category, double threshold);

struct RelationCounts {
  std::size_t matched = 0;
  std::size_t predicted = 0;
  std::size_t ground_truth = 0;

  RelationCounts& operator+=(const RelationCounts& o) {
    matched += o.matched;
    predicted += o.predicted;
    ground_truth += o.ground_truth;
    return *this;
  }
};

struct RelationScore {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
};

/// Harmonic mean, 0 when p + r == 0.
double f1_score(double precision, double recall);
/// Empty denominators count as perfect (nothing to find / nothing claimed).
RelationScore score(const RelationCounts& c);

RelationCounts count_relation_matches(const DocumentGraph& predicted,
                                      const DocumentGraph& ground_truth, double threshold);
RelationScore relation_f1(const DocumentGraph& predicted, const DocumentGraph& ground_truth,
                          double threshold);

struct EvalReport {
  double iou_threshold = 0.5;
  std::map<std::string, double> per_category_ap;
  double map_score = 0;
  RelationScore relation;
  RelationCounts relation_counts;
};

EvalReport evaluate(std::span<const PagePair> pages, double threshold);

Json to_json(const EvalReport& r);

}  // namespace docstruct::metrics
