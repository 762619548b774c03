#include "docstruct/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <tuple>
#include <unordered_map>

#include "docstruct/assignment.hpp"

namespace docstruct::metrics {

double iou(const BBox& a, const BBox& b) {
  const double inter = BBox::intersection_area(a, b);
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

namespace {

void check_threshold(double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) throw Error("IoU threshold must lie in (0, 1]");
}

MatchResult finish(std::span<const Entity> predicted, std::span<const Entity> ground_truth,
                   std::vector<MatchPair> pairs) {
  MatchResult out;
  std::set<EntityId> used_p, used_g;
  for (const MatchPair& m : pairs) {
    used_p.insert(m.predicted);
    used_g.insert(m.ground_truth);
  }
  std::sort(pairs.begin(), pairs.end(),
            [](const MatchPair& a, const MatchPair& b) { return a.ground_truth < b.ground_truth; });
  out.pairs = std::move(pairs);
  for (const Entity& e : predicted) {
    if (!used_p.contains(e.id)) out.unmatched_predictions.push_back(e.id);
  }
  for (const Entity& e : ground_truth) {
    if (!used_g.contains(e.id)) out.unmatched_ground_truth.push_back(e.id);
  }
  std::sort(out.unmatched_predictions.begin(), out.unmatched_predictions.end());
  std::sort(out.unmatched_ground_truth.begin(), out.unmatched_ground_truth.end());
  return out;
}

}  // namespace

MatchResult match_entities(std::span<const Entity> predicted, std::span<const Entity> ground_truth,
                           double threshold, MatchStrategy strategy) {
  check_threshold(threshold);
  const std::size_t np = predicted.size(), ng = ground_truth.size();
  Eigen::MatrixXd overlap = Eigen::MatrixXd::Zero(ng, np);
  for (std::size_t g = 0; g < ng; ++g) {
    for (std::size_t p = 0; p < np; ++p) {
      if (predicted[p].category != ground_truth[g].category) continue;
      const double v = iou(predicted[p].bbox, ground_truth[g].bbox);
      if (v > threshold) overlap(g, p) = v;
    }
  }

  std::vector<MatchPair> pairs;
  if (strategy == MatchStrategy::greedy) {
    std::vector<std::tuple<double, std::size_t, std::size_t>> cand;
    for (std::size_t g = 0; g < ng; ++g) {
      for (std::size_t p = 0; p < np; ++p) {
        if (overlap(g, p) > 0) cand.emplace_back(overlap(g, p), g, p);
      }
    }
    std::sort(cand.begin(), cand.end(), [&](const auto& a, const auto& b) {
      if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) > std::get<0>(b);
      return std::tie(ground_truth[std::get<1>(a)].id, predicted[std::get<2>(a)].id) <
             std::tie(ground_truth[std::get<1>(b)].id, predicted[std::get<2>(b)].id);
    });
    std::vector<char> gt_used(ng, 0), pred_used(np, 0);
    for (const auto& [v, g, p] : cand) {
      if (gt_used[g] || pred_used[p]) continue;
      gt_used[g] = pred_used[p] = 1;
      pairs.push_back({predicted[p].id, ground_truth[g].id, v});
    }
  } else {
    // Any match outweighs any IoU sum: count first, then total overlap.
    const double bonus = static_cast<double>(std::min(ng, np)) + 1.0;
    Eigen::MatrixXd weights = (overlap.array() > 0).select(overlap.array() + bonus, 0.0);
    const auto assigned = max_weight_assignment(weights);
    for (std::size_t g = 0; g < ng; ++g) {
      if (assigned[g]) pairs.push_back({predicted[*assigned[g]].id, ground_truth[g].id, overlap(g, *assigned[g])});
    }
  }
  return finish(predicted, ground_truth, std::move(pairs));
}

namespace {

struct Detection {
  double score;
  bool true_positive;
};

// Confidence-ordered matching of one page for one category.
void collect_detections(std::span<const Entity> predicted, std::span<const Entity> ground_truth,
                        const Category& category, double threshold, std::vector<Detection>& out,
                        std::size_t& positives) {
  std::vector<const Entity*> preds, gts;
  for (const Entity& e : predicted) {
    if (e.category == category) preds.push_back(&e);
  }
  for (const Entity& e : ground_truth) {
    if (e.category == category) gts.push_back(&e);
  }
  positives += gts.size();
  std::stable_sort(preds.begin(), preds.end(),
                   [](const Entity* a, const Entity* b) { return a->confidence > b->confidence; });
  std::vector<char> taken(gts.size(), 0);
  for (const Entity* p : preds) {
    double best = threshold;
    std::optional<std::size_t> best_g;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (taken[g]) continue;
      const double v = iou(p->bbox, gts[g]->bbox);
      if (v > best) {
        best = v;
        best_g = g;
      }
    }
    if (best_g) taken[*best_g] = 1;
    out.push_back({p->confidence, best_g.has_value()});
  }
}

std::optional<double> interpolated_ap(std::vector<Detection> dets, std::size_t positives) {
  if (positives == 0) return std::nullopt;
  std::stable_sort(dets.begin(), dets.end(),
                   [](const Detection& a, const Detection& b) { return a.score > b.score; });
  const std::size_t n = dets.size();
  std::vector<double> recall(n), precision(n);
  double tp = 0, fp = 0;
  for (std::size_t i = 0; i < n; ++i) {
    (dets[i].true_positive ? tp : fp) += 1;
    recall[i] = tp / static_cast<double>(positives);
    precision[i] = tp / (tp + fp);
  }
  for (std::size_t i = n; i-- > 1;) precision[i - 1] = std::max(precision[i - 1], precision[i]);

  double sum = 0;
  for (int k = 0; k <= 100; ++k) {
    // Same sample points as numpy.linspace(0, 1, 101).
    const double r = k * 0.01;
    auto it = std::lower_bound(recall.begin(), recall.end(), r);
    if (it != recall.end()) sum += precision[it - recall.begin()];
  }
  return 100.0 * sum / 101.0;
}

}  // namespace

std::optional<double> average_precision(std::span<const PagePair> pages, const Category& category,
                                        double threshold) {
  check_threshold(threshold);
  std::vector<Detection> dets;
  std::size_t positives = 0;
  for (const PagePair& page : pages) {
    collect_detections(page.predicted->entities(), page.ground_truth->entities(), category,
                       threshold, dets, positives);
  }
  return interpolated_ap(std::move(dets), positives);
}

std::optional<double> average_precision(std::span<const Entity> predicted,
                                        std::span<const Entity> ground_truth,
                                        const Category& category, double threshold) {
  check_threshold(threshold);
  std::vector<Detection> dets;
  std::size_t positives = 0;
  collect_detections(predicted, ground_truth, category, threshold, dets, positives);
  return interpolated_ap(std::move(dets), positives);
}

double f1_score(double precision, double recall) {
  if (precision + recall <= 0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

RelationScore score(const RelationCounts& c) {
  RelationScore s;
  s.precision = c.predicted == 0 ? 1.0 : static_cast<double>(c.matched) / c.predicted;
  s.recall = c.ground_truth == 0 ? 1.0 : static_cast<double>(c.matched) / c.ground_truth;
  s.f1 = f1_score(s.precision, s.recall);
  return s;
}

RelationCounts count_relation_matches(const DocumentGraph& predicted,
                                      const DocumentGraph& ground_truth, double threshold) {
  const MatchResult match = match_entities(predicted.entities(), ground_truth.entities(), threshold);
  std::unordered_map<std::string, std::string> to_gt;
  for (const MatchPair& m : match.pairs) to_gt.emplace(m.predicted, m.ground_truth);

  std::set<std::tuple<std::string, std::string, RelationType>> gt_triples;
  RelationCounts counts;
  for (const Relation& r : ground_truth.relations()) {
    if (r.type == RelationType::null) continue;
    gt_triples.emplace(r.subject, r.object, r.type);
    ++counts.ground_truth;
  }
  std::set<std::tuple<std::string, std::string, RelationType>> hit;
  for (const Relation& r : predicted.relations()) {
    if (r.type == RelationType::null) continue;
    ++counts.predicted;
    auto s = to_gt.find(r.subject);
    auto o = to_gt.find(r.object);
    if (s == to_gt.end() || o == to_gt.end()) continue;
    auto key = std::make_tuple(s->second, o->second, r.type);
    if (gt_triples.contains(key) && hit.insert(key).second) ++counts.matched;
  }
  return counts;
}

RelationScore relation_f1(const DocumentGraph& predicted, const DocumentGraph& ground_truth,
                          double threshold) {
  return score(count_relation_matches(predicted, ground_truth, threshold));
}

EvalReport evaluate(std::span<const PagePair> pages, double threshold) {
  check_threshold(threshold);
  EvalReport report;
  report.iou_threshold = threshold;
  std::set<Category> present;
  for (const PagePair& page : pages) {
    for (const Entity& e : page.ground_truth->entities()) present.insert(e.category);
    report.relation_counts += count_relation_matches(*page.predicted, *page.ground_truth, threshold);
  }
  double sum = 0;
  for (const Category& c : present) {
    const double ap = *average_precision(pages, c, threshold);
    report.per_category_ap[c.name()] = ap;
    sum += ap;
  }
  report.map_score = present.empty() ? 0.0 : sum / static_cast<double>(present.size());
  report.relation = score(report.relation_counts);
  return report;
}

Json to_json(const EvalReport& r) {
  Json ap = Json::object();
  for (const auto& [k, v] : r.per_category_ap) ap[k] = v;
  return Json{{"iou_threshold", r.iou_threshold},
              {"per_category_ap", std::move(ap)},
              {"map", r.map_score},
              {"relation",
               {{"precision", r.relation.precision},
                {"recall", r.relation.recall},
                {"f1", r.relation.f1},
                {"matched", r.relation_counts.matched},
                {"predicted", r.relation_counts.predicted},
                {"ground_truth", r.relation_counts.ground_truth}}}};
}

}  // namespace docstruct::metrics
