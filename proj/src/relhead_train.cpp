#include <algorithm>
#include <cmath>

#include "docstruct/metrics.hpp"
#include "docstruct/relhead.hpp"

namespace docstruct::relhead {

namespace {

// splitmix64; used instead of <random> distributions so runs are bit-reproducible
// across standard libraries.
std::uint64_t next_u64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double next_unit(std::uint64_t& state) { return (next_u64(state) >> 11) * 0x1.0p-53; }

std::size_t next_below(std::uint64_t& state, std::size_t n) { return next_u64(state) % n; }

template <typename T>
void shuffle(std::vector<T>& v, std::uint64_t& state) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[next_below(state, i)]);
}

void fill_uniform(Eigen::MatrixXd& m, double limit, std::uint64_t& state) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = (2.0 * next_unit(state) - 1.0) * limit;
  }
}

double glorot(Eigen::Index fan_in, Eigen::Index fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

}  // namespace

void TrainConfig::check() const {
  if (!(learning_rate > 0)) throw Error("learning_rate must be positive");
  if (max_iterations < 0) throw Error("max_iterations must be non-negative");
  if (batch_size <= 0) throw Error("batch_size must be positive");
  if (pair_sample_size <= 0) throw Error("pair_sample_size must be positive");
  if (early_stopping_patience <= 0) throw Error("early_stopping_patience must be positive");
  if (eval_interval <= 0) throw Error("eval_interval must be positive");
  if (fusion_dim <= 0) throw Error("fusion_dim must be positive");
  if (!(tau > 0 && tau < 1)) throw Error("tau must lie in (0, 1)");
}

TrainConfig train_config_from_json(const Json& j, TrainConfig c) {
  if (!j.is_object()) throw Error("training config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (key == "learning_rate") c.learning_rate = value.get<double>();
    else if (key == "max_iterations") c.max_iterations = value.get<std::int64_t>();
    else if (key == "batch_size") c.batch_size = value.get<std::int64_t>();
    else if (key == "pair_sample_size") c.pair_sample_size = value.get<std::int64_t>();
    else if (key == "seed") c.seed = value.get<std::uint64_t>();
    else if (key == "early_stopping_patience") c.early_stopping_patience = value.get<std::int64_t>();
    else if (key == "eval_interval") c.eval_interval = value.get<std::int64_t>();
    else if (key == "fusion_dim") c.fusion_dim = value.get<Eigen::Index>();
    else if (key == "tau") c.tau = value.get<double>();
    else throw Error("unknown training config key: " + key);
  }
  c.check();
  return c;
}

Json to_json(const TrainConfig& c) {
  return Json{{"learning_rate", c.learning_rate},
              {"max_iterations", c.max_iterations},
              {"batch_size", c.batch_size},
              {"pair_sample_size", c.pair_sample_size},
              {"seed", c.seed},
              {"early_stopping_patience", c.early_stopping_patience},
              {"eval_interval", c.eval_interval},
              {"fusion_dim", c.fusion_dim},
              {"tau", c.tau}};
}

RelationModel initial_model(std::span<const DocumentGraph> corpus, const CategorySet& categories,
                            const TrainConfig& cfg) {
  cfg.check();
  RelationModel m = RelationModel::zeros(categories, cfg.fusion_dim);
  m.tau = cfg.tau;
  m.bias_table = build_bias_table(corpus, categories);
  std::uint64_t state = cfg.seed;
  fill_uniform(m.category_embeddings, 0.1, state);
  fill_uniform(m.w_pair_1, glorot(m.w_pair_1.cols(), m.w_pair_1.rows()), state);
  fill_uniform(m.w_pair_2, glorot(m.w_pair_2.cols(), m.w_pair_2.rows()), state);
  fill_uniform(m.w_pair_rel, glorot(m.w_pair_rel.cols(), m.w_pair_rel.rows()), state);
  fill_uniform(m.refine_weights, glorot(m.refine_weights.cols(), m.refine_weights.rows()), state);
  return m;
}

std::vector<PairSample> sample_pairs(const DocumentGraph& gold, std::int64_t sample_size,
                                     std::uint64_t& rng_state) {
  std::vector<PairSample> positives, negatives;
  for (const PairSample& p : all_pairs(gold)) {
    (p.target == RelationType::null ? negatives : positives).push_back(p);
  }
  shuffle(positives, rng_state);
  shuffle(negatives, rng_state);
  const std::size_t budget = static_cast<std::size_t>(sample_size);
  std::size_t take_pos = std::min(positives.size(), budget / 2);
  std::size_t take_neg = std::min(negatives.size(), budget - take_pos);
  take_pos = std::min(positives.size(), budget - take_neg);

  std::vector<PairSample> out(positives.begin(), positives.begin() + take_pos);
  out.insert(out.end(), negatives.begin(), negatives.begin() + take_neg);
  return out;
}

double validation_f1(const RelationModel& m, std::span<const DocumentGraph> pages) {
  metrics::RelationCounts counts;
  for (const DocumentGraph& gold : pages) {
    counts += metrics::count_relation_matches(predict_relations(gold, m), gold, 0.5);
  }
  return metrics::score(counts).f1;
}

TrainResult train(std::span<const DocumentGraph> corpus, std::span<const DocumentGraph> validation,
                  const TrainConfig& cfg, const CategorySet& categories) {
  if (corpus.empty()) throw Error("training corpus is empty");
  cfg.check();
  TrainResult result{initial_model(corpus, categories, cfg), {}, 0.0, 0};
  RelationModel& model = result.model;
  RelationModel best = model;
  double best_f1 = -1;
  std::int64_t stale = 0;

  std::uint64_t state = cfg.seed ^ 0xD1B54A32D192ED03ULL;
  std::vector<std::size_t> order(corpus.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::size_t cursor = order.size();

  Gradients grads(model);
  for (std::int64_t it = 0; it < cfg.max_iterations; ++it) {
    grads.set_zero();
    double loss = 0;
    std::size_t terms = 0;
    for (std::int64_t b = 0; b < cfg.batch_size; ++b) {
      if (cursor == order.size()) {
        shuffle(order, state);
        cursor = 0;
      }
      const DocumentGraph& doc = corpus[order[cursor++]];
      const std::vector<PairSample> pairs = sample_pairs(doc, cfg.pair_sample_size, state);
      loss += loss_and_gradients(model, doc, pairs, &grads);
      terms += pairs.size() + doc.entities().size();
    }
    const double lr = cfg.learning_rate;
    model.category_embeddings -= lr * grads.category_embeddings;
    model.w_pair_1 -= lr * grads.w_pair_1;
    model.w_pair_2 -= lr * grads.w_pair_2;
    model.w_pair_rel -= lr * grads.w_pair_rel;
    model.refine_weights -= lr * grads.refine_weights;
    result.loss_history.push_back(terms == 0 ? 0.0 : loss / static_cast<double>(terms));
    result.iterations = it + 1;

    const bool last = it + 1 == cfg.max_iterations;
    if (!validation.empty() && ((it + 1) % cfg.eval_interval == 0 || last)) {
      const double f1 = validation_f1(model, validation);
      if (f1 > best_f1) {
        best_f1 = f1;
        best = model;
        stale = 0;
      } else if (++stale >= cfg.early_stopping_patience) {
        break;
      }
    }
  }
  if (!validation.empty()) {
    if (best_f1 < 0) best_f1 = validation_f1(model, validation);
    else model = std::move(best);
    result.best_validation_f1 = best_f1;
  }
  return result;
}

}  // namespace docstruct::relhead
