#pragma once

// Relation classification and entity refinement.
//
// Per entity j (pages sorted left to right by box center):
//   base_j = [geometry_j ; embedding(category_j)]
//   ctx_j  = [base_j ; mean of base_k over entities k before j]
//   refined category logits = W_ref [ctx_j ; 1]
// Per ordered pair (s, o):
//   p1 = [geometry(union box) ; 1],  p2 = [ctx_s ; ctx_o ; 1]
//   logits = W_rel [(W_1 p1) .* (W_2 p2) ; 1] + log_bias(refined c_s, refined c_o)
// and relation probabilities are softmax(logits) over {parent_of, followed_by, null}.

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "docstruct/core.hpp"
#include "docstruct/json_io.hpp"

namespace docstruct::relhead {

using FeatureVector = Eigen::VectorXd;

inline constexpr Eigen::Index kGeometryDim = 9;
inline constexpr Eigen::Index kEmbeddingDim = 200;
inline constexpr Eigen::Index kBaseDim = kGeometryDim + kEmbeddingDim;
inline constexpr Eigen::Index kContextDim = 2 * kBaseDim;
inline constexpr Eigen::Index kDefaultFusionDim = 256;

/// [x0/w, x1/w, y0/h, y1/h, width/w, height/h, area/(w*h), x-center/w, y-center/h].
/// Throws Error for a zero page dimension.
FeatureVector geometric_features(const BBox& box, PageSize page);

/// Log-probabilities over relation types for each ordered category pair.
class FrequencyBiasTable {
 public:
  FrequencyBiasTable() = default;
  explicit FrequencyBiasTable(std::size_t categories);

  std::size_t categories() const { return n_; }
  /// Row (subject * n + object), columns in RelationType order.
  const Eigen::MatrixXd& log_probs() const { return table_; }
  Eigen::Vector3d at(std::size_t subject, std::size_t object) const;
  void set(std::size_t subject, std::size_t object, const Eigen::Vector3d& log_probs);

  bool operator==(const FrequencyBiasTable& o) const { return n_ == o.n_ && table_ == o.table_; }

 private:
  std::size_t n_ = 0;
  Eigen::MatrixXd table_;
};

/// Add-one smoothed relation-type counts over every ordered pair of distinct
/// entities; pairs without a relation count as null. Throws Error on an empty set.
FrequencyBiasTable build_bias_table(std::span<const DocumentGraph> training,
                                    const CategorySet& categories);

struct RelationModel {
  CategorySet categories;
  Eigen::MatrixXd category_embeddings;  // categories x kEmbeddingDim
  Eigen::MatrixXd w_pair_1;             // fusion x (kGeometryDim + 1)
  Eigen::MatrixXd w_pair_2;             // fusion x (2 * kContextDim + 1)
  Eigen::MatrixXd w_pair_rel;           // 3 x (fusion + 1)
  Eigen::MatrixXd refine_weights;       // categories x (kContextDim + 1)
  FrequencyBiasTable bias_table;
  double tau = 0.5;

  Eigen::Index fusion_dim() const { return w_pair_1.rows(); }
  /// All-zero weights of the right shapes and a uniform bias table.
  static RelationModel zeros(const CategorySet& categories, Eigen::Index fusion = kDefaultFusionDim);
  /// Throws Error when shapes disagree, weights are not finite, or tau is outside (0,1).
  void check() const;

  bool operator==(const RelationModel& o) const;
};

/// Refined categories and confidences; ids and boxes are kept. Entities whose
/// category is not in the model's category set throw Error.
DocumentGraph refine_entities(const DocumentGraph& g, const RelationModel& m);

struct PairScore {
  EntityId subject;
  EntityId object;
  std::array<double, kRelationTypeCount> probs{};  // RelationType order
};

/// Scores every ordered pair of distinct entities, in entity list order.
std::vector<PairScore> score_pairs(const DocumentGraph& g, const RelationModel& m);

/// Refined entities plus one relation per pair whose most likely type is not null
/// and whose probability exceeds tau.
DocumentGraph predict_relations(const DocumentGraph& g, const RelationModel& m);
DocumentGraph predict_relations(const DocumentGraph& g, const RelationModel& m,
                                std::span<const PairScore> scores);

// Training ------------------------------------------------------------------

struct PairSample {
  std::size_t subject;  // entity index in the page
  std::size_t object;
  RelationType target;
};

struct Gradients {
  Eigen::MatrixXd category_embeddings, w_pair_1, w_pair_2, w_pair_rel, refine_weights;
  explicit Gradients(const RelationModel& m);
  void set_zero();
};

/// Joint loss: cross entropy of refined categories against the page's categories
/// (summed over entities) plus cross entropy of relation types on `pairs` (summed).
/// Adds d(loss)/d(weights) into `grads` when given.
double loss_and_gradients(const RelationModel& m, const DocumentGraph& gold,
                          std::span<const PairSample> pairs, Gradients* grads);

/// Gold relation type for each ordered pair, parent_of winning over followed_by
/// when both are annotated.
std::vector<PairSample> all_pairs(const DocumentGraph& gold);

struct TrainConfig {
  double learning_rate = 0.001;
  std::int64_t max_iterations = 5000;
  std::int64_t batch_size = 4;
  std::int64_t pair_sample_size = 128;
  std::uint64_t seed = 0;
  std::int64_t early_stopping_patience = 10;  // evaluations without improvement
  std::int64_t eval_interval = 100;           // iterations between validation runs
  Eigen::Index fusion_dim = kDefaultFusionDim;
  double tau = 0.5;

  /// Throws Error unless every field is positive (max_iterations may be 0).
  void check() const;
};

TrainConfig train_config_from_json(const Json& j, TrainConfig base = {});
Json to_json(const TrainConfig& c);

/// Random initialization: embeddings uniform in [-0.1, 0.1], weight matrices
/// Glorot-uniform, bias table from the corpus.
RelationModel initial_model(std::span<const DocumentGraph> corpus, const CategorySet& categories,
                            const TrainConfig& cfg);

/// Up to pair_sample_size pairs with positives (non-null gold) capped at half the
/// sample, topped up from whichever side still has pairs.
std::vector<PairSample> sample_pairs(const DocumentGraph& gold, std::int64_t sample_size,
                                     std::uint64_t& rng_state);

struct TrainResult {
  RelationModel model;
  std::vector<double> loss_history;  // mean loss per pair sample, per iteration
  double best_validation_f1 = 0;
  std::int64_t iterations = 0;
};

/// Mini-batch SGD on the joint loss; keeps the model with the best validation
/// relation F1 and stops after `early_stopping_patience` evaluations without gain.
/// Deterministic for a given seed. Throws Error on an empty corpus.
TrainResult train(std::span<const DocumentGraph> corpus, std::span<const DocumentGraph> validation,
                  const TrainConfig& cfg, const CategorySet& categories = CategorySet::magazine());

/// Relation F1 of predict_relations against gold pages (gold entities as input).
double validation_f1(const RelationModel& m, std::span<const DocumentGraph> pages);

// Serialization: matrices as base64 of little-endian float64, row-major.
Json to_json(const RelationModel& m);
RelationModel model_from_json(const Json& j);
void save_model(const std::filesystem::path& p, const RelationModel& m);
/// [{subject, object, probs: {parent_of, followed_by, null}}]
Json to_json(std::span<const PairScore> scores);
std::vector<PairScore> pair_scores_from_json(const Json& j);
RelationModel load_model(const std::filesystem::path& p);

}  // namespace docstruct::relhead
