#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

#include "docstruct/relhead.hpp"
#include "relhead_detail.hpp"

namespace docstruct::relhead {

RelationModel RelationModel::zeros(const CategorySet& categories, Eigen::Index fusion) {
  const Eigen::Index c = static_cast<Eigen::Index>(categories.size());
  RelationModel m;
  m.categories = categories;
  m.category_embeddings = Eigen::MatrixXd::Zero(c, kEmbeddingDim);
  m.w_pair_1 = Eigen::MatrixXd::Zero(fusion, kGeometryDim + 1);
  m.w_pair_2 = Eigen::MatrixXd::Zero(fusion, 2 * kContextDim + 1);
  m.w_pair_rel = Eigen::MatrixXd::Zero(kRelationTypeCount, fusion + 1);
  m.refine_weights = Eigen::MatrixXd::Zero(c, kContextDim + 1);
  m.bias_table = FrequencyBiasTable(categories.size());
  return m;
}

void RelationModel::check() const {
  const Eigen::Index c = static_cast<Eigen::Index>(categories.size());
  const Eigen::Index f = w_pair_1.rows();
  auto shape = [](const Eigen::MatrixXd& mat, Eigen::Index r, Eigen::Index k, const char* name) {
    if (mat.rows() != r || mat.cols() != k) throw Error(std::string("bad shape for ") + name);
    if (!mat.allFinite()) throw Error(std::string("non-finite weights in ") + name);
  };
  if (c == 0) throw Error("model has no categories");
  if (f == 0) throw Error("fusion dimension must be positive");
  shape(category_embeddings, c, kEmbeddingDim, "category_embeddings");
  shape(w_pair_1, f, kGeometryDim + 1, "w_pair_1");
  shape(w_pair_2, f, 2 * kContextDim + 1, "w_pair_2");
  shape(w_pair_rel, kRelationTypeCount, f + 1, "w_pair_rel");
  shape(refine_weights, c, kContextDim + 1, "refine_weights");
  if (bias_table.categories() != categories.size()) throw Error("bias table size mismatch");
  if (!bias_table.log_probs().allFinite()) throw Error("non-finite bias table");
  if (!(tau > 0 && tau < 1)) throw Error("tau must lie in (0, 1)");
}

bool RelationModel::operator==(const RelationModel& o) const {
  return categories == o.categories && category_embeddings == o.category_embeddings &&
         w_pair_1 == o.w_pair_1 && w_pair_2 == o.w_pair_2 && w_pair_rel == o.w_pair_rel &&
         refine_weights == o.refine_weights && bias_table == o.bias_table && tau == o.tau;
}

namespace detail {

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  const Eigen::VectorXd shifted = (logits.array() - logits.maxCoeff()).exp().matrix();
  return shifted / shifted.sum();
}

PageForward forward_entities(const DocumentGraph& g, const RelationModel& m) {
  PageForward f;
  const std::size_t n = g.entities().size();
  f.input_category.resize(n);
  f.base.resize(kBaseDim, n);
  for (std::size_t j = 0; j < n; ++j) {
    const Entity& e = g.entities()[j];
    auto idx = m.categories.index_of(e.category);
    if (!idx) throw Error("category not in model set: " + e.category.name());
    f.input_category[j] = *idx;
    f.base.col(j).head(kGeometryDim) = geometric_features(e.bbox, g.page_size());
    f.base.col(j).tail(kEmbeddingDim) = m.category_embeddings.row(*idx).transpose();
  }

  f.order.resize(n);
  std::iota(f.order.begin(), f.order.end(), std::size_t{0});
  std::sort(f.order.begin(), f.order.end(), [&](std::size_t a, std::size_t b) {
    const Entity& ea = g.entities()[a];
    const Entity& eb = g.entities()[b];
    const double xa = ea.bbox.center_x(), ya = ea.bbox.center_y();
    const double xb = eb.bbox.center_x(), yb = eb.bbox.center_y();
    return std::tie(xa, ya, ea.id) < std::tie(xb, yb, eb.id);
  });

  f.context.resize(kContextDim, n);
  Eigen::VectorXd running = Eigen::VectorXd::Zero(kBaseDim);
  for (std::size_t q = 0; q < n; ++q) {
    const std::size_t j = f.order[q];
    f.context.col(j).head(kBaseDim) = f.base.col(j);
    if (q == 0) {
      f.context.col(j).tail(kBaseDim).setZero();
    } else {
      f.context.col(j).tail(kBaseDim) = running / static_cast<double>(q);
    }
    running += f.base.col(j);
  }

  f.refine_probs.resize(m.categories.size(), n);
  f.refined_category.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    const Eigen::VectorXd logits =
        m.refine_weights.leftCols(kContextDim) * f.context.col(j) + m.refine_weights.col(kContextDim);
    f.refine_probs.col(j) = softmax(logits);
    Eigen::Index best = 0;
    const double top = f.refine_probs.col(j).maxCoeff(&best);
    // Ties keep the incoming category.
    if (f.refine_probs(f.input_category[j], j) == top) best = f.input_category[j];
    f.refined_category[j] = static_cast<std::size_t>(best);
  }

  f.project_subject = m.w_pair_2.leftCols(kContextDim) * f.context;
  f.project_object = m.w_pair_2.middleCols(kContextDim, kContextDim) * f.context;
  return f;
}

PairTerms pair_terms(const DocumentGraph& g, const RelationModel& m, const PageForward& f,
                     std::size_t s, std::size_t o, std::size_t subject_category,
                     std::size_t object_category) {
  PairTerms t;
  const Eigen::Index fusion = m.fusion_dim();
  const BBox unioned = BBox::enclosing(g.entities()[s].bbox, g.entities()[o].bbox);
  t.rho1.resize(kGeometryDim + 1);
  t.rho1.head(kGeometryDim) = geometric_features(unioned, g.page_size());
  t.rho1(kGeometryDim) = 1.0;
  t.a = m.w_pair_1 * t.rho1;
  t.b = f.project_subject.col(s) + f.project_object.col(o) + m.w_pair_2.col(2 * kContextDim);
  t.h = t.a.cwiseProduct(t.b);
  const Eigen::VectorXd logits = m.w_pair_rel.leftCols(fusion) * t.h + m.w_pair_rel.col(fusion) +
                                 m.bias_table.at(subject_category, object_category);
  t.probs = softmax(logits);
  return t;
}

}  // namespace detail

DocumentGraph refine_entities(const DocumentGraph& g, const RelationModel& m) {
  const detail::PageForward f = detail::forward_entities(g, m);
  std::vector<Entity> entities(g.entities().begin(), g.entities().end());
  for (std::size_t j = 0; j < entities.size(); ++j) {
    entities[j].category = m.categories[f.refined_category[j]];
    entities[j].confidence = f.refine_probs(f.refined_category[j], j);
  }
  return DocumentGraph(g.page_size(), std::move(entities),
                       std::vector<Relation>(g.relations().begin(), g.relations().end()));
}

std::vector<PairScore> score_pairs(const DocumentGraph& g, const RelationModel& m) {
  const detail::PageForward f = detail::forward_entities(g, m);
  const std::size_t n = g.entities().size();
  std::vector<PairScore> out;
  out.reserve(n * (n > 0 ? n - 1 : 0));
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t o = 0; o < n; ++o) {
      if (s == o) continue;
      const detail::PairTerms t =
          detail::pair_terms(g, m, f, s, o, f.refined_category[s], f.refined_category[o]);
      PairScore ps{g.entities()[s].id, g.entities()[o].id, {}};
      for (std::size_t k = 0; k < kRelationTypeCount; ++k) ps.probs[k] = t.probs(k);
      out.push_back(std::move(ps));
    }
  }
  return out;
}

DocumentGraph predict_relations(const DocumentGraph& g, const RelationModel& m) {
  return predict_relations(g, m, score_pairs(g, m));
}

DocumentGraph predict_relations(const DocumentGraph& g, const RelationModel& m,
                                std::span<const PairScore> scores) {
  const DocumentGraph refined = refine_entities(g, m);
  std::vector<Relation> relations;
  for (const PairScore& ps : scores) {
    const auto best = std::max_element(ps.probs.begin(), ps.probs.end()) - ps.probs.begin();
    const auto type = static_cast<RelationType>(best);
    if (type == RelationType::null || !(ps.probs[best] > m.tau)) continue;
    relations.push_back({ps.subject, ps.object, type, ps.probs[best]});
  }
  return DocumentGraph(refined.page_size(),
                       std::vector<Entity>(refined.entities().begin(), refined.entities().end()),
                       std::move(relations));
}

Gradients::Gradients(const RelationModel& m)
    : category_embeddings(Eigen::MatrixXd::Zero(m.category_embeddings.rows(), m.category_embeddings.cols())),
      w_pair_1(Eigen::MatrixXd::Zero(m.w_pair_1.rows(), m.w_pair_1.cols())),
      w_pair_2(Eigen::MatrixXd::Zero(m.w_pair_2.rows(), m.w_pair_2.cols())),
      w_pair_rel(Eigen::MatrixXd::Zero(m.w_pair_rel.rows(), m.w_pair_rel.cols())),
      refine_weights(Eigen::MatrixXd::Zero(m.refine_weights.rows(), m.refine_weights.cols())) {}

void Gradients::set_zero() {
  category_embeddings.setZero();
  w_pair_1.setZero();
  w_pair_2.setZero();
  w_pair_rel.setZero();
  refine_weights.setZero();
}

double loss_and_gradients(const RelationModel& m, const DocumentGraph& gold,
                          std::span<const PairSample> pairs, Gradients* grads) {
  const detail::PageForward f = detail::forward_entities(gold, m);
  const std::size_t n = gold.entities().size();
  const Eigen::Index fusion = m.fusion_dim();
  double loss = 0;

  Eigen::MatrixXd d_context = Eigen::MatrixXd::Zero(kContextDim, n);
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t target = f.input_category[j];
    loss -= std::log(f.refine_probs(target, j));
    if (!grads) continue;
    Eigen::VectorXd dl = f.refine_probs.col(j);
    dl(target) -= 1.0;
    grads->refine_weights.leftCols(kContextDim).noalias() += dl * f.context.col(j).transpose();
    grads->refine_weights.col(kContextDim) += dl;
    d_context.col(j).noalias() += m.refine_weights.leftCols(kContextDim).transpose() * dl;
  }

  Eigen::MatrixXd d_subject = Eigen::MatrixXd::Zero(fusion, n);
  Eigen::MatrixXd d_object = Eigen::MatrixXd::Zero(fusion, n);
  Eigen::VectorXd d_b_bias = Eigen::VectorXd::Zero(fusion);
  for (const PairSample& ps : pairs) {
    const detail::PairTerms t = detail::pair_terms(gold, m, f, ps.subject, ps.object,
                                                   f.input_category[ps.subject],
                                                   f.input_category[ps.object]);
    const auto target = static_cast<Eigen::Index>(ps.target);
    loss -= std::log(t.probs(target));
    if (!grads) continue;
    Eigen::VectorXd dl = t.probs;
    dl(target) -= 1.0;
    grads->w_pair_rel.leftCols(fusion).noalias() += dl * t.h.transpose();
    grads->w_pair_rel.col(fusion) += dl;
    const Eigen::VectorXd dh = m.w_pair_rel.leftCols(fusion).transpose() * dl;
    const Eigen::VectorXd da = dh.cwiseProduct(t.b);
    const Eigen::VectorXd db = dh.cwiseProduct(t.a);
    grads->w_pair_1.noalias() += da * t.rho1.transpose();
    d_subject.col(ps.subject) += db;
    d_object.col(ps.object) += db;
    d_b_bias += db;
  }
  if (!grads) return loss;

  grads->w_pair_2.leftCols(kContextDim).noalias() += d_subject * f.context.transpose();
  grads->w_pair_2.middleCols(kContextDim, kContextDim).noalias() += d_object * f.context.transpose();
  grads->w_pair_2.col(2 * kContextDim) += d_b_bias;
  d_context.noalias() += m.w_pair_2.leftCols(kContextDim).transpose() * d_subject;
  d_context.noalias() += m.w_pair_2.middleCols(kContextDim, kContextDim).transpose() * d_object;

  // Context -> base features: own part directly, left-mean part to every earlier entity.
  Eigen::MatrixXd d_base = d_context.topRows(kBaseDim);
  Eigen::VectorXd carried = Eigen::VectorXd::Zero(kBaseDim);
  for (std::size_t q = n; q-- > 0;) {
    const std::size_t j = f.order[q];
    d_base.col(j) += carried;
    if (q > 0) carried += d_context.col(j).tail(kBaseDim) / static_cast<double>(q);
  }
  for (std::size_t j = 0; j < n; ++j) {
    grads->category_embeddings.row(f.input_category[j]) += d_base.col(j).tail(kEmbeddingDim).transpose();
  }
  return loss;
}

std::vector<PairSample> all_pairs(const DocumentGraph& gold) {
  const std::size_t n = gold.entities().size();
  std::vector<RelationType> types(n * n, RelationType::null);
  for (const Relation& r : gold.relations()) {
    if (r.type == RelationType::null) continue;
    RelationType& slot = types[*gold.index_of(r.subject) * n + *gold.index_of(r.object)];
    if (slot != RelationType::parent_of) slot = r.type;
  }
  std::vector<PairSample> out;
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t o = 0; o < n; ++o) {
      if (s != o) out.push_back({s, o, types[s * n + o]});
    }
  }
  return out;
}

}  // namespace docstruct::relhead
