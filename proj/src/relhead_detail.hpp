#pragma once

#include <vector>

#include "docstruct/relhead.hpp"

namespace docstruct::relhead::detail {

Eigen::VectorXd softmax(const Eigen::VectorXd& logits);

// Per-entity forward state shared by refinement, pair scoring and training.
struct PageForward {
  std::vector<std::size_t> order;  // entity indices left to right
  std::vector<std::size_t> input_category;
  Eigen::MatrixXd base;     // kBaseDim x n
  Eigen::MatrixXd context;  // kContextDim x n
  Eigen::MatrixXd refine_probs;
  std::vector<std::size_t> refined_category;
  // Subject and object halves of W_2 applied to every context.
  Eigen::MatrixXd project_subject;
  Eigen::MatrixXd project_object;
};

PageForward forward_entities(const DocumentGraph& g, const RelationModel& m);

struct PairTerms {
  Eigen::VectorXd rho1, a, b, h, probs;
};

PairTerms pair_terms(const DocumentGraph& g, const RelationModel& m, const PageForward& f,
                     std::size_t s, std::size_t o, std::size_t subject_category,
                     std::size_t object_category);

}  // namespace docstruct::relhead::detail
