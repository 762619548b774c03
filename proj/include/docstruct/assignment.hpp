#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Core>

namespace docstruct {

/// Maximum-weight assignment on a rectangular weight matrix (Hungarian method with
/// potentials). Entry i of the result is the column given to row i, or nullopt.
/// Weights must be >= 0; zero-weight cells are never reported as assigned.
std::vector<std::optional<std::size_t>> max_weight_assignment(const Eigen::MatrixXd& weights);

}  // namespace docstruct
