#pragma once

// Slow, direct reference implementations used to check the library.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "docstruct/core.hpp"

namespace docstruct::oracle {

/// Unit-cell rasterization; boxes must have integer coordinates.
double raster_iou(const BBox& a, const BBox& b);

struct Assignment {
  std::size_t count = 0;
  double iou_sum = 0;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (pred index, gt index)
  bool ambiguous = false;  // another assignment reached the same (count, iou_sum)
};

/// Enumerates every one-to-one assignment of same-category pairs with IoU above the
/// threshold and keeps the one with most pairs, then largest IoU sum.
Assignment best_assignment(const std::vector<Entity>& pred, const std::vector<Entity>& gt, double threshold);

struct TripleCounts {
  std::size_t matched = 0, predicted = 0, ground_truth = 0;
  bool ambiguous = false;
};
TripleCounts triple_counts(const DocumentGraph& pred, const DocumentGraph& gt, double threshold);

/// 101-point interpolated AP (x100) over pages, nullopt without ground truth.
std::optional<double> average_precision(const std::vector<std::pair<const DocumentGraph*, const DocumentGraph*>>& pages,
                                        const Category& category, double threshold);

/// Tree check written independently of validate_tree.
bool is_valid_tree(const DocumentGraph& g, bool strict_unordered = false);

/// XPath 1.0 subset (location paths with child, descendant-or-self and parent
/// steps; predicates of @attr, text() or name() equalities joined by "or") over
/// the page element of an XML document. Returns the `id` attributes of the
/// selected elements in document order.
class XPath {
 public:
  explicit XPath(std::string_view xml_text);
  ~XPath();
  XPath(const XPath&) = delete;
  XPath& operator=(const XPath&) = delete;
  std::vector<std::string> select(std::string_view expr) const;

  struct Impl;

 private:
  Impl* impl_;
};

}  // namespace docstruct::oracle
