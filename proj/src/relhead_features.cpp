#include <cmath>
#include <map>
#include <set>

#include "docstruct/relhead.hpp"

namespace docstruct::relhead {

FeatureVector geometric_features(const BBox& box, PageSize page) {
  if (!(page.width > 0) || !(page.height > 0)) throw Error("page dimensions must be positive");
  const double w = page.width, h = page.height;
  FeatureVector f(kGeometryDim);
  f << box.x0 / w, box.x1 / w, box.y0 / h, box.y1 / h, box.width() / w, box.height() / h,
      box.area() / (w * h), box.center_x() / w, box.center_y() / h;
  return f;
}

FrequencyBiasTable::FrequencyBiasTable(std::size_t categories)
    : n_(categories),
      table_(Eigen::MatrixXd::Constant(categories * categories, kRelationTypeCount,
                                       std::log(1.0 / kRelationTypeCount))) {}

Eigen::Vector3d FrequencyBiasTable::at(std::size_t subject, std::size_t object) const {
  return table_.row(subject * n_ + object).transpose();
}

void FrequencyBiasTable::set(std::size_t subject, std::size_t object, const Eigen::Vector3d& lp) {
  table_.row(subject * n_ + object) = lp.transpose();
}

FrequencyBiasTable build_bias_table(std::span<const DocumentGraph> training,
                                    const CategorySet& categories) {
  if (training.empty()) throw Error("cannot build a bias table from an empty corpus");
  const std::size_t n = categories.size();
  Eigen::MatrixXd counts = Eigen::MatrixXd::Ones(n * n, kRelationTypeCount);

  for (const DocumentGraph& g : training) {
    std::vector<std::size_t> cat_index;
    for (const Entity& e : g.entities()) {
      auto idx = categories.index_of(e.category);
      if (!idx) throw Error("category not in model set: " + e.category.name());
      cat_index.push_back(*idx);
    }
    std::map<std::pair<std::size_t, std::size_t>, std::set<RelationType>> types;
    for (const Relation& r : g.relations()) {
      if (r.type == RelationType::null) continue;
      types[{*g.index_of(r.subject), *g.index_of(r.object)}].insert(r.type);
    }
    const std::size_t m = g.entities().size();
    for (std::size_t s = 0; s < m; ++s) {
      for (std::size_t o = 0; o < m; ++o) {
        if (s == o) continue;
        const std::size_t row = cat_index[s] * n + cat_index[o];
        auto it = types.find({s, o});
        if (it == types.end()) {
          counts(row, static_cast<int>(RelationType::null)) += 1;
        } else {
          for (RelationType t : it->second) counts(row, static_cast<int>(t)) += 1;
        }
      }
    }
  }

  FrequencyBiasTable table(n);
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t o = 0; o < n; ++o) {
      const Eigen::Vector3d c = counts.row(s * n + o).transpose();
      table.set(s, o, (c / c.sum()).array().log().matrix());
    }
  }
  return table;
}

}  // namespace docstruct::relhead
