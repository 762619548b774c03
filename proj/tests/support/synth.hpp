#pragma once

// Synthetic pages, trees and graphs for tests.

#include <cstdint>
#include <random>
#include <vector>

#include "docstruct/core.hpp"

namespace docstruct::testing {

using Rng = std::mt19937_64;

inline constexpr PageSize kPage{1000, 1400};

/// Categories except document_root.
const std::vector<Category>& non_root_categories();

/// Valid tree rooted at a full-page document_root; children nest inside their
/// parents, reading-order chains link random sibling subsets (never inside
/// unordered groups). Integer coordinates when `integer_boxes`.
DocumentGraph random_tree_graph(Rng& rng, std::size_t max_entities, bool integer_boxes = true);

/// Words with integer boxes, mostly inside random leaves; some texts need escaping.
std::vector<Word> random_words(Rng& rng, const DocumentGraph& g, std::size_t n, bool plain_text = false);

/// Arbitrary graph: any categories (0..n roots), any relations, random confidences
/// with frequent ties.
DocumentGraph fuzz_graph(Rng& rng, std::size_t max_entities, std::size_t max_relations);

/// Layout with meta (page_nr, header), an article of two columns, and blocks that
/// belong to the column containing them. Columns are read left to right.
DocumentGraph layout_page(Rng& rng);
std::vector<DocumentGraph> layout_corpus(std::size_t n, std::uint64_t seed);

struct PageWithWords {
  DocumentGraph graph;
  std::vector<Word> words;
};

/// The magazine page used in the query examples: a table of contents and an
/// article with an ordered group of two columns.
PageWithWords magazine_page();

/// Words laid out left to right inside a box.
std::vector<Word> words_in(const BBox& box, const std::vector<std::string>& texts);

}  // namespace docstruct::testing
