#pragma once

// hOCR output with hierarchical extensions.
//
// Every entity becomes a <div> carrying its mapped hOCR class (if any) and dsg_*
// attributes: dsg_cat, dsg_id, dsg_conf, dsg_parent_conf, dsg_next, dsg_next_conf.
// Nesting mirrors parent_of, sibling order follows reading order, and each word
// becomes an ocrx_word span under the leaf it overlaps most.

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "docstruct/core.hpp"
#include "docstruct/xml.hpp"

namespace docstruct::hocr {

/// hOCR class of a magazine category; nullopt for meta and article. Throws Error
/// for names outside the magazine set.
std::optional<std::string> map_category(const Category& c);

/// Index of the leaf entity (in the graph's entity list) each word attaches to.
std::vector<std::size_t> attach_words(const DocumentTree& t, std::span<const Word> words);

/// Root element (<html>) of the hOCR document.
xml::Node to_hocr(const DocumentTree& t, std::span<const Word> words);
std::string to_hocr_string(const DocumentTree& t, std::span<const Word> words);

struct Page {
  DocumentTree tree;
  std::vector<Word> words;  // original input order when the spans carry word_<n> ids
};

/// Reads files produced by to_hocr exactly; for other hOCR files categories are
/// inferred from the class and ids are generated ("gen-1", ...).
Page from_hocr(const xml::Node& root, const CategorySet& categories = CategorySet::magazine());
/// Throws xml::ParseError on malformed XML, Error when no ocr_page is present.
Page from_hocr(std::string_view text, const CategorySet& categories = CategorySet::magazine());

/// The page element (class ocr_page or carrying dsg_cat) inside an hOCR document.
const xml::Node& page_element(const xml::Node& root);

/// Copy with every dsg_* attribute removed.
xml::Node strip_extensions(const xml::Node& root);

}  // namespace docstruct::hocr
