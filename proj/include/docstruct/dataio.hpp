#pragma once

// Annotation corpora: a directory of page files plus a split file.
//
//   <dir>/<stem>.json        one page in the interchange format; an optional
//                            top-level "id" overrides the stem as document id
//   <dir>/<stem>.words.json  optional word list for that page
//   splits.json              {"train": [ids], "val": [ids], "test": [ids]}

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "docstruct/core.hpp"
#include "docstruct/json_io.hpp"

namespace docstruct::dataio {

enum class Split { train, val, test };
std::string_view to_string(Split s);

struct Document {
  std::string id;
  std::filesystem::path source;
  DocumentGraph graph;
  std::optional<std::vector<Word>> words;
  Split split = Split::train;
};

struct Corpus {
  std::vector<Document> documents;  // sorted by id
  CategorySet categories;

  std::vector<DocumentGraph> graphs(Split s) const;
};

/// Every problem found while loading, one "file: message" line each.
class CorpusError : public Error {
 public:
  explicit CorpusError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

/// Page files of a directory (words files excluded), sorted by name.
std::vector<std::filesystem::path> page_files(const std::filesystem::path& dir);

struct LoadedPage {
  std::string id;
  DocumentGraph graph;
  std::optional<std::vector<Word>> words;
};
/// Throws SchemaError (prefixed with the file name) or Error.
LoadedPage load_page(const std::filesystem::path& file, const CategorySet& categories);

std::map<std::string, Split> load_splits(const std::filesystem::path& file);

/// Throws CorpusError for schema failures, documents without a split, split ids
/// without a document and duplicate ids.
Corpus load_corpus(const std::filesystem::path& dir, const std::filesystem::path& split_file,
                   const CategorySet& categories = CategorySet::magazine(), unsigned jobs = 1);

struct CategoryStats {
  std::size_t frequency = 0;
  double percentage = 0;                // fraction of all entities
  std::optional<double> average_depth;  // root depth 1; valid trees only
};

struct CorpusStats {
  std::size_t documents = 0;
  std::size_t entities = 0;
  std::size_t invalid_documents = 0;  // excluded from depth statistics
  std::map<std::string, std::size_t> split_sizes;
  std::map<std::string, CategoryStats> categories;  // every category of the set
  std::map<std::size_t, std::size_t> leaf_histogram;  // leaves per page -> pages
};

CorpusStats compute_stats(const Corpus& c);
Json to_json(const CorpusStats& s);

}  // namespace docstruct::dataio
