#pragma once

// Page interchange format (JSON) and small file helpers.
//
//   {"page_size": {"width": W, "height": H},
//    "entities":  [{"id", "category", "bbox": [x0,y0,x1,y1], "confidence"}],
//    "relations": [{"subject", "object", "type", "confidence"}]}
//
// Emitted keys are sorted, so serialization is byte-stable.

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "docstruct/core.hpp"

namespace docstruct {

using Json = nlohmann::json;

/// Schema violation; `path()` is a JSON pointer into the offending document.
class SchemaError : public Error {
 public:
  SchemaError(std::string path, const std::string& message)
      : Error(path + ": " + message), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

Json to_json(const BBox& b);
Json to_json(const Entity& e);
Json to_json(const Relation& r);
Json to_json(const DocumentGraph& g);
Json to_json(const std::vector<Word>& words);

BBox bbox_from_json(const Json& j, const std::string& path = "");
/// Throws SchemaError naming the offending path.
DocumentGraph graph_from_json(const Json& j, const CategorySet& categories = CategorySet::magazine());
std::vector<Word> words_from_json(const Json& j);

/// Canonical text form: two-space indent, sorted keys, trailing newline.
std::string dump(const Json& j);

std::string read_text_file(const std::filesystem::path& p);
void write_text_file(const std::filesystem::path& p, const std::string& content);
Json read_json_file(const std::filesystem::path& p);
void write_json_file(const std::filesystem::path& p, const Json& j);

DocumentGraph load_graph(const std::filesystem::path& p,
                         const CategorySet& categories = CategorySet::magazine());
void save_graph(const std::filesystem::path& p, const DocumentGraph& g);

}  // namespace docstruct
