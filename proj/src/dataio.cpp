#include "docstruct/dataio.hpp"

#include <algorithm>
#include <future>
#include <set>
#include <unordered_map>

namespace docstruct::dataio {

namespace fs = std::filesystem;

std::string_view to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "train";
}

std::vector<DocumentGraph> Corpus::graphs(Split s) const {
  std::vector<DocumentGraph> out;
  for (const Document& d : documents) {
    if (d.split == s) out.push_back(d.graph);
  }
  return out;
}

namespace {

std::string join_lines(const std::vector<std::string>& v) {
  std::string out;
  for (const std::string& s : v) out += "\n  " + s;
  return out;
}

}  // namespace

CorpusError::CorpusError(std::vector<std::string> problems)
    : Error("corpus has " + std::to_string(problems.size()) + " problem(s):" + join_lines(problems)),
      problems_(std::move(problems)) {}

std::vector<fs::path> page_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error("not a directory: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const fs::path& p = entry.path();
    if (!entry.is_regular_file() || p.extension() != ".json") continue;
    const std::string name = p.filename().string();
    if (name.ends_with(".words.json")) continue;
    out.push_back(p);
  }
  std::sort(out.begin(), out.end());
  return out;
}

LoadedPage load_page(const fs::path& file, const CategorySet& categories) {
  const Json j = read_json_file(file);
  LoadedPage page{file.stem().string(), {}, std::nullopt};
  try {
    page.graph = graph_from_json(j, categories);
    if (j.contains("id")) {
      if (!j["id"].is_string()) throw SchemaError("/id", "expected a string");
      page.id = j["id"].get<std::string>();
    }
  } catch (const SchemaError& e) {
    throw SchemaError(file.filename().string() + ":" + e.path(), std::string(e.what()).substr(e.path().size() + 2));
  }
  fs::path words = file;
  words.replace_extension(".words.json");
  if (fs::exists(words)) {
    try {
      page.words = words_from_json(read_json_file(words));
    } catch (const SchemaError& e) {
      throw SchemaError(words.filename().string() + ":" + e.path(),
                        std::string(e.what()).substr(e.path().size() + 2));
    }
  }
  return page;
}

std::map<std::string, Split> load_splits(const fs::path& file) {
  const Json j = read_json_file(file);
  if (!j.is_object()) throw Error(file.filename().string() + ": split file must be an object");
  std::map<std::string, Split> out;
  for (Split s : {Split::train, Split::val, Split::test}) {
    const std::string key(to_string(s));
    if (!j.contains(key)) continue;
    if (!j[key].is_array()) throw Error(file.filename().string() + ": /" + key + " must be a list of ids");
    for (const Json& id : j[key]) {
      if (!id.is_string()) throw Error(file.filename().string() + ": /" + key + " holds a non-string id");
      if (!out.emplace(id.get<std::string>(), s).second) {
        throw Error(file.filename().string() + ": id '" + id.get<std::string>() + "' is assigned twice");
      }
    }
  }
  for (const auto& [key, value] : j.items()) {
    if (key != "train" && key != "val" && key != "test") {
      throw Error(file.filename().string() + ": unknown split '" + key + "'");
    }
  }
  return out;
}

Corpus load_corpus(const fs::path& dir, const fs::path& split_file, const CategorySet& categories,
                   unsigned jobs) {
  const std::vector<fs::path> files = page_files(dir);
  std::map<std::string, Split> splits = load_splits(split_file);

  std::vector<std::optional<LoadedPage>> pages(files.size());
  std::vector<std::string> errors(files.size());
  auto work = [&](std::size_t begin, std::size_t step) {
    for (std::size_t i = begin; i < files.size(); i += step) {
      try {
        pages[i] = load_page(files[i], categories);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  jobs = std::max(1u, jobs);
  std::vector<std::future<void>> tasks;
  for (unsigned t = 1; t < jobs; ++t) tasks.push_back(std::async(std::launch::async, work, t, jobs));
  work(0, jobs);
  for (auto& t : tasks) t.get();

  std::vector<std::string> problems;
  Corpus c;
  c.categories = categories;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < files.size(); ++i) {
    if (!pages[i]) {
      problems.push_back(errors[i]);
      continue;
    }
    LoadedPage& p = *pages[i];
    const std::string where = files[i].filename().string();
    if (!seen.insert(p.id).second) {
      problems.push_back(where + ": duplicate document id '" + p.id + "'");
      continue;
    }
    auto s = splits.find(p.id);
    if (s == splits.end()) {
      problems.push_back(where + ": document '" + p.id + "' has no split assignment");
      continue;
    }
    c.documents.push_back({p.id, files[i], std::move(p.graph), std::move(p.words), s->second});
  }
  for (const auto& [id, s] : splits) {
    if (!seen.contains(id)) problems.push_back(split_file.filename().string() + ": no document with id '" + id + "'");
  }
  if (!problems.empty()) throw CorpusError(std::move(problems));
  std::sort(c.documents.begin(), c.documents.end(),
            [](const Document& a, const Document& b) { return a.id < b.id; });
  return c;
}

CorpusStats compute_stats(const Corpus& c) {
  CorpusStats s;
  s.documents = c.documents.size();
  for (Split sp : {Split::train, Split::val, Split::test}) s.split_sizes[std::string(to_string(sp))] = 0;
  std::map<std::string, double> depth_sum;
  std::map<std::string, std::size_t> depth_count;
  for (const Category& cat : c.categories.categories()) s.categories[cat.name()];

  for (const Document& d : c.documents) {
    ++s.split_sizes[std::string(to_string(d.split))];
    const DocumentGraph& g = d.graph;
    s.entities += g.entities().size();
    std::set<EntityId> has_child;
    std::unordered_map<EntityId, EntityId> parent;
    for (const Relation& r : g.relations()) {
      if (r.type == RelationType::parent_of) {
        has_child.insert(r.subject);
        parent.emplace(r.object, r.subject);
      }
    }
    for (const Entity& e : g.entities()) ++s.categories[e.category.name()].frequency;
    std::size_t leaves = 0;
    for (const Entity& e : g.entities()) leaves += has_child.contains(e.id) ? 0 : 1;
    ++s.leaf_histogram[leaves];

    if (!validate_tree(g).empty()) {
      ++s.invalid_documents;
      continue;
    }
    for (const Entity& e : g.entities()) {
      std::size_t depth = 1;
      for (auto it = parent.find(e.id); it != parent.end(); it = parent.find(it->second)) ++depth;
      depth_sum[e.category.name()] += static_cast<double>(depth);
      ++depth_count[e.category.name()];
    }
  }
  for (auto& [name, cs] : s.categories) {
    cs.percentage = s.entities == 0 ? 0.0 : static_cast<double>(cs.frequency) / static_cast<double>(s.entities);
    if (auto it = depth_count.find(name); it != depth_count.end()) {
      cs.average_depth = depth_sum[name] / static_cast<double>(it->second);
    }
  }
  return s;
}

Json to_json(const CorpusStats& s) {
  Json cats = Json::object();
  for (const auto& [name, cs] : s.categories) {
    cats[name] = {{"frequency", cs.frequency},
                  {"percentage", cs.percentage},
                  {"average_depth", cs.average_depth ? Json(*cs.average_depth) : Json(nullptr)}};
  }
  Json hist = Json::object();
  for (const auto& [leaves, n] : s.leaf_histogram) hist[std::to_string(leaves)] = n;
  return Json{{"documents", s.documents},
              {"entities", s.entities},
              {"invalid_documents", s.invalid_documents},
              {"splits", s.split_sizes},
              {"categories", std::move(cats)},
              {"leaf_histogram", std::move(hist)}};
}

}  // namespace docstruct::dataio
