#include <bit>
#include <cstring>

#include <openssl/evp.h>

#include "docstruct/relhead.hpp"

namespace docstruct::relhead {

namespace {

std::string base64_encode(const std::vector<unsigned char>& bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                                static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::vector<unsigned char> base64_decode(const std::string& text, std::size_t expected) {
  if (text.size() % 4 != 0) throw Error("malformed base64 payload");
  std::vector<unsigned char> out(3 * text.size() / 4 + 1);
  const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()),
                                static_cast<int>(text.size()));
  if (n < 0) throw Error("malformed base64 payload");
  // DecodeBlock keeps the zero bytes produced by '=' padding.
  if (static_cast<std::size_t>(n) < expected || static_cast<std::size_t>(n) > expected + 2) {
    throw Error("base64 payload has the wrong length");
  }
  out.resize(expected);
  return out;
}

Json matrix_to_json(const Eigen::MatrixXd& m) {
  std::vector<unsigned char> bytes;
  bytes.reserve(static_cast<std::size_t>(m.size()) * 8);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const auto bits = std::bit_cast<std::uint64_t>(m(i, j));
      for (int k = 0; k < 8; ++k) bytes.push_back(static_cast<unsigned char>(bits >> (8 * k)));
    }
  }
  return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", base64_encode(bytes)}};
}

Eigen::MatrixXd matrix_from_json(const Json& j, const char* name) {
  try {
    const auto rows = j.at("rows").get<Eigen::Index>();
    const auto cols = j.at("cols").get<Eigen::Index>();
    if (rows < 0 || cols < 0) throw Error("negative shape");
    const auto bytes =
        base64_decode(j.at("data").get<std::string>(), static_cast<std::size_t>(rows * cols) * 8);
    Eigen::MatrixXd m(rows, cols);
    std::size_t p = 0;
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index k = 0; k < cols; ++k) {
        std::uint64_t bits = 0;
        for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(bytes[p++]) << (8 * b);
        m(i, k) = std::bit_cast<double>(bits);
      }
    }
    return m;
  } catch (const Json::exception& e) {
    throw Error(std::string("model field ") + name + ": " + e.what());
  } catch (const Error& e) {
    throw Error(std::string("model field ") + name + ": " + e.what());
  }
}

}  // namespace

Json to_json(const RelationModel& m) {
  Json cats = Json::array();
  for (const Category& c : m.categories.categories()) cats.push_back(c.name());
  return Json{{"dims",
               {{"categories", m.categories.size()},
                {"embedding", kEmbeddingDim},
                {"geometry", kGeometryDim},
                {"context", kContextDim},
                {"fusion", m.fusion_dim()}}},
              {"categories", std::move(cats)},
              {"category_embeddings", matrix_to_json(m.category_embeddings)},
              {"w_pair_1", matrix_to_json(m.w_pair_1)},
              {"w_pair_2", matrix_to_json(m.w_pair_2)},
              {"w_pair_rel", matrix_to_json(m.w_pair_rel)},
              {"refine_weights", matrix_to_json(m.refine_weights)},
              {"bias_table", matrix_to_json(m.bias_table.log_probs())},
              {"tau", m.tau}};
}

RelationModel model_from_json(const Json& j) {
  RelationModel m;
  try {
    std::vector<Category> cats;
    for (const Json& c : j.at("categories")) cats.emplace_back(c.get<std::string>());
    m.categories = CategorySet(std::move(cats));
    const Json& dims = j.at("dims");
    if (dims.at("embedding").get<Eigen::Index>() != kEmbeddingDim ||
        dims.at("geometry").get<Eigen::Index>() != kGeometryDim ||
        dims.at("context").get<Eigen::Index>() != kContextDim) {
      throw Error("model dimensions do not match this build");
    }
    m.tau = j.at("tau").get<double>();
  } catch (const Json::exception& e) {
    throw Error(std::string("malformed model: ") + e.what());
  }
  m.category_embeddings = matrix_from_json(j.at("category_embeddings"), "category_embeddings");
  m.w_pair_1 = matrix_from_json(j.at("w_pair_1"), "w_pair_1");
  m.w_pair_2 = matrix_from_json(j.at("w_pair_2"), "w_pair_2");
  m.w_pair_rel = matrix_from_json(j.at("w_pair_rel"), "w_pair_rel");
  m.refine_weights = matrix_from_json(j.at("refine_weights"), "refine_weights");
  const Eigen::MatrixXd bias = matrix_from_json(j.at("bias_table"), "bias_table");
  const std::size_t n = m.categories.size();
  if (static_cast<std::size_t>(bias.rows()) != n * n || bias.cols() != kRelationTypeCount) {
    throw Error("bias_table has the wrong shape");
  }
  m.bias_table = FrequencyBiasTable(n);
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t o = 0; o < n; ++o) m.bias_table.set(s, o, bias.row(s * n + o).transpose());
  }
  m.check();
  return m;
}

void save_model(const std::filesystem::path& p, const RelationModel& m) { write_json_file(p, to_json(m)); }

RelationModel load_model(const std::filesystem::path& p) { return model_from_json(read_json_file(p)); }

Json to_json(std::span<const PairScore> scores) {
  Json out = Json::array();
  for (const PairScore& s : scores) {
    Json probs = Json::object();
    for (std::size_t t = 0; t < kRelationTypeCount; ++t) {
      probs[std::string(to_string(static_cast<RelationType>(t)))] = s.probs[t];
    }
    out.push_back({{"subject", s.subject}, {"object", s.object}, {"probs", std::move(probs)}});
  }
  return out;
}

std::vector<PairScore> pair_scores_from_json(const Json& j) {
  if (!j.is_array()) throw SchemaError("", "pair scores must be a JSON array");
  std::vector<PairScore> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string path = "/" + std::to_string(i);
    try {
      PairScore s{j[i].at("subject").get<std::string>(), j[i].at("object").get<std::string>(), {}};
      for (std::size_t t = 0; t < kRelationTypeCount; ++t) {
        s.probs[t] = j[i].at("probs").at(std::string(to_string(static_cast<RelationType>(t)))).get<double>();
      }
      out.push_back(std::move(s));
    } catch (const Json::exception& e) {
      throw SchemaError(path, e.what());
    }
  }
  return out;
}

}  // namespace docstruct::relhead
