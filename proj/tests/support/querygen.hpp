#pragma once

// Random queries in the engine syntax paired with the equivalent XPath for the
// reference evaluator.

#include <string>
#include <utility>

#include "docstruct/core.hpp"
#include "synth.hpp"

namespace docstruct::testing {

struct QueryPair {
  std::string engine;
  std::string xpath;
};

QueryPair random_query(Rng& rng, const DocumentGraph& g, std::span<const Word> words);

}  // namespace docstruct::testing
