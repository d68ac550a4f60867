#pragma once

#include <filesystem>

#include "biascope/embedding_store.hpp"

namespace biascope {

struct NeutralizedSentence {
  std::string sentence_id;
  text::Tokens tokens;  // from variant a
  FloatMatrix vectors;
};

// Coordinate-wise mean of the two variants, computed in double and rounded
// once to float. Throws ValidationError on non-finite input.
NeutralizedSentence neutralize_pair(const AlignedPair& pair);

// Writes a store whose sentences are neutralize_pair of each aligned pair, in
// store_a order. The ids of both stores must coincide.
EmbeddingStore neutralize_store(const EmbeddingStore& a, const EmbeddingStore& b,
                                const std::filesystem::path& out, int threads = 1);

}  // namespace biascope
