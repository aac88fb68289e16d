#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "p4rec/num/tensor.hpp"

namespace p4rec::rewards {

std::vector<std::string> tokenize(const std::string& text);
std::vector<std::string> split_sentences(const std::string& text);

// Frozen semantic text encoder: per-token embeddings derived
// deterministically from the token identity, mean pooling, and a fixed
// linear head into R^{d_enc}. Outputs are unit-normalized (zero vector for
// empty text). Construction is a pure function of (seed, dims), so every
// run over the same corpus vocabulary sees the same encoder.
class SemanticEncoder {
 public:
  SemanticEncoder(int d_enc, uint64_t seed, int d_token = 64);

  num::Tensor encode(const std::string& text) const;
  num::Tensor encode_tokens(const std::vector<std::string>& tokens) const;
  int d_enc() const { return d_enc_; }
  uint64_t seed() const { return seed_; }

 private:
  num::Tensor token_embedding(const std::string& token) const;

  int d_enc_;
  int d_token_;
  uint64_t seed_;
  num::Tensor head_;  // [d_token, d_enc]
};

// Preference-relevance labeling: ranks the J preference texts by cosine
// similarity of their encodings with the encoded item description (ties
// broken by lower index), keeps the top k, and returns the mean cosine
// similarity between the encoded response and those k preference texts.
double relevance_label(const SemanticEncoder& enc, const std::string& response,
                       const std::string& item_text, const std::vector<std::string>& prefs,
                       int k);

}  // namespace p4rec::rewards
