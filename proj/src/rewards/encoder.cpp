#include "p4rec/rewards/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "p4rec/num/rng.hpp"

namespace p4rec::rewards {

using num::Tensor;

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == ' ' || c == '\t' || c == '\n') {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::vector<std::string> split_sentences(const std::string& text) {
  std::vector<std::string> out;
  std::vector<std::string> toks = tokenize(text);
  std::string cur;
  for (const std::string& t : toks) {
    if (!cur.empty()) cur += " ";
    cur += t;
    if (t == ".") {
      out.push_back(cur);
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

namespace {

uint64_t fnv1a(const std::string& s) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

SemanticEncoder::SemanticEncoder(int d_enc, uint64_t seed, int d_token)
    : d_enc_(d_enc), d_token_(d_token), seed_(seed) {
  if (d_enc < 1 || d_token < 1) throw std::invalid_argument("SemanticEncoder: bad dims");
  num::Rng rng(num::splitmix64(seed ^ 0x5ec0de55ULL));
  head_ = Tensor::zeros({d_token_, d_enc_});
  for (int i = 0; i < head_.size(); ++i) {
    head_.at(i) = rng.normal(0, 1.0 / std::sqrt(static_cast<double>(d_token_)));
  }
}

Tensor SemanticEncoder::token_embedding(const std::string& token) const {
  num::Rng rng(num::splitmix64(fnv1a(token)) ^ num::splitmix64(seed_));
  Tensor e = Tensor::zeros({d_token_});
  for (int i = 0; i < d_token_; ++i) e.at(i) = rng.normal(0, 1.0);
  return e;
}

Tensor SemanticEncoder::encode_tokens(const std::vector<std::string>& tokens) const {
  Tensor out = Tensor::zeros({d_enc_});
  if (tokens.empty()) return out;
  Tensor pooled = Tensor::zeros({d_token_});
  for (const std::string& t : tokens) {
    const Tensor e = token_embedding(t);
    for (int i = 0; i < d_token_; ++i) pooled.at(i) += e.at(i);
  }
  for (int i = 0; i < d_token_; ++i) pooled.at(i) /= static_cast<double>(tokens.size());
  for (int j = 0; j < d_enc_; ++j) {
    double s = 0;
    for (int i = 0; i < d_token_; ++i) s += pooled.at(i) * head_.at(i, j);
    out.at(j) = s;
  }
  double norm = 0;
  for (int j = 0; j < d_enc_; ++j) norm += out.at(j) * out.at(j);
  if (norm > 0) {
    norm = std::sqrt(norm);
    for (int j = 0; j < d_enc_; ++j) out.at(j) /= norm;
  }
  return out;
}

Tensor SemanticEncoder::encode(const std::string& text) const {
  return encode_tokens(tokenize(text));
}

double relevance_label(const SemanticEncoder& enc, const std::string& response,
                       const std::string& item_text, const std::vector<std::string>& prefs,
                       int k) {
  const int j_count = static_cast<int>(prefs.size());
  if (k < 1 || k > j_count) {
    throw std::invalid_argument("relevance_label: need 1 <= k <= J (k=" + std::to_string(k) +
                                ", J=" + std::to_string(j_count) + ")");
  }
  const Tensor item_enc = enc.encode(item_text);
  std::vector<double> item_sim(static_cast<size_t>(j_count));
  std::vector<Tensor> pref_enc(static_cast<size_t>(j_count));
  for (int j = 0; j < j_count; ++j) {
    pref_enc[static_cast<size_t>(j)] = enc.encode(prefs[static_cast<size_t>(j)]);
    item_sim[static_cast<size_t>(j)] =
        num::cosine_similarity(pref_enc[static_cast<size_t>(j)], item_enc);
  }
  std::vector<int> order(static_cast<size_t>(j_count));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return item_sim[static_cast<size_t>(a)] > item_sim[static_cast<size_t>(b)];
  });
  const Tensor y_enc = enc.encode(response);
  double s = 0;
  for (int r = 0; r < k; ++r) {
    s += num::cosine_similarity(y_enc, pref_enc[static_cast<size_t>(order[static_cast<size_t>(r)])]);
  }
  return s / static_cast<double>(k);
}

}  // namespace p4rec::rewards
