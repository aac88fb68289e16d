#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace p4rec::cf {

struct RatingTriple {
  int user = 0;
  int item = 0;
  double rating = 0.0;
};

// Sparse (user, item, rating) triples with dense contiguous ids.
struct RatingsDataset {
  std::vector<RatingTriple> triples;
  int num_users = 0;
  int num_items = 0;

  // Enforces: nonempty, ids in range, ratings in [0.5, 5.0], no duplicate
  // (user, item) pair. Throws std::invalid_argument on violation.
  void validate() const;
};

// Deterministic per seed. Holdout is stratified per user: every user keeps
// at least one training rating whenever they have one to keep.
struct RatingsSplit {
  RatingsDataset train;
  RatingsDataset holdout;
};
RatingsSplit split_ratings(const RatingsDataset& data, double fraction, uint64_t seed);

// MovieLens ratings CSV ("userId,movieId,rating,timestamp" header). Original
// ids are densified by sorted order, so the result does not depend on row
// order. id_map receives dense -> original id mappings when non-null.
struct IdMaps {
  std::vector<int64_t> user_ids;  // dense user -> original id
  std::vector<int64_t> item_ids;  // dense item -> original id
};
RatingsDataset ingest_movielens_csv(const std::string& path, IdMaps* id_map = nullptr);

void write_movielens_csv(const RatingsDataset& data, const std::string& path);

}  // namespace p4rec::cf
