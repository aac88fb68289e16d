#include "p4rec/cf/ratings.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "p4rec/num/rng.hpp"

namespace p4rec::cf {

void RatingsDataset::validate() const {
  if (triples.empty()) throw std::invalid_argument("RatingsDataset: empty");
  std::set<std::pair<int, int>> seen;
  for (const RatingTriple& t : triples) {
    if (t.user < 0 || t.user >= num_users || t.item < 0 || t.item >= num_items) {
      throw std::invalid_argument("RatingsDataset: id out of range (user " +
                                  std::to_string(t.user) + ", item " + std::to_string(t.item) +
                                  ")");
    }
    if (!(t.rating >= 0.5 && t.rating <= 5.0)) {
      throw std::invalid_argument("RatingsDataset: rating outside [0.5, 5.0]");
    }
    if (!seen.insert({t.user, t.item}).second) {
      throw std::invalid_argument("RatingsDataset: duplicate pair (user " +
                                  std::to_string(t.user) + ", item " + std::to_string(t.item) +
                                  ")");
    }
  }
}

RatingsSplit split_ratings(const RatingsDataset& data, double fraction, uint64_t seed) {
  if (data.triples.empty()) throw std::invalid_argument("split_ratings: empty dataset");
  if (!(fraction >= 0.0 && fraction <= 0.5)) {
    throw std::invalid_argument("split_ratings: fraction must lie in [0, 0.5]");
  }
  RatingsSplit out;
  out.train.num_users = out.holdout.num_users = data.num_users;
  out.train.num_items = out.holdout.num_items = data.num_items;

  const size_t target =
      static_cast<size_t>(std::llround(fraction * static_cast<double>(data.triples.size())));
  if (target == 0) {
    out.train.triples = data.triples;
    return out;
  }

  // Per user, reserve one random kept triple; the rest are holdout
  // candidates.
  std::vector<std::vector<size_t>> by_user(static_cast<size_t>(data.num_users));
  for (size_t i = 0; i < data.triples.size(); ++i) {
    by_user[static_cast<size_t>(data.triples[i].user)].push_back(i);
  }
  num::Rng rng(seed);
  std::vector<size_t> candidates;
  std::vector<char> held(data.triples.size(), 0);
  for (auto& idxs : by_user) {
    if (idxs.size() < 2) continue;
    const size_t keep = static_cast<size_t>(rng.randint(static_cast<int64_t>(idxs.size())));
    for (size_t k = 0; k < idxs.size(); ++k) {
      if (k != keep) candidates.push_back(idxs[k]);
    }
  }
  rng.shuffle(candidates);
  const size_t take = std::min(target, candidates.size());
  for (size_t k = 0; k < take; ++k) held[candidates[k]] = 1;

  for (size_t i = 0; i < data.triples.size(); ++i) {
    (held[i] ? out.holdout : out.train).triples.push_back(data.triples[i]);
  }
  return out;
}

RatingsDataset ingest_movielens_csv(const std::string& path, IdMaps* id_map) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("ingest_movielens_csv: cannot open " + path);
  std::string line;
  if (!std::getline(is, line)) {
    throw std::runtime_error("ingest_movielens_csv: empty file " + path);
  }
  // Tolerate a UTF-8 BOM in front of the header.
  if (line.rfind("\xEF\xBB\xBF", 0) == 0) line = line.substr(3);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line.rfind("userId,movieId,rating", 0) != 0) {
    throw std::runtime_error("ingest_movielens_csv: unexpected header '" + line + "'");
  }

  struct RawTriple {
    int64_t user;
    int64_t item;
    double rating;
  };
  std::vector<RawTriple> raw;
  std::map<std::pair<int64_t, int64_t>, size_t> seen;
  size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    RawTriple t{};
    try {
      if (!std::getline(ss, field, ',')) throw std::invalid_argument("missing userId");
      t.user = std::stoll(field);
      if (!std::getline(ss, field, ',')) throw std::invalid_argument("missing movieId");
      t.item = std::stoll(field);
      if (!std::getline(ss, field, ',')) throw std::invalid_argument("missing rating");
      t.rating = std::stod(field);
    } catch (const std::exception& e) {
      throw std::runtime_error("ingest_movielens_csv: malformed row at line " +
                               std::to_string(line_no) + ": " + e.what());
    }
    if (!seen.emplace(std::make_pair(t.user, t.item), line_no).second) {
      throw std::runtime_error("ingest_movielens_csv: duplicate (user " + std::to_string(t.user) +
                               ", item " + std::to_string(t.item) + ") at line " +
                               std::to_string(line_no));
    }
    raw.push_back(t);
  }
  if (raw.empty()) throw std::runtime_error("ingest_movielens_csv: no data rows in " + path);

  // Densify by sorted original id so the result is order-independent.
  std::set<int64_t> users, items;
  for (const RawTriple& t : raw) {
    users.insert(t.user);
    items.insert(t.item);
  }
  std::map<int64_t, int> user_dense, item_dense;
  IdMaps maps;
  for (int64_t u : users) {
    user_dense[u] = static_cast<int>(maps.user_ids.size());
    maps.user_ids.push_back(u);
  }
  for (int64_t i : items) {
    item_dense[i] = static_cast<int>(maps.item_ids.size());
    maps.item_ids.push_back(i);
  }

  RatingsDataset ds;
  ds.num_users = static_cast<int>(maps.user_ids.size());
  ds.num_items = static_cast<int>(maps.item_ids.size());
  for (const RawTriple& t : raw) {
    ds.triples.push_back({user_dense[t.user], item_dense[t.item], t.rating});
  }
  std::sort(ds.triples.begin(), ds.triples.end(), [](const RatingTriple& a, const RatingTriple& b) {
    return std::tie(a.user, a.item) < std::tie(b.user, b.item);
  });
  ds.validate();
  if (id_map) *id_map = std::move(maps);
  return ds;
}

void write_movielens_csv(const RatingsDataset& data, const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("write_movielens_csv: cannot open " + path);
  os << "userId,movieId,rating,timestamp\n";
  char buf[64];
  for (const RatingTriple& t : data.triples) {
    std::snprintf(buf, sizeof(buf), "%d,%d,%.6f,0\n", t.user + 1, t.item + 1, t.rating);
    os << buf;
  }
  if (!os) throw std::runtime_error("write_movielens_csv: write failed for " + path);
}

}  // namespace p4rec::cf
