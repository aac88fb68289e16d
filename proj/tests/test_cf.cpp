#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "p4rec/cf/mf.hpp"
#include "p4rec/cf/ratings.hpp"
#include "p4rec/num/rng.hpp"

using namespace p4rec::cf;
using p4rec::num::Rng;
using p4rec::num::Tensor;

namespace {

RatingsDataset planted_rank2_4x4() {
  // Planted factors, all 16 entries observed; ratings kept inside [0.5, 5].
  const double u[4][2] = {{0.8, 0.2}, {0.1, 0.9}, {0.7, 0.6}, {0.3, 0.4}};
  const double v[4][2] = {{0.9, 0.3}, {0.2, 0.8}, {0.5, 0.5}, {0.6, 0.1}};
  RatingsDataset ds;
  ds.num_users = 4;
  ds.num_items = 4;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      const double r = 2.5 + (u[i][0] * v[j][0] + u[i][1] * v[j][1]);
      ds.triples.push_back({i, j, r});
    }
  }
  return ds;
}

}  // namespace

TEST_CASE("split_ratings: fraction 0, exact sizes, determinism") {
  RatingsDataset ds;
  ds.num_users = 5;
  ds.num_items = 2;
  for (int u = 0; u < 5; ++u) {
    for (int i = 0; i < 2; ++i) ds.triples.push_back({u, i, 3.0});
  }
  const RatingsSplit none = split_ratings(ds, 0.0, 1);
  CHECK(none.holdout.triples.empty());
  CHECK(none.train.triples.size() == 10);

  const RatingsSplit s = split_ratings(ds, 0.2, 7);
  CHECK(s.holdout.triples.size() == 2);
  CHECK(s.train.triples.size() == 8);

  const RatingsSplit s2 = split_ratings(ds, 0.2, 7);
  REQUIRE(s2.holdout.triples.size() == s.holdout.triples.size());
  for (size_t i = 0; i < s.holdout.triples.size(); ++i) {
    CHECK(s.holdout.triples[i].user == s2.holdout.triples[i].user);
    CHECK(s.holdout.triples[i].item == s2.holdout.triples[i].item);
  }

  // every user keeps at least one training rating
  std::vector<int> train_count(5, 0);
  for (const auto& t : s.train.triples) train_count[static_cast<size_t>(t.user)]++;
  for (int c : train_count) CHECK(c >= 1);

  RatingsDataset empty;
  CHECK_THROWS(split_ratings(empty, 0.2, 1));
  CHECK_THROWS(split_ratings(ds, 0.6, 1));
}

TEST_CASE("predict_affinity closed forms and range checks") {
  EmbeddingTables t;
  t.user_matrix = Tensor::from({1, 3}, {1, 0, 0});
  t.item_matrix = Tensor::from({1, 3}, {1, 0, 0});
  t.user_bias = Tensor::zeros({1});
  t.item_bias = Tensor::zeros({1});
  t.global_mean = 0.0;
  CHECK(predict_affinity(t, 0, 0) == doctest::Approx(1.0));

  t.user_matrix = Tensor::from({1, 3}, {0, 0, 0});
  t.global_mean = 3.5;
  CHECK(predict_affinity(t, 0, 0) == doctest::Approx(3.5));

  CHECK_THROWS(predict_affinity(t, 1, 0));
  CHECK_THROWS(predict_affinity(t, 0, -1));

  // random 3-dim case vs independent dot product
  Rng rng(5);
  EmbeddingTables r;
  r.user_matrix = Tensor::zeros({2, 3});
  r.item_matrix = Tensor::zeros({2, 3});
  r.user_bias = Tensor::vec({0.1, -0.2});
  r.item_bias = Tensor::vec({0.3, 0.05});
  r.global_mean = 2.0;
  for (int i = 0; i < 6; ++i) {
    r.user_matrix.at(i) = rng.normal(0, 1);
    r.item_matrix.at(i) = rng.normal(0, 1);
  }
  double dot = 0;
  for (int j = 0; j < 3; ++j) dot += r.user_matrix.at(1, j) * r.item_matrix.at(0, j);
  CHECK(predict_affinity(r, 1, 0) == doctest::Approx(2.0 + (-0.2) + 0.3 + dot).epsilon(1e-12));
}

TEST_CASE("predict_affinity is bilinear in the embedding rows (pure dot mode)") {
  Rng rng(11);
  EmbeddingTables t;
  t.user_matrix = Tensor::zeros({3, 4});
  t.item_matrix = Tensor::zeros({2, 4});
  t.user_bias = Tensor::zeros({3});
  t.item_bias = Tensor::zeros({2});
  t.use_biases = false;
  for (int i = 0; i < t.user_matrix.size(); ++i) t.user_matrix.at(i) = rng.normal(0, 1);
  for (int i = 0; i < t.item_matrix.size(); ++i) t.item_matrix.at(i) = rng.normal(0, 1);

  const double alpha = 0.7, beta = -1.3;
  const double r0 = predict_affinity(t, 0, 1);
  const double r1 = predict_affinity(t, 1, 1);
  // write alpha*u0 + beta*u1 into user 2
  for (int j = 0; j < 4; ++j) {
    t.user_matrix.at(2, j) = alpha * t.user_matrix.at(0, j) + beta * t.user_matrix.at(1, j);
  }
  CHECK(predict_affinity(t, 2, 1) == doctest::Approx(alpha * r0 + beta * r1).epsilon(1e-12));
}

TEST_CASE("train_mf: exact rank-1 matrix reaches tiny RMSE") {
  RatingsDataset ds;
  ds.num_users = 4;
  ds.num_items = 3;
  const double u[4] = {1.0, 1.4, 1.8, 2.2};
  const double v[3] = {1.0, 1.3, 1.6};
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 3; ++j) ds.triples.push_back({i, j, u[i] * v[j]});
  }
  MfConfig cfg;
  cfg.d_cf = 1;
  cfg.l2_weight = 0.0;
  cfg.epochs = 1500;
  cfg.learning_rate = 0.05;
  cfg.seed = 3;
  const MfTrainResult res = train_mf(ds, cfg);
  CHECK(res.final_train_rmse <= 1e-2);

  // loss curve non-increasing within per-epoch jitter
  for (size_t e = 1; e < res.epoch_loss.size(); ++e) {
    CHECK(res.epoch_loss[e] <= res.epoch_loss[e - 1] + 1e-6);
  }
}

TEST_CASE("train_mf: planted rank-2 4x4 recovered within 0.05 RMSE") {
  const RatingsDataset ds = planted_rank2_4x4();
  MfConfig cfg;
  cfg.d_cf = 2;
  cfg.l2_weight = 0.0;
  cfg.epochs = 2000;
  cfg.learning_rate = 0.05;
  cfg.seed = 9;
  const MfTrainResult res = train_mf(ds, cfg);
  double se = 0;
  for (const auto& t : ds.triples) {
    const double e = predict_affinity(res.tables, t.user, t.item) - t.rating;
    se += e * e;
  }
  CHECK(std::sqrt(se / 16.0) <= 0.05);
}

TEST_CASE("train_mf: empty training set and overparameterization warning") {
  RatingsDataset empty;
  MfConfig cfg;
  CHECK_THROWS(train_mf(empty, cfg));

  RatingsDataset tiny;
  tiny.num_users = 2;
  tiny.num_items = 2;
  tiny.triples = {{0, 0, 3.0}, {0, 1, 2.0}, {1, 0, 4.0}, {1, 1, 1.0}};
  MfConfig wide;
  wide.d_cf = 8;
  wide.epochs = 2;
  const MfTrainResult res = train_mf(tiny, wide);
  CHECK(res.warned_overparameterized);
}

TEST_CASE("train_mf: realizable planted model generalizes (holdout close to train)") {
  // 15x15 rank-2, fully observed, all ratings inside [0.5, 5]; the pure
  // dot-product model class contains the planted truth exactly.
  Rng rng(17);
  double u[15][2], v[15][2];
  for (int i = 0; i < 15; ++i) {
    for (int k = 0; k < 2; ++k) {
      u[i][k] = rng.uniform(0.6, 1.4);
      v[i][k] = rng.uniform(0.6, 1.4);
    }
  }
  RatingsDataset ds;
  ds.num_users = 15;
  ds.num_items = 15;
  for (int i = 0; i < 15; ++i) {
    for (int j = 0; j < 15; ++j) {
      ds.triples.push_back({i, j, u[i][0] * v[j][0] + u[i][1] * v[j][1]});
    }
  }
  const RatingsSplit split = split_ratings(ds, 0.2, 21);
  MfConfig cfg;
  cfg.d_cf = 2;
  cfg.l2_weight = 0.0;
  cfg.epochs = 3000;
  cfg.learning_rate = 0.04;
  cfg.seed = 2;
  cfg.use_biases = false;
  const MfTrainResult res = train_mf(split.train, cfg);
  const double train_rmse = rmse(res.tables, split.train);
  const double hold_rmse = rmse(res.tables, split.holdout);
  CHECK(hold_rmse - train_rmse <= 0.05);
}

TEST_CASE("train_mf: stronger l2 never grows embedding norms") {
  const RatingsDataset ds = planted_rank2_4x4();
  auto norms_at = [&](double l2) {
    MfConfig cfg;
    cfg.d_cf = 2;
    cfg.l2_weight = l2;
    cfg.epochs = 1200;
    cfg.learning_rate = 0.04;
    cfg.seed = 5;
    const MfTrainResult res = train_mf(ds, cfg);
    double s = 0;
    for (int i = 0; i < res.tables.user_matrix.size(); ++i) {
      s += res.tables.user_matrix.at(i) * res.tables.user_matrix.at(i);
    }
    for (int i = 0; i < res.tables.item_matrix.size(); ++i) {
      s += res.tables.item_matrix.at(i) * res.tables.item_matrix.at(i);
    }
    return s;
  };
  const double n0 = norms_at(0.0);
  const double n1 = norms_at(0.1);
  const double n2 = norms_at(1.0);
  CHECK(n0 >= n1 - 1e-9);
  CHECK(n1 >= n2 - 1e-9);
}

TEST_CASE("embedding tables checkpoint round-trip") {
  const RatingsDataset ds = planted_rank2_4x4();
  MfConfig cfg;
  cfg.d_cf = 2;
  cfg.epochs = 50;
  const MfTrainResult res = train_mf(ds, cfg);
  const std::string path = (std::filesystem::temp_directory_path() / "cf_tables.ckpt").string();
  res.tables.save(path);
  const EmbeddingTables loaded = EmbeddingTables::load(path);
  CHECK(predict_affinity(loaded, 1, 2) == predict_affinity(res.tables, 1, 2));
  CHECK(loaded.global_mean == res.tables.global_mean);
  std::filesystem::remove(path);
}

TEST_CASE("ingest_movielens_csv: single row, duplicates, malformed rows") {
  namespace fs = std::filesystem;
  const std::string path = (fs::temp_directory_path() / "ml_test.csv").string();
  {
    std::ofstream os(path);
    os << "userId,movieId,rating,timestamp\n1,10,4.0,964982703\n";
  }
  IdMaps maps;
  const RatingsDataset one = ingest_movielens_csv(path, &maps);
  CHECK(one.triples.size() == 1);
  CHECK(one.num_users == 1);
  CHECK(one.num_items == 1);
  CHECK(one.triples[0].rating == doctest::Approx(4.0));
  CHECK(maps.user_ids[0] == 1);
  CHECK(maps.item_ids[0] == 10);

  {
    std::ofstream os(path);
    os << "userId,movieId,rating,timestamp\n1,10,4.0,1\n1,10,3.0,2\n";
  }
  CHECK_THROWS_WITH_AS(static_cast<void>(ingest_movielens_csv(path)),
                       doctest::Contains("duplicate"), std::runtime_error);

  {
    std::ofstream os(path);
    os << "userId,movieId,rating,timestamp\n1,abc,4.0,1\n";
  }
  CHECK_THROWS_WITH_AS(static_cast<void>(ingest_movielens_csv(path)),
                       doctest::Contains("line 2"), std::runtime_error);

  {
    std::ofstream os(path);
    os << "";
  }
  CHECK_THROWS(static_cast<void>(ingest_movielens_csv(path)));
  fs::remove(path);
}

TEST_CASE("ingest_movielens_csv: 100-row sample densifies and is order-independent") {
  namespace fs = std::filesystem;
  const std::string fwd = (fs::temp_directory_path() / "ml_fwd.csv").string();
  const std::string rev = (fs::temp_directory_path() / "ml_rev.csv").string();
  // 100 rows over sparse original ids
  std::vector<std::string> rows;
  for (int k = 0; k < 100; ++k) {
    const int user = 3 + 7 * (k % 10);       // 10 distinct users
    const int movie = 100 + 13 * (k / 10 + 10 * (k % 10));  // unique per (user,k/10)
    const double rating = 0.5 + 0.5 * (k % 9);
    rows.push_back(std::to_string(user) + "," + std::to_string(movie) + "," +
                   std::to_string(rating) + ",0");
  }
  {
    std::ofstream os(fwd);
    os << "userId,movieId,rating,timestamp\n";
    for (const auto& r : rows) os << r << "\n";
  }
  {
    std::ofstream os(rev);
    os << "userId,movieId,rating,timestamp\n";
    for (auto it = rows.rbegin(); it != rows.rend(); ++it) os << *it << "\n";
  }
  const RatingsDataset a = ingest_movielens_csv(fwd);
  const RatingsDataset b = ingest_movielens_csv(rev);
  CHECK(a.triples.size() == 100);
  CHECK(a.num_users == 10);
  REQUIRE(a.triples.size() == b.triples.size());
  for (size_t i = 0; i < a.triples.size(); ++i) {
    CHECK(a.triples[i].user == b.triples[i].user);
    CHECK(a.triples[i].item == b.triples[i].item);
    CHECK(a.triples[i].rating == b.triples[i].rating);
  }
  // ids are contiguous
  for (const auto& t : a.triples) {
    CHECK(t.user < a.num_users);
    CHECK(t.item < a.num_items);
  }
  fs::remove(fwd);
  fs::remove(rev);
}

TEST_CASE("write + ingest movielens round trip") {
  namespace fs = std::filesystem;
  RatingsDataset ds;
  ds.num_users = 3;
  ds.num_items = 2;
  ds.triples = {{0, 0, 2.517342}, {1, 1, 4.25}, {2, 0, 0.5}};
  const std::string path = (fs::temp_directory_path() / "ml_rt.csv").string();
  write_movielens_csv(ds, path);
  const RatingsDataset back = ingest_movielens_csv(path);
  REQUIRE(back.triples.size() == 3);
  CHECK(back.triples[0].rating == doctest::Approx(2.517342).epsilon(1e-9));
  fs::remove(path);
}
