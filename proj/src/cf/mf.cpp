#include "p4rec/cf/mf.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "p4rec/num/adam.hpp"
#include "p4rec/num/checkpoint.hpp"
#include "p4rec/num/params.hpp"
#include "p4rec/num/rng.hpp"
#include "p4rec/num/tape.hpp"

namespace p4rec::cf {

using num::Gradients;
using num::ParamStore;
using num::Tape;
using num::TapeBind;
using num::Tensor;

void MfConfig::validate() const {
  if (d_cf < 1) throw std::invalid_argument("MfConfig: d_cf must be >= 1");
  if (l2_weight < 0) throw std::invalid_argument("MfConfig: l2_weight must be >= 0");
  if (!(holdout_fraction >= 0.0 && holdout_fraction <= 0.5)) {
    throw std::invalid_argument("MfConfig: holdout_fraction must lie in [0, 0.5]");
  }
  if (epochs < 1) throw std::invalid_argument("MfConfig: epochs must be >= 1");
  if (learning_rate <= 0) throw std::invalid_argument("MfConfig: learning_rate must be > 0");
}

num::Tensor EmbeddingTables::user_vec(int u) const {
  if (u < 0 || u >= num_users()) throw std::out_of_range("user id out of range");
  Tensor v = Tensor::zeros({d_cf()});
  for (int j = 0; j < d_cf(); ++j) v.at(j) = user_matrix.at(u, j);
  return v;
}

num::Tensor EmbeddingTables::item_vec(int i) const {
  if (i < 0 || i >= num_items()) throw std::out_of_range("item id out of range");
  Tensor v = Tensor::zeros({d_cf()});
  for (int j = 0; j < d_cf(); ++j) v.at(j) = item_matrix.at(i, j);
  return v;
}

void EmbeddingTables::save(const std::string& path) const {
  ParamStore store;
  store.add("user_matrix", user_matrix);
  store.add("item_matrix", item_matrix);
  store.add("user_bias", user_bias);
  store.add("item_bias", item_bias);
  store.add("global_mean", Tensor::scalar(global_mean));
  store.add("use_biases", Tensor::scalar(use_biases ? 1.0 : 0.0));
  num::save_checkpoint(store, path);
}

EmbeddingTables EmbeddingTables::load(const std::string& path) {
  ParamStore store = num::load_checkpoint(path);
  EmbeddingTables t;
  t.user_matrix = store.at("user_matrix");
  t.item_matrix = store.at("item_matrix");
  t.user_bias = store.at("user_bias");
  t.item_bias = store.at("item_bias");
  t.global_mean = store.at("global_mean").item();
  t.use_biases = store.at("use_biases").item() != 0.0;
  return t;
}

double predict_affinity(const EmbeddingTables& tables, int user, int item) {
  if (user < 0 || user >= tables.num_users()) throw std::out_of_range("user id out of range");
  if (item < 0 || item >= tables.num_items()) throw std::out_of_range("item id out of range");
  double dot = 0;
  for (int j = 0; j < tables.d_cf(); ++j) {
    dot += tables.user_matrix.at(user, j) * tables.item_matrix.at(item, j);
  }
  if (!tables.use_biases) return dot;
  return tables.global_mean + tables.user_bias.at(user) + tables.item_bias.at(item) + dot;
}

double rmse(const EmbeddingTables& tables, const RatingsDataset& data) {
  if (data.triples.empty()) throw std::invalid_argument("rmse: empty dataset");
  double s = 0;
  for (const RatingTriple& t : data.triples) {
    const double e = predict_affinity(tables, t.user, t.item) - t.rating;
    s += e * e;
  }
  return std::sqrt(s / static_cast<double>(data.triples.size()));
}

namespace {

// Full objective, normalized by |D| to match the per-batch loss scale.
double full_loss(const EmbeddingTables& t, const RatingsDataset& data, double l2) {
  double s = 0;
  for (const RatingTriple& tr : data.triples) {
    const double e = predict_affinity(t, tr.user, tr.item) - tr.rating;
    s += e * e;
  }
  double reg = 0;
  for (int i = 0; i < t.user_matrix.size(); ++i) reg += t.user_matrix.at(i) * t.user_matrix.at(i);
  for (int i = 0; i < t.item_matrix.size(); ++i) reg += t.item_matrix.at(i) * t.item_matrix.at(i);
  return (s + l2 * reg) / static_cast<double>(data.triples.size());
}

}  // namespace

MfTrainResult train_mf(const RatingsDataset& train, const MfConfig& cfg) {
  cfg.validate();
  if (train.triples.empty()) throw std::invalid_argument("train_mf: empty training set");
  train.validate();

  MfTrainResult result;
  result.warned_overparameterized = cfg.d_cf > std::min(train.num_users, train.num_items);

  double mean_rating = 0;
  for (const RatingTriple& t : train.triples) mean_rating += t.rating;
  mean_rating /= static_cast<double>(train.triples.size());

  num::Rng rng(cfg.seed);
  ParamStore params;
  {
    Tensor u = Tensor::zeros({train.num_users, cfg.d_cf});
    Tensor it = Tensor::zeros({train.num_items, cfg.d_cf});
    for (int i = 0; i < u.size(); ++i) u.at(i) = rng.normal(cfg.init_mean, cfg.init_std);
    for (int i = 0; i < it.size(); ++i) it.at(i) = rng.normal(cfg.init_mean, cfg.init_std);
    params.add("user_matrix", std::move(u));
    params.add("item_matrix", std::move(it));
    params.add("user_bias", Tensor::zeros({train.num_users}));
    params.add("item_bias", Tensor::zeros({train.num_items}));
  }

  const size_t n = train.triples.size();
  const int batch = cfg.batch_size <= 0 ? static_cast<int>(n)
                                        : std::min<int>(cfg.batch_size, static_cast<int>(n));
  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;

  num::AdamState adam(num::AdamConfig{cfg.learning_rate, 0.9, 0.999, 1e-8});
  auto snapshot = [&]() {
    EmbeddingTables t;
    t.user_matrix = params.at("user_matrix");
    t.item_matrix = params.at("item_matrix");
    t.user_bias = params.at("user_bias");
    t.item_bias = params.at("item_bias");
    t.global_mean = cfg.use_biases ? mean_rating : 0.0;
    t.use_biases = cfg.use_biases;
    return t;
  };

  auto batch_step = [&](size_t start, size_t stop, double step_lr) {
    const int b = static_cast<int>(stop - start);
    std::vector<int> uidx(static_cast<size_t>(b)), iidx(static_cast<size_t>(b));
    std::vector<double> r(static_cast<size_t>(b));
    for (size_t k = start; k < stop; ++k) {
      const RatingTriple& t = train.triples[order[k]];
      uidx[k - start] = t.user;
      iidx[k - start] = t.item;
      r[k - start] = t.rating - (cfg.use_biases ? mean_rating : 0.0);
    }

    Tape tape;
    TapeBind bind(tape, params);
    const int u_rows = tape.rows(bind["user_matrix"], uidx);
    const int i_rows = tape.rows(bind["item_matrix"], iidx);
    int pred = tape.sum_cols(tape.mul(u_rows, i_rows));
    if (cfg.use_biases) {
      pred = tape.add(pred, tape.gather(bind["user_bias"], uidx));
      pred = tape.add(pred, tape.gather(bind["item_bias"], iidx));
    }
    const int err = tape.sub(pred, tape.constant(Tensor::vec(r)));
    int loss = tape.mean(tape.mul(err, err));
    if (cfg.l2_weight > 0) {
      const int um = bind["user_matrix"];
      const int im = bind["item_matrix"];
      const int reg = tape.add(tape.sum(tape.mul(um, um)), tape.sum(tape.mul(im, im)));
      loss = tape.add(loss, tape.scale(reg, cfg.l2_weight / static_cast<double>(n)));
    }
    if (!std::isfinite(tape.val(loss).item())) {
      throw std::runtime_error("train_mf: loss diverged to non-finite");
    }
    tape.backward(loss);
    adam.set_lr(step_lr);
    adam.step(params, bind.collect());
  };

  const bool full_batch = static_cast<size_t>(batch) >= n;
  double lr = cfg.learning_rate;
  double prev_loss = full_loss(snapshot(), train, cfg.l2_weight);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (full_batch) {
      // One Adam step per epoch on the full objective. If the loss rises the
      // step is reverted, moments reset, and the rate halved; this keeps the
      // recorded curve non-increasing up to float jitter.
      const ParamStore before = params;
      const num::AdamState adam_before = adam;
      batch_step(0, n, lr);
      double l = full_loss(snapshot(), train, cfg.l2_weight);
      int retries = 0;
      while (l > prev_loss + 1e-9 && retries < 48) {
        params = before;
        adam = num::AdamState(num::AdamConfig{lr, 0.9, 0.999, 1e-8});
        lr *= 0.5;
        batch_step(0, n, lr);
        l = full_loss(snapshot(), train, cfg.l2_weight);
        ++retries;
      }
      if (l > prev_loss + 1e-9) {
        // step size underflowed; keep the previous point
        params = before;
        adam = adam_before;
        l = prev_loss;
      }
      result.epoch_loss.push_back(l);
      prev_loss = l;
      lr = std::min(lr * 1.05, cfg.learning_rate * 2.0);
    } else {
      rng.shuffle(order);
      for (size_t start = 0; start < n; start += static_cast<size_t>(batch)) {
        batch_step(start, std::min(n, start + static_cast<size_t>(batch)), lr);
      }
      lr *= cfg.lr_decay;
      const double l = full_loss(snapshot(), train, cfg.l2_weight);
      if (!std::isfinite(l)) {
        throw std::runtime_error("train_mf: loss diverged to non-finite at epoch " +
                                 std::to_string(epoch));
      }
      result.epoch_loss.push_back(l);
    }
  }

  result.tables = snapshot();
  result.final_train_rmse = rmse(result.tables, train);
  return result;
}

}  // namespace p4rec::cf
