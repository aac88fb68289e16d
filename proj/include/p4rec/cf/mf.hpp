#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "p4rec/cf/ratings.hpp"
#include "p4rec/num/tensor.hpp"

namespace p4rec::cf {

// Two-tower embedding tables learned by matrix factorization. The dot
// product of a user row and an item row is the interaction term; biases and
// the global mean are standard additions and can be disabled for a pure
// dot-product model.
struct EmbeddingTables {
  num::Tensor user_matrix;  // [num_users, d_cf]
  num::Tensor item_matrix;  // [num_items, d_cf]
  num::Tensor user_bias;    // [num_users]
  num::Tensor item_bias;    // [num_items]
  double global_mean = 0.0;
  bool use_biases = true;

  int d_cf() const { return user_matrix.dim(1); }
  int num_users() const { return user_matrix.dim(0); }
  int num_items() const { return item_matrix.dim(0); }

  num::Tensor user_vec(int u) const;
  num::Tensor item_vec(int i) const;

  void save(const std::string& path) const;
  static EmbeddingTables load(const std::string& path);
};

struct MfConfig {
  int d_cf = 16;
  double l2_weight = 0.02;
  int epochs = 400;
  double learning_rate = 0.05;
  uint64_t seed = 0;
  double holdout_fraction = 0.0;
  int batch_size = 0;  // 0 = full batch
  bool use_biases = true;
  // Learning-rate decay per epoch (multiplicative), keeps late epochs calm.
  double lr_decay = 0.999;
  // Embedding initialization: entries ~ N(init_mean, init_std).
  double init_mean = 0.0;
  double init_std = 0.1;

  void validate() const;
};

struct MfTrainResult {
  EmbeddingTables tables;
  std::vector<double> epoch_loss;  // full-objective loss per epoch
  double final_train_rmse = 0.0;
  bool warned_overparameterized = false;
};

// Minimizes sum (r - r_hat)^2 + l2 * (|U|_F^2 + |I|_F^2) with Adam.
// Aborts with a diagnostic if the loss diverges to NaN.
MfTrainResult train_mf(const RatingsDataset& train, const MfConfig& cfg);

// r_hat = global_mean + user_bias[u] + item_bias[i] + u . i
// (interaction term only when biases are disabled).
double predict_affinity(const EmbeddingTables& tables, int user, int item);

double rmse(const EmbeddingTables& tables, const RatingsDataset& data);

}  // namespace p4rec::cf
