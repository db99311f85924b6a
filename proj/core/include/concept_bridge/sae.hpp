#pragma once

// TopK sparse autoencoder: f = (x - b_dec) W_enc, x_hat = TopK(f) W_dec + b_dec.
// No encoder bias and no ReLU; TopK keeps the k largest values, which may be
// negative when fewer than k latents are positive.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "concept_bridge/activations.hpp"
#include "concept_bridge/linalg.hpp"

namespace concept_bridge {

struct TrainConfig {
  double learning_rate = 5e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  std::size_t batch_size = 32;
  std::size_t epochs = 1;
  std::size_t expansion_factor = 8;
  std::size_t k = 32;
  std::uint64_t seed = 0;
  double sigma_tol = kDefaultSigmaTol;
  TileConfig tiles{64, 256, 256};

  void validate() const;
};

struct SaeParams {
  std::size_t d_in = 0;
  std::size_t n_features = 0;
  std::size_t k = 0;
  std::size_t expansion_factor = 0;
  DenseMatrix w_enc;  // d_in x n_features
  DenseMatrix w_dec;  // n_features x d_in
  std::vector<float> b_dec;

  /// Checks the shape, sparsity and finiteness invariants.
  void validate() const;
  friend bool operator==(const SaeParams&, const SaeParams&) = default;
};

/// W_dec rows ~ N(0, I) normalized to unit length, W_enc = W_dec^T,
/// b_dec = column mean of warmup_batch.
SaeParams sae_init(std::size_t d_in, const TrainConfig& cfg, const DenseMatrix& warmup_batch);

/// Keeps the k largest entries (by value, lower index wins ties), zeros the rest.
std::vector<float> topk_select(std::span<const float> f, std::size_t k);

/// Indices of the k largest entries in descending value order, ties toward
/// the lower index.
std::vector<std::size_t> topk_indices(std::span<const float> f, std::size_t k);

struct ForwardPass {
  DenseMatrix f_pre;     // B x F, recorded before TopK
  DenseMatrix f_sparse;  // B x F
  DenseMatrix x_hat;     // B x D
  /// selected[r * k + s]: latent indices kept for row r.
  std::vector<std::uint32_t> selected;
};

/// Pre-TopK latents (x - b_dec) W_enc only; rows are processed in chunks.
DenseMatrix sae_encode(const SaeParams& p, const DenseMatrix& x, const TileConfig& tiles = {});

ForwardPass sae_forward(const SaeParams& p, const DenseMatrix& x, const TileConfig& tiles = {});

/// Mean over rows of the squared L2 reconstruction error.
double mse_loss(const DenseMatrix& x, const DenseMatrix& x_hat);

struct SaeGradients {
  DenseMatrix w_enc;
  DenseMatrix w_dec;
  std::vector<float> b_dec;
};

/// Gradients of mse_loss with respect to every parameter. The TopK mask is
/// treated as constant (straight-through on the selected latents).
SaeGradients sae_backward(const SaeParams& p, const DenseMatrix& x, const ForwardPass& fwd);

struct AdamState {
  std::vector<float> m_enc, v_enc;
  std::vector<float> m_dec, v_dec;
  std::vector<float> m_bias, v_bias;
  std::uint64_t step_count = 0;

  static AdamState zeros_like(const SaeParams& p);
};

/// One bias-corrected Adam update in place. Throws DataError naming the
/// tensor and index when a gradient is non-finite; nothing is modified then.
void adam_step(AdamState& state, SaeParams& params, const SaeGradients& grads, const TrainConfig& cfg);

struct TrainReport {
  std::vector<double> epoch_mse;
  /// MSE of every optimizer step, measured before the update.
  std::vector<double> batch_mse;
  std::vector<double> epoch_seconds;
  std::size_t dead_latents = 0;
  std::uint64_t seed = 0;
  TrainConfig config;
};

struct TrainResult {
  SaeParams params;
  TrainReport report;
};

/// epochs x ceil(N / batch_size) Adam steps over a fresh seeded shuffle of
/// the rows each epoch. The first batch (in shuffled order) of epoch zero
/// seeds b_dec.
TrainResult train_sae(const ActivationMatrix& acts, const TrainConfig& cfg);

/// Number of latents never selected by TopK over all rows of acts.
std::size_t dead_latent_count(const SaeParams& p, const ActivationMatrix& acts, const TileConfig& tiles = {});

/// Per-latent TopK selection counts over all rows of data.
std::vector<std::size_t> selection_counts(const SaeParams& p, const DenseMatrix& data, const TileConfig& tiles = {});

}  // namespace concept_bridge
