#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "concept_bridge/feature_store.hpp"
#include "concept_bridge/sae.hpp"
#include "oracles.hpp"

namespace fixtures {

using namespace concept_bridge;

inline FeatureMatrix feature_matrix(DenseMatrix data, std::string model, std::int64_t layer = 0) {
  FeatureMatrix fm;
  fm.model_id = std::move(model);
  fm.layer = layer;
  fm.dataset_id = "synthetic";
  fm.sae_checkpoint_hash = "0000000000000000";
  fm.s_mode = SMode::relu;
  fm.k = std::min<std::size_t>(4, data.cols());
  fm.s_vector = cumulative_activation(data, SMode::relu);
  fm.data = std::move(data);
  return fm;
}

// Gaussian features shifted positive so relu S is strictly positive.
inline FeatureMatrix random_features(std::size_t n, std::size_t f, std::uint64_t seed, std::string model,
                                     std::int64_t layer = 0) {
  auto m = oracle::random_matrix(n, f, seed);
  for (auto& v : m.values()) v += 3.0f;
  return feature_matrix(std::move(m), std::move(model), layer);
}

// Random SAE with unconstrained weights for gradient checks.
inline SaeParams random_sae(std::size_t d, std::size_t f, std::size_t k, std::uint64_t seed) {
  SaeParams p;
  p.d_in = d;
  p.n_features = f;
  p.k = k;
  p.expansion_factor = f / d;
  p.w_enc = oracle::random_matrix(d, f, seed, 0.5);
  p.w_dec = oracle::random_matrix(f, d, seed + 1, 0.5);
  const auto b = oracle::random_matrix(1, d, seed + 2, 0.2);
  p.b_dec.assign(b.values().begin(), b.values().end());
  return p;
}

struct GradientCheck {
  bool skipped = false;
  double worst = 0.0;  // max relative error over the three tensors
};

// Compares sae_backward against central differences of the double oracle.
// Instances whose TopK selection could flip under the probe step are skipped.
inline GradientCheck check_gradients(std::uint64_t seed, std::size_t d = 4, std::size_t f = 8, std::size_t k = 3,
                                     std::size_t batch = 5) {
  const SaeParams p = random_sae(d, f, k, seed * 7 + 1);
  const auto x = oracle::random_matrix(batch, d, seed * 7 + 5);
  const auto ref = oracle::Sae::from(p);
  if (ref.topk_margin(x) < 1e-3) return {true, 0.0};

  const double h = 1e-4;
  const auto fwd = sae_forward(p, x);
  const auto g = sae_backward(p, x, fwd);
  const double e_enc = oracle::relative_error(oracle::to_double(g.w_enc.values()),
                                              ref.numeric_grad(x, &oracle::Sae::w_enc, h));
  const double e_dec = oracle::relative_error(oracle::to_double(g.w_dec.values()),
                                              ref.numeric_grad(x, &oracle::Sae::w_dec, h));
  const double e_b = oracle::relative_error(oracle::to_double(g.b_dec), ref.numeric_grad(x, &oracle::Sae::b_dec, h));
  return {false, std::max({e_enc, e_dec, e_b})};
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path = std::filesystem::temp_directory_path() / ("cb_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace fixtures
