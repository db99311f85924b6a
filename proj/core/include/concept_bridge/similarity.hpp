#pragma once

// Max pairwise Pearson correlation between SAE feature sets.
//
//   rho_i  = max_j corr(src[:, i], tgt[:, j])
//   MPPC   = mean_i rho_i
//   wMPPC  = sum_i S_i rho_i / sum_i S_i      (S = src.s_vector)
//
// Both are directional: mppc(A -> B) != mppc(B -> A) in general.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "concept_bridge/feature_store.hpp"
#include "concept_bridge/linalg.hpp"

namespace concept_bridge {

struct MppcOptions {
  TileConfig tiles{};
  /// Target columns correlated per pass; the running row-max keeps memory
  /// at F_A x target_block instead of F_A x F_B.
  std::size_t target_block = 4096;
  double sigma_tol = kDefaultSigmaTol;
};

struct MppcResult {
  std::vector<float> rho;
  std::vector<std::size_t> argmax;
  double mppc = 0.0;
  double wmppc = 0.0;
  std::size_t n_samples = 0;
  std::string source_id;
  std::string target_id;
  /// Constant source columns; they contribute rho = 0.
  std::size_t dead_source_count = 0;
  SMode s_mode = SMode::raw;
};

/// Row maxima of corr(xs, ys) for standardized inputs, computed over target
/// column blocks of width target_block. Ties keep the lowest target index.
RowMax max_correlation(const DenseMatrix& xs_std, const DenseMatrix& ys_std, const MppcOptions& opts = {});

/// sum(S rho) / sum(S). Throws DataError when sum |S| < 1e-12 or sum S <= 0.
double weighted_mean(std::span<const float> s, std::span<const float> rho);

/// Throws InvalidArgument when src and tgt are not aligned on the same samples.
MppcResult mppc_pair(const FeatureMatrix& src, const FeatureMatrix& tgt, const MppcOptions& opts = {});

/// Pearson correlation of S against rho; 0 when either is constant.
double s_rho_correlation(std::span<const float> s, std::span<const float> rho);

/// Column-wise concatenation of one model's layers; keeps per-column layer
/// provenance and concatenates the S vectors.
FeatureMatrix concat_layers(std::span<const FeatureMatrix> fms);

struct LayerGrid {
  DenseMatrix grid;  // source layers x target layers, wMPPC
  std::vector<std::int64_t> source_layers;
  std::vector<std::int64_t> target_layers;
  std::string source_model;
  std::string target_model;
};

/// grid[a, b] = wmppc(src_layers[a] -> tgt_layers[b]). Each layer is
/// standardized once; cells match individual mppc_pair calls bitwise.
LayerGrid layerwise_grid(std::span<const FeatureMatrix> src_layers, std::span<const FeatureMatrix> tgt_layers,
                         const MppcOptions& opts = {});

/// 2 * n_samples * f_src * f_tgt multiply-add FLOPs for one all-pairs
/// correlation. Throws InvalidArgument on zero inputs or 64-bit overflow.
std::uint64_t estimate_flops(std::uint64_t f_total_src, std::uint64_t f_total_tgt, std::uint64_t n_samples);

}  // namespace concept_bridge
