#pragma once

// Pre-TopK SAE features at the global token, cumulative activations, and the
// .acts / .feat file formats.
//
// .acts: "SAEA" | version u32 | header_len u32 | header JSON
//        | n_rows u64 | n_cols u32 | n_rows*n_cols f32, all little-endian.
// .feat: "SAEF" | same envelope and matrix | s_vector (n_cols f32).
// Header JSON echoes n_rows and n_cols; readers reject any disagreement.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "concept_bridge/activations.hpp"
#include "concept_bridge/linalg.hpp"
#include "concept_bridge/sae.hpp"

namespace concept_bridge {

/// How S_i is accumulated: raw sums pre-TopK latents as they are, relu sums
/// max(f, 0), post_topk sums only the values TopK keeps.
enum class SMode { raw, relu, post_topk };

std::string_view to_string(SMode mode);
SMode parse_s_mode(std::string_view name);

struct FeatureMatrix {
  DenseMatrix data;  // N x F pre-TopK latents
  std::string model_id;
  std::int64_t layer = 0;
  std::string dataset_id;
  std::string sae_checkpoint_hash;
  std::vector<float> s_vector;
  SMode s_mode = SMode::raw;
  /// TopK sparsity of the SAE that produced the features (needed to
  /// recompute post_topk sums).
  std::size_t k = 0;
  /// Source layer of every column; empty when all columns come from `layer`.
  std::vector<std::int64_t> column_layers;

  std::size_t samples() const { return data.rows(); }
  std::size_t features() const { return data.cols(); }
  /// "model@layer", or "model@all" for concatenated matrices.
  std::string id() const;
};

/// Runs the encoder on global-token activations. Throws InvalidArgument for
/// all_tokens input.
FeatureMatrix extract_features(const SaeParams& p, const ActivationMatrix& acts, SMode s_mode = SMode::raw,
                               const TileConfig& tiles = {});

/// S_i = sum over samples of f_i under `mode`. post_topk needs k in [1, F].
std::vector<float> cumulative_activation(const DenseMatrix& features, SMode mode, std::size_t k = 0);
std::vector<float> cumulative_activation(const FeatureMatrix& fm, SMode mode);

struct SDiagnostics {
  double mean = 0.0;
  double std = 0.0;  // population
  double coefficient_of_variation = 0.0;
};

/// Mean, population std and std/mean of S. Throws DataError when mean == 0.
SDiagnostics s_diagnostics(std::span<const float> s);

void write_activations(const std::string& path, const ActivationMatrix& acts);
ActivationMatrix read_activations(const std::string& path);
std::vector<char> serialize_activations(const ActivationMatrix& acts);
ActivationMatrix deserialize_activations(std::vector<char> bytes, const std::string& source = "<memory>");

void write_features(const std::string& path, const FeatureMatrix& fm);
FeatureMatrix read_features(const std::string& path);
std::vector<char> serialize_features(const FeatureMatrix& fm);
FeatureMatrix deserialize_features(std::vector<char> bytes, const std::string& source = "<memory>");

/// File kind detected from the magic bytes.
enum class FileKind { activations, features, checkpoint };

struct FileSummary {
  FileKind kind;
  std::string header_json;
  /// Total file size in bytes.
  std::size_t bytes = 0;
};

/// Reads and validates a .acts/.feat/.sae file and returns its header.
/// Throws DataError on any corruption.
FileSummary inspect_file(const std::string& path);

}  // namespace concept_bridge
