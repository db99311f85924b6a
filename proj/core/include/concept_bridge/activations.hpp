#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "concept_bridge/linalg.hpp"

namespace concept_bridge {

enum class TokenMode { all_tokens, global_only };

std::string_view to_string(TokenMode mode);
/// Throws InvalidArgument on an unknown name.
TokenMode parse_token_mode(std::string_view name);

/// Encoder activations for one (model, layer, dataset). In global_only mode
/// there is exactly one row per data sample.
struct ActivationMatrix {
  DenseMatrix data;
  std::string model_id;
  std::int64_t layer = 0;
  std::string dataset_id;
  TokenMode token_mode = TokenMode::all_tokens;
  /// Which position stands for the sample in global_only dumps (cls, eos,
  /// pooled, ...). Informational; written by the extractor.
  std::string global_token_kind;

  /// Throws InvalidArgument when there are no rows or layer < 0.
  void validate() const;
};

}  // namespace concept_bridge
