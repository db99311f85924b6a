#pragma once

// .sae checkpoint:
//   "SAEC" | version u32 LE | header length u32 LE | header JSON
//   | w_enc (D x F) | w_dec (F x D) | b_dec (D), all f32 LE row-major.
// The header carries d_in, n_features, k, expansion, seed, the training
// config and a creator tag. No timestamps, so identical runs give identical
// bytes.

#include <cstdint>
#include <string>
#include <vector>

#include "concept_bridge/sae.hpp"

namespace concept_bridge {

struct Checkpoint {
  SaeParams params;
  TrainConfig config;
};

std::vector<char> serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(std::vector<char> bytes, const std::string& source = "<memory>");

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

/// Content hash of the parameters (FNV-1a over k, shapes and weights).
std::string checkpoint_hash(const SaeParams& params);

/// Header JSON of a checkpoint file, for `inspect`.
std::string read_checkpoint_header(const std::string& path);

}  // namespace concept_bridge
