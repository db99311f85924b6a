#pragma once

// Comparative Sharedness: which features of a model M are shared with one
// model (or group) but not another.
//
//   pair:   delta_i = S_i (rho_A - rho_B)(rho_A + rho_B)
//   groups: delta_i = S_i ((min_{g in G} rho_g)^2 - (max_{h in H} rho_h)^2)

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "concept_bridge/feature_store.hpp"
#include "concept_bridge/similarity.hpp"

namespace concept_bridge {

std::vector<double> comparative_sharedness(std::span<const float> s, std::span<const float> rho_a,
                                           std::span<const float> rho_b);

std::vector<double> generalized_cs(std::span<const float> s, std::span<const std::vector<float>> rhos_g,
                                   std::span<const std::vector<float>> rhos_h);

/// Number of features kept for a fraction: floor(fraction * n), at least 1.
std::size_t top_fraction_count(std::size_t n, double fraction);

/// Indices of the top_fraction_count largest deltas, descending, ties to the
/// lower index.
std::vector<std::size_t> top_fraction(std::span<const double> delta, double fraction);

/// Samples with the `count` largest activations of one feature, descending,
/// ties to the lower sample index.
std::vector<std::size_t> top_activating_samples(const FeatureMatrix& fm, std::size_t feature, std::size_t count);

std::size_t overlap_count(std::span<const std::size_t> a, std::span<const std::size_t> b);

struct SharednessRanking {
  std::vector<double> delta;
  std::vector<float> s;
  std::string source_id;
  std::vector<std::string> group_g_ids;
  std::vector<std::string> group_h_ids;
  /// Per group member: rho and argmax of M against it.
  std::vector<MppcResult> g_results;
  std::vector<MppcResult> h_results;
  std::vector<std::size_t> top_indices;
  double fraction = 0.01;
};

/// Runs mppc_pair from `model` to every member of both groups and ranks the
/// generalized sharedness. Singleton groups give the pairwise score. Warns
/// when any S_i < 0.
SharednessRanking rank_sharedness(const FeatureMatrix& model, std::span<const FeatureMatrix> group_g,
                                  std::span<const FeatureMatrix> group_h, double fraction,
                                  const MppcOptions& opts = {});

/// CSV: feature_index, delta, S, rho_g_min, rho_h_max, then rho_<id> and
/// argmax_<id> for every group member. One row per feature in top order
/// when top_only, else in index order.
std::string ranking_csv(const SharednessRanking& ranking, bool top_only);

/// JSON manifest of the top features with their top-activating sample ids.
std::string ranking_manifest_json(const SharednessRanking& ranking, const FeatureMatrix& model,
                                  std::size_t samples_per_feature);

}  // namespace concept_bridge
