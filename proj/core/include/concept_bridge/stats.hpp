#pragma once

// Significance of a max-pairwise correlation under the null of no linear
// relationship. With z = artanh(x) sqrt(L - 3) ~ N(0, 1) per pair,
//   P(max over N targets > x) = 1 - Phi(z)^N,
// evaluated in log space because it reaches 1e-200 and below.

#include <cstddef>
#include <cstdint>
#include <string>

#include "concept_bridge/feature_store.hpp"
#include "concept_bridge/similarity.hpp"

namespace concept_bridge {

struct SignificanceQuery {
  double x = 0.0;               // correlation threshold, |x| < 1
  std::uint64_t n_targets = 1;  // N
  std::uint64_t n_samples = 4;  // L

  void validate() const;
};

/// log10(1 - Phi(z)). erfc for z <= 8, the asymptotic series
/// phi(z)/z (1 - 1/z^2 + 3/z^4) above.
double normal_tail_log10(double z);

/// log10 P(rho > x) for the max over n_targets null correlations.
double fisher_max_tail_log10(const SignificanceQuery& q);

/// {"x", "N", "L", "log10_p", "method": "fisher-max-order-statistic"}
std::string significance_json(const SignificanceQuery& q, double log10_p);

/// Independently permutes the rows of every target column (column j uses
/// derive_seed(seed, j)), preserving each feature's marginal distribution.
FeatureMatrix shuffle_columns(const FeatureMatrix& fm, std::uint64_t seed);

/// mppc_pair(src, shuffle_columns(tgt, seed)).
MppcResult shuffle_baseline(const FeatureMatrix& src, const FeatureMatrix& tgt, std::uint64_t seed,
                            const MppcOptions& opts = {});

}  // namespace concept_bridge
