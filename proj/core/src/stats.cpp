#include "concept_bridge/stats.hpp"

#include <cmath>
#include <numbers>

#include <json.hpp>

#include "concept_bridge/error.hpp"
#include "concept_bridge/parallel.hpp"
#include "concept_bridge/random.hpp"

namespace concept_bridge {
namespace {
constexpr double kAsymptoticThreshold = 8.0;
}

void SignificanceQuery::validate() const {
  if (!(std::abs(x) < 1.0)) throw InvalidArgument("significance: |x| must be < 1");
  if (n_targets < 1) throw InvalidArgument("significance: N must be >= 1");
  if (n_samples < 4) throw InvalidArgument("significance: L must be >= 4");
}

double normal_tail_log10(double z) {
  if (!std::isfinite(z)) throw InvalidArgument("normal_tail_log10: z must be finite");
  if (z <= kAsymptoticThreshold) return std::log10(0.5 * std::erfc(z / std::numbers::sqrt2));
  const double z2 = z * z;
  // log phi(z) = -z^2/2 - log(sqrt(2 pi))
  const double log_pdf = -0.5 * z2 - 0.5 * std::log(2.0 * std::numbers::pi);
  const double series = 1.0 - 1.0 / z2 + 3.0 / (z2 * z2);
  return (log_pdf - std::log(z) + std::log(series)) / std::numbers::ln10;
}

double fisher_max_tail_log10(const SignificanceQuery& q) {
  q.validate();
  const double z = std::atanh(q.x) * std::sqrt(static_cast<double>(q.n_samples) - 3.0);
  const double tail_log10 = normal_tail_log10(z);
  const double tail = std::pow(10.0, tail_log10);
  const auto n = static_cast<double>(q.n_targets);
  if (n * tail < 1e-8) return std::log10(n) + tail_log10;
  // 1 - (1 - tail)^N without cancellation.
  const double p = -std::expm1(n * std::log1p(-tail));
  return std::log10(p);
}

std::string significance_json(const SignificanceQuery& q, double log10_p) {
  const nlohmann::json j = {{"x", q.x},
                            {"N", q.n_targets},
                            {"L", q.n_samples},
                            {"log10_p", log10_p},
                            {"method", "fisher-max-order-statistic"}};
  return j.dump(2) + "\n";
}

FeatureMatrix shuffle_columns(const FeatureMatrix& fm, std::uint64_t seed) {
  FeatureMatrix out = fm;
  const std::size_t n = fm.samples();
  const std::size_t f = fm.features();
  parallel_for(f, [&](std::size_t j) {
    const auto perm = seeded_permutation(n, derive_seed(seed, j));
    for (std::size_t r = 0; r < n; ++r) out.data(r, j) = fm.data(perm[r], j);
  });
  return out;
}

MppcResult shuffle_baseline(const FeatureMatrix& src, const FeatureMatrix& tgt, std::uint64_t seed,
                            const MppcOptions& opts) {
  if (src.samples() != tgt.samples()) {
    throw InvalidArgument("shuffle_baseline: feature matrices must be aligned on the same dataset");
  }
  return mppc_pair(src, shuffle_columns(tgt, seed), opts);
}

}  // namespace concept_bridge
