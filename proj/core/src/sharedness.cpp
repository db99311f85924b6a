#include "concept_bridge/sharedness.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "concept_bridge/error.hpp"
#include "concept_bridge/log.hpp"
#include "format.hpp"

namespace concept_bridge {
namespace {

std::vector<std::size_t> ranked_prefix(std::size_t n, std::size_t count, auto greater) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(count), idx.end(), greater);
  idx.resize(count);
  return idx;
}

void check_lengths(std::span<const float> s, std::span<const float> rho, const char* what) {
  if (s.size() != rho.size()) {
    throw InvalidArgument(std::string(what) + ": length mismatch (" + std::to_string(s.size()) + " vs " +
                          std::to_string(rho.size()) + ")");
  }
}

}  // namespace

std::vector<double> comparative_sharedness(std::span<const float> s, std::span<const float> rho_a,
                                           std::span<const float> rho_b) {
  check_lengths(s, rho_a, "comparative_sharedness");
  check_lengths(s, rho_b, "comparative_sharedness");
  std::vector<double> delta(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double a = rho_a[i];
    const double b = rho_b[i];
    delta[i] = static_cast<double>(s[i]) * (a - b) * (a + b);
  }
  return delta;
}

std::vector<double> generalized_cs(std::span<const float> s, std::span<const std::vector<float>> rhos_g,
                                   std::span<const std::vector<float>> rhos_h) {
  if (rhos_g.empty() || rhos_h.empty()) throw InvalidArgument("generalized_cs: both groups must be non-empty");
  for (const auto& r : rhos_g) check_lengths(s, r, "generalized_cs");
  for (const auto& r : rhos_h) check_lengths(s, r, "generalized_cs");
  std::vector<double> delta(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    double g_min = rhos_g.front()[i];
    for (const auto& r : rhos_g) g_min = std::min<double>(g_min, r[i]);
    double h_max = rhos_h.front()[i];
    for (const auto& r : rhos_h) h_max = std::max<double>(h_max, r[i]);
    delta[i] = static_cast<double>(s[i]) * (g_min * g_min - h_max * h_max);
  }
  return delta;
}

std::size_t top_fraction_count(std::size_t n, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw InvalidArgument("top_fraction: fraction must lie in (0, 1]");
  const auto count = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n)));
  return std::clamp<std::size_t>(count, 1, n);
}

std::vector<std::size_t> top_fraction(std::span<const double> delta, double fraction) {
  if (delta.empty()) throw InvalidArgument("top_fraction: empty delta");
  const std::size_t count = top_fraction_count(delta.size(), fraction);
  return ranked_prefix(delta.size(), count, [&](std::size_t a, std::size_t b) {
    return delta[a] > delta[b] || (delta[a] == delta[b] && a < b);
  });
}

std::vector<std::size_t> top_activating_samples(const FeatureMatrix& fm, std::size_t feature, std::size_t count) {
  if (feature >= fm.features()) {
    throw InvalidArgument("top_activating_samples: feature " + std::to_string(feature) + " out of range [0, " +
                          std::to_string(fm.features()) + ")");
  }
  if (count > fm.samples()) throw InvalidArgument("top_activating_samples: count exceeds sample count");
  const DenseMatrix& m = fm.data;
  return ranked_prefix(fm.samples(), count, [&](std::size_t a, std::size_t b) {
    return m(a, feature) > m(b, feature) || (m(a, feature) == m(b, feature) && a < b);
  });
}

std::size_t overlap_count(std::span<const std::size_t> a, std::span<const std::size_t> b) {
  const std::unordered_set<std::size_t> lookup(a.begin(), a.end());
  std::unordered_set<std::size_t> counted;
  for (std::size_t v : b) {
    if (lookup.contains(v)) counted.insert(v);
  }
  return counted.size();
}

SharednessRanking rank_sharedness(const FeatureMatrix& model, std::span<const FeatureMatrix> group_g,
                                  std::span<const FeatureMatrix> group_h, double fraction,
                                  const MppcOptions& opts) {
  if (group_g.empty() || group_h.empty()) throw InvalidArgument("rank_sharedness: both groups must be non-empty");
  SharednessRanking out;
  out.source_id = model.id();
  out.fraction = fraction;
  out.s = model.s_vector;
  if (std::ranges::any_of(out.s, [](float v) { return v < 0.0f; })) {
    warn("sharedness: " + model.id() + " has negative S_i (s_mode " + std::string(to_string(model.s_mode)) +
         "); their deltas change sign");
  }

  std::vector<std::vector<float>> rhos_g, rhos_h;
  for (const auto& g : group_g) {
    out.g_results.push_back(mppc_pair(model, g, opts));
    out.group_g_ids.push_back(g.id());
    rhos_g.push_back(out.g_results.back().rho);
  }
  for (const auto& h : group_h) {
    out.h_results.push_back(mppc_pair(model, h, opts));
    out.group_h_ids.push_back(h.id());
    rhos_h.push_back(out.h_results.back().rho);
  }
  out.delta = generalized_cs(out.s, rhos_g, rhos_h);
  out.top_indices = top_fraction(out.delta, fraction);
  return out;
}

std::string ranking_csv(const SharednessRanking& ranking, bool top_only) {
  using detail::csv_field;
  using detail::full_precision;
  std::ostringstream os;
  os << "feature_index,delta,S,rho_g_min,rho_h_max";
  for (const auto& id : ranking.group_g_ids) os << ',' << csv_field("rho_" + id) << ',' << csv_field("argmax_" + id);
  for (const auto& id : ranking.group_h_ids) os << ',' << csv_field("rho_" + id) << ',' << csv_field("argmax_" + id);
  os << '\n';

  std::vector<std::size_t> order;
  if (top_only) {
    order = ranking.top_indices;
  } else {
    order.resize(ranking.delta.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
  }
  for (std::size_t i : order) {
    float g_min = ranking.g_results.front().rho[i];
    for (const auto& r : ranking.g_results) g_min = std::min(g_min, r.rho[i]);
    float h_max = ranking.h_results.front().rho[i];
    for (const auto& r : ranking.h_results) h_max = std::max(h_max, r.rho[i]);
    os << i << ',' << full_precision(ranking.delta[i]) << ',' << full_precision(ranking.s[i]) << ','
       << full_precision(g_min) << ',' << full_precision(h_max);
    for (const auto& r : ranking.g_results) os << ',' << full_precision(r.rho[i]) << ',' << r.argmax[i];
    for (const auto& r : ranking.h_results) os << ',' << full_precision(r.rho[i]) << ',' << r.argmax[i];
    os << '\n';
  }
  return os.str();
}

std::string ranking_manifest_json(const SharednessRanking& ranking, const FeatureMatrix& model,
                                  std::size_t samples_per_feature) {
  nlohmann::json top = nlohmann::json::array();
  const std::size_t n = std::min(samples_per_feature, model.samples());
  for (std::size_t rank = 0; rank < ranking.top_indices.size(); ++rank) {
    const std::size_t f = ranking.top_indices[rank];
    top.push_back({{"rank", rank},
                   {"feature", f},
                   {"delta", ranking.delta[f]},
                   {"S", ranking.s[f]},
                   {"top_samples", top_activating_samples(model, f, n)}});
  }
  const nlohmann::json manifest = {{"source", ranking.source_id},
                                   {"dataset_id", model.dataset_id},
                                   {"group_g", ranking.group_g_ids},
                                   {"group_h", ranking.group_h_ids},
                                   {"fraction", ranking.fraction},
                                   {"n_features", ranking.delta.size()},
                                   {"top_count", ranking.top_indices.size()},
                                   {"top_features", top}};
  return manifest.dump(2) + "\n";
}

}  // namespace concept_bridge
