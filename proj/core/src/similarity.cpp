#include "concept_bridge/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "concept_bridge/error.hpp"
#include "concept_bridge/log.hpp"

namespace concept_bridge {
namespace {

void check_aligned(const FeatureMatrix& src, const FeatureMatrix& tgt) {
  if (src.samples() != tgt.samples()) {
    throw InvalidArgument("feature matrices must be aligned on the same dataset: " + src.id() + " has " +
                          std::to_string(src.samples()) + " samples, " + tgt.id() + " has " +
                          std::to_string(tgt.samples()));
  }
  if (src.s_vector.size() != src.features()) {
    throw InvalidArgument("mppc_pair: " + src.id() + " s_vector length != feature count");
  }
}

MppcResult mppc_standardized(const FeatureMatrix& src, const StandardizedColumns& src_std, const FeatureMatrix& tgt,
                             const StandardizedColumns& tgt_std, const MppcOptions& opts) {
  RowMax best = max_correlation(src_std.matrix, tgt_std.matrix, opts);
  MppcResult out;
  out.n_samples = src.samples();
  out.source_id = src.id();
  out.target_id = tgt.id();
  out.s_mode = src.s_mode;
  out.dead_source_count = src_std.stats.constant_count();
  out.rho = std::move(best.values);
  out.argmax = std::move(best.argmax);

  double total = 0.0;
  for (float r : out.rho) total += r;
  out.mppc = total / static_cast<double>(out.rho.size());
  out.wmppc = weighted_mean(src.s_vector, out.rho);
  return out;
}

}  // namespace

RowMax max_correlation(const DenseMatrix& xs_std, const DenseMatrix& ys_std, const MppcOptions& opts) {
  if (opts.target_block == 0) throw InvalidArgument("max_correlation: target_block must be positive");
  if (xs_std.cols() == 0 || ys_std.cols() == 0) throw InvalidArgument("max_correlation: empty feature set");
  RowMax best;
  for (std::size_t c0 = 0; c0 < ys_std.cols(); c0 += opts.target_block) {
    const std::size_t c1 = std::min(ys_std.cols(), c0 + opts.target_block);
    const DenseMatrix block = blocked_correlation_range(xs_std, ys_std, c0, c1, opts.tiles);
    RowMax local = rowwise_max(block);
    if (c0 == 0) {
      best = std::move(local);
      continue;
    }
    for (std::size_t i = 0; i < local.values.size(); ++i) {
      if (local.values[i] > best.values[i]) {
        best.values[i] = local.values[i];
        best.argmax[i] = c0 + local.argmax[i];
      }
    }
  }
  return best;
}

double weighted_mean(std::span<const float> s, std::span<const float> rho) {
  if (s.size() != rho.size()) throw InvalidArgument("weighted_mean: S and rho lengths differ");
  double mass = 0.0;
  double abs_mass = 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    mass += s[i];
    abs_mass += std::abs(static_cast<double>(s[i]));
    acc += static_cast<double>(s[i]) * rho[i];
  }
  if (abs_mass < 1e-12) throw DataError("wMPPC: degenerate weights, sum |S_i| < 1e-12");
  if (mass <= 0.0) {
    warn("wMPPC: sum of S_i is " + std::to_string(mass) +
         " <= 0; raw-mode weights are signed, consider s_mode relu or post_topk");
    throw DataError("wMPPC: non-positive total weight sum S_i = " + std::to_string(mass));
  }
  return acc / mass;
}

MppcResult mppc_pair(const FeatureMatrix& src, const FeatureMatrix& tgt, const MppcOptions& opts) {
  check_aligned(src, tgt);
  const auto src_std = standardize_columns(src.data, opts.sigma_tol);
  const auto tgt_std = standardize_columns(tgt.data, opts.sigma_tol);
  return mppc_standardized(src, src_std, tgt, tgt_std, opts);
}

double s_rho_correlation(std::span<const float> s, std::span<const float> rho) {
  if (s.size() != rho.size()) throw InvalidArgument("s_rho_correlation: lengths differ");
  if (s.size() < 2) throw InvalidArgument("s_rho_correlation: need at least 2 entries");
  const auto n = static_cast<double>(s.size());
  double ms = 0.0, mr = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    ms += s[i];
    mr += rho[i];
  }
  ms /= n;
  mr /= n;
  double cov = 0.0, vs = 0.0, vr = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double ds = s[i] - ms;
    const double dr = rho[i] - mr;
    cov += ds * dr;
    vs += ds * ds;
    vr += dr * dr;
  }
  if (vs <= 0.0 || vr <= 0.0) return 0.0;
  return cov / std::sqrt(vs * vr);
}

FeatureMatrix concat_layers(std::span<const FeatureMatrix> fms) {
  if (fms.empty()) throw InvalidArgument("concat_layers: no feature matrices");
  const FeatureMatrix& first = fms.front();
  std::size_t total_cols = 0;
  std::set<std::int64_t> seen;
  for (const auto& fm : fms) {
    if (fm.samples() != first.samples()) {
      throw InvalidArgument("concat_layers: " + fm.id() + " has " + std::to_string(fm.samples()) +
                            " samples, expected " + std::to_string(first.samples()));
    }
    if (fm.model_id != first.model_id) {
      throw InvalidArgument("concat_layers: mixes models '" + first.model_id + "' and '" + fm.model_id + "'");
    }
    if (fm.s_mode != first.s_mode) throw InvalidArgument("concat_layers: inputs use different s_mode");
    if (fm.s_vector.size() != fm.features()) throw InvalidArgument("concat_layers: s_vector length != F");
    if (fm.column_layers.empty()) {
      if (!seen.insert(fm.layer).second) {
        throw InvalidArgument("concat_layers: layer " + std::to_string(fm.layer) + " appears twice");
      }
    } else {
      for (auto l : std::set<std::int64_t>(fm.column_layers.begin(), fm.column_layers.end())) {
        if (!seen.insert(l).second) {
          throw InvalidArgument("concat_layers: layer " + std::to_string(l) + " appears twice");
        }
      }
    }
    total_cols += fm.features();
  }

  FeatureMatrix out;
  out.model_id = first.model_id;
  out.layer = first.layer;
  out.dataset_id = first.dataset_id;
  out.s_mode = first.s_mode;
  out.k = first.k;
  out.data = DenseMatrix(first.samples(), total_cols);
  out.s_vector.reserve(total_cols);
  out.column_layers.reserve(total_cols);

  std::size_t offset = 0;
  for (const auto& fm : fms) {
    for (std::size_t r = 0; r < fm.samples(); ++r) {
      std::ranges::copy(fm.data.row(r), out.data.row(r).begin() + static_cast<std::ptrdiff_t>(offset));
    }
    out.s_vector.insert(out.s_vector.end(), fm.s_vector.begin(), fm.s_vector.end());
    if (fm.column_layers.empty()) {
      out.column_layers.insert(out.column_layers.end(), fm.features(), fm.layer);
    } else {
      out.column_layers.insert(out.column_layers.end(), fm.column_layers.begin(), fm.column_layers.end());
    }
    if (!out.sae_checkpoint_hash.empty()) out.sae_checkpoint_hash += "+";
    out.sae_checkpoint_hash += fm.sae_checkpoint_hash;
    offset += fm.features();
  }
  return out;
}

LayerGrid layerwise_grid(std::span<const FeatureMatrix> src_layers, std::span<const FeatureMatrix> tgt_layers,
                         const MppcOptions& opts) {
  if (src_layers.empty() || tgt_layers.empty()) throw InvalidArgument("layerwise_grid: empty layer list");
  LayerGrid out;
  out.source_model = src_layers.front().model_id;
  out.target_model = tgt_layers.front().model_id;
  out.grid = DenseMatrix(src_layers.size(), tgt_layers.size());

  std::vector<StandardizedColumns> tgt_std;
  tgt_std.reserve(tgt_layers.size());
  for (const auto& t : tgt_layers) {
    out.target_layers.push_back(t.layer);
    tgt_std.push_back(standardize_columns(t.data, opts.sigma_tol));
  }

  for (std::size_t a = 0; a < src_layers.size(); ++a) {
    const FeatureMatrix& src = src_layers[a];
    out.source_layers.push_back(src.layer);
    const auto src_std = standardize_columns(src.data, opts.sigma_tol);
    for (std::size_t b = 0; b < tgt_layers.size(); ++b) {
      try {
        check_aligned(src, tgt_layers[b]);
        const MppcResult cell = mppc_standardized(src, src_std, tgt_layers[b], tgt_std[b], opts);
        out.grid(a, b) = static_cast<float>(cell.wmppc);
      } catch (const InvalidArgument& e) {
        throw InvalidArgument("layer grid cell (source layer " + std::to_string(src.layer) + ", target layer " +
                              std::to_string(tgt_layers[b].layer) + "): " + e.what());
      } catch (const DataError& e) {
        throw DataError("layer grid cell (source layer " + std::to_string(src.layer) + ", target layer " +
                        std::to_string(tgt_layers[b].layer) + "): " + e.what());
      }
    }
  }
  return out;
}

std::uint64_t estimate_flops(std::uint64_t f_total_src, std::uint64_t f_total_tgt, std::uint64_t n_samples) {
  if (f_total_src == 0 || f_total_tgt == 0 || n_samples == 0) {
    throw InvalidArgument("estimate_flops: feature counts and sample count must be positive");
  }
  using u128 = unsigned __int128;
  constexpr u128 kMax = static_cast<u128>(UINT64_MAX);
  u128 v = static_cast<u128>(f_total_src) * f_total_tgt;
  if (v > kMax) throw InvalidArgument("estimate_flops: result overflows 64 bits");
  v *= n_samples;
  if (v > kMax / 2) throw InvalidArgument("estimate_flops: result overflows 64 bits");
  return static_cast<std::uint64_t>(v * 2);
}

}  // namespace concept_bridge
