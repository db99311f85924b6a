#pragma once

// Report writers for the similarity results. CSV and JSON carry full
// round-trip precision so the two can be cross-checked exactly.

#include <string>
#include <vector>

#include "concept_bridge/similarity.hpp"

namespace concept_bridge {

/// Echoed into JSON reports so a run can be reproduced.
struct ReportConfig {
  MppcOptions options;
  std::string s_mode;
  std::uint64_t seed = 0;
};

/// All (source, target) pairs of a model set; cells are row-major
/// (sources x targets).
struct WmppcTable {
  std::vector<std::string> source_ids;
  std::vector<std::string> target_ids;
  std::vector<MppcResult> cells;

  const MppcResult& at(std::size_t src, std::size_t tgt) const { return cells[src * target_ids.size() + tgt]; }
};

/// Computes every (source, target) pair with mppc_pair.
WmppcTable wmppc_table(std::span<const FeatureMatrix> sources, std::span<const FeatureMatrix> targets,
                       const MppcOptions& opts = {});

/// Header "source\target,<target ids...>", one row of wMPPC values per source.
std::string wmppc_table_csv(const WmppcTable& table);
/// {"config": ..., "source_ids": [...], "target_ids": [...], "wmppc": [[...]],
///  "entries": [{source, target, mppc, wmppc, dead_source_count, n_samples}]}
std::string wmppc_table_json(const WmppcTable& table, const ReportConfig& cfg);

/// Summary JSON of one pair (no per-feature vectors).
std::string mppc_result_json(const MppcResult& result, const ReportConfig& cfg);
/// feature_index,rho,argmax,S
std::string mppc_rho_csv(const MppcResult& result, std::span<const float> s);

/// Heatmap-ready grid: header "source_layer\target_layer,<layers...>".
std::string layer_grid_csv(const LayerGrid& grid);

}  // namespace concept_bridge
