#include "concept_bridge/reports.hpp"

#include <sstream>

#include <json.hpp>

#include "concept_bridge/error.hpp"
#include "format.hpp"

namespace concept_bridge {
namespace {

using detail::csv_field;
using detail::full_precision;
using nlohmann::json;

json config_json(const ReportConfig& cfg) {
  return {{"tile_rows", cfg.options.tiles.tile_rows},
          {"tile_cols", cfg.options.tiles.tile_cols},
          {"inner_block", cfg.options.tiles.inner_block},
          {"target_block", cfg.options.target_block},
          {"sigma_tol", cfg.options.sigma_tol},
          {"s_mode", cfg.s_mode},
          {"seed", cfg.seed}};
}

json entry_json(const MppcResult& r) {
  return {{"source", r.source_id},
          {"target", r.target_id},
          {"mppc", r.mppc},
          {"wmppc", r.wmppc},
          {"dead_source_count", r.dead_source_count},
          {"n_samples", r.n_samples},
          {"n_source_features", r.rho.size()},
          {"s_mode", to_string(r.s_mode)}};
}

}  // namespace

WmppcTable wmppc_table(std::span<const FeatureMatrix> sources, std::span<const FeatureMatrix> targets,
                       const MppcOptions& opts) {
  if (sources.empty() || targets.empty()) throw InvalidArgument("wmppc_table: empty model list");
  WmppcTable table;
  for (const auto& s : sources) table.source_ids.push_back(s.id());
  for (const auto& t : targets) table.target_ids.push_back(t.id());
  table.cells.reserve(sources.size() * targets.size());
  for (const auto& s : sources) {
    for (const auto& t : targets) table.cells.push_back(mppc_pair(s, t, opts));
  }
  return table;
}

std::string wmppc_table_csv(const WmppcTable& table) {
  std::ostringstream os;
  os << "source\\target";
  for (const auto& id : table.target_ids) os << ',' << csv_field(id);
  os << '\n';
  for (std::size_t s = 0; s < table.source_ids.size(); ++s) {
    os << csv_field(table.source_ids[s]);
    for (std::size_t t = 0; t < table.target_ids.size(); ++t) os << ',' << full_precision(table.at(s, t).wmppc);
    os << '\n';
  }
  return os.str();
}

std::string wmppc_table_json(const WmppcTable& table, const ReportConfig& cfg) {
  json matrix = json::array();
  json entries = json::array();
  for (std::size_t s = 0; s < table.source_ids.size(); ++s) {
    json row = json::array();
    for (std::size_t t = 0; t < table.target_ids.size(); ++t) {
      row.push_back(table.at(s, t).wmppc);
      entries.push_back(entry_json(table.at(s, t)));
    }
    matrix.push_back(std::move(row));
  }
  const json j = {{"config", config_json(cfg)},
                  {"source_ids", table.source_ids},
                  {"target_ids", table.target_ids},
                  {"wmppc", matrix},
                  {"entries", entries}};
  return j.dump(2) + "\n";
}

std::string mppc_result_json(const MppcResult& result, const ReportConfig& cfg) {
  json j = entry_json(result);
  j["config"] = config_json(cfg);
  return j.dump(2) + "\n";
}

std::string mppc_rho_csv(const MppcResult& result, std::span<const float> s) {
  if (s.size() != result.rho.size()) throw InvalidArgument("mppc_rho_csv: S length != rho length");
  std::ostringstream os;
  os << "feature_index,rho,argmax,S\n";
  for (std::size_t i = 0; i < result.rho.size(); ++i) {
    os << i << ',' << full_precision(result.rho[i]) << ',' << result.argmax[i] << ',' << full_precision(s[i])
       << '\n';
  }
  return os.str();
}

std::string layer_grid_csv(const LayerGrid& grid) {
  std::ostringstream os;
  os << "source_layer\\target_layer";
  for (auto l : grid.target_layers) os << ',' << l;
  os << '\n';
  for (std::size_t a = 0; a < grid.source_layers.size(); ++a) {
    os << grid.source_layers[a];
    for (std::size_t b = 0; b < grid.target_layers.size(); ++b) os << ',' << full_precision(grid.grid(a, b));
    os << '\n';
  }
  return os.str();
}

}  // namespace concept_bridge
