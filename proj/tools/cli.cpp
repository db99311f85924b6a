#include "cli.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "concept_bridge/checkpoint.hpp"
#include "concept_bridge/error.hpp"
#include "concept_bridge/feature_store.hpp"
#include "concept_bridge/parallel.hpp"
#include "concept_bridge/reports.hpp"
#include "concept_bridge/sae.hpp"
#include "concept_bridge/sharedness.hpp"
#include "concept_bridge/similarity.hpp"
#include "concept_bridge/stats.hpp"
#include "concept_bridge/version.hpp"
#include "config_file.hpp"

namespace concept_bridge::cli {
namespace {

constexpr const char* kThreadsEnv = "CONCEPT_BRIDGE_THREADS";

struct RunConfig {
  unsigned threads = 0;
  std::string config_path;
  std::uint64_t seed = 0;
  TileConfig tiles{};
  std::size_t target_block = 4096;
  double sigma_tol = kDefaultSigmaTol;
  TrainConfig train{};
  std::string s_mode = "raw";

  std::string acts, out, sae, src, tgt, json, csv, rho_csv, manifest, model, a, b;
  std::vector<std::string> src_list, tgt_list, group_g, group_h, files;
  double fraction = 0.01;
  std::size_t top_samples = 9;
  bool all_rows = false;
  bool all_layers = false;

  double x = 0.0;
  std::uint64_t n_targets = 0;
  std::uint64_t n_samples = 0;
  std::uint64_t src_features = 0;
  std::uint64_t tgt_features = 0;
  std::uint64_t n = 0;

  MppcOptions mppc_options() const { return {tiles, target_block, sigma_tol}; }
  ReportConfig report_config() const { return {mppc_options(), s_mode, seed}; }
};

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::string sig6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot open '" + path + "' for writing");
  f << text;
  if (!f) throw DataError("short write to '" + path + "'");
}

std::vector<FeatureMatrix> read_all_features(const std::vector<std::string>& paths) {
  std::vector<FeatureMatrix> out;
  out.reserve(paths.size());
  for (const auto& p : paths) out.push_back(read_features(p));
  return out;
}

// Groups matrices by model_id (first-seen order) and concatenates each
// model's layers in ascending layer order.
std::vector<FeatureMatrix> concat_by_model(std::vector<FeatureMatrix> fms) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<FeatureMatrix>> groups;
  for (auto& fm : fms) {
    if (!groups.contains(fm.model_id)) order.push_back(fm.model_id);
    groups[fm.model_id].push_back(std::move(fm));
  }
  std::vector<FeatureMatrix> out;
  for (const auto& id : order) {
    auto& layers = groups[id];
    std::ranges::stable_sort(layers, {}, &FeatureMatrix::layer);
    out.push_back(concat_layers(layers));
  }
  return out;
}

void add_threads(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("--threads", cfg.threads, "Worker threads (default: $" + std::string(kThreadsEnv) +
                                                " or all cores); outputs do not depend on it");
  sub->add_option("--config", cfg.config_path, "key = value file; command-line flags take precedence");
}

void add_tiles(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("--tile-rows", cfg.tiles.tile_rows, "Output tile rows")->capture_default_str();
  sub->add_option("--tile-cols", cfg.tiles.tile_cols, "Output tile columns")->capture_default_str();
  sub->add_option("--inner-block", cfg.tiles.inner_block, "Shared-dimension block")->capture_default_str();
  sub->add_option("--target-block", cfg.target_block, "Target columns per streaming pass")->capture_default_str();
  sub->add_option("--sigma-tol", cfg.sigma_tol, "Columns with std below this are constant")->capture_default_str();
}

// ---- subcommands -----------------------------------------------------------

int cmd_train(const RunConfig& cfg, std::ostream& out) {
  const ActivationMatrix acts = read_activations(cfg.acts);
  TrainConfig tc = cfg.train;
  tc.seed = cfg.seed;
  tc.tiles = cfg.tiles;
  const TrainResult result = train_sae(acts, tc);
  save_checkpoint(cfg.out, {result.params, tc});

  out << "trained " << acts.model_id << " layer " << acts.layer << ": " << acts.data.rows() << " rows, D="
      << result.params.d_in << ", F=" << result.params.n_features << ", k=" << result.params.k << '\n';
  for (std::size_t e = 0; e < result.report.epoch_mse.size(); ++e) {
    out << "epoch " << (e + 1) << " mse " << sig6(result.report.epoch_mse[e]) << " ("
        << sig6(result.report.epoch_seconds[e]) << " s)\n";
  }
  out << "dead latents " << result.report.dead_latents << '\n';
  out << "wrote " << cfg.out << '\n';

  if (!cfg.json.empty()) {
    const nlohmann::json j = {{"checkpoint_hash", checkpoint_hash(result.params)},
                              {"epoch_mse", result.report.epoch_mse},
                              {"steps", result.report.batch_mse.size()},
                              {"dead_latents", result.report.dead_latents},
                              {"seed", tc.seed},
                              {"config",
                               {{"learning_rate", tc.learning_rate},
                                {"beta1", tc.beta1},
                                {"beta2", tc.beta2},
                                {"adam_epsilon", tc.adam_epsilon},
                                {"batch_size", tc.batch_size},
                                {"epochs", tc.epochs},
                                {"expansion_factor", tc.expansion_factor},
                                {"k", tc.k}}}};
    write_text(cfg.json, j.dump(2) + "\n");
  }
  return kExitOk;
}

int cmd_features(const RunConfig& cfg, std::ostream& out) {
  const Checkpoint ckpt = load_checkpoint(cfg.sae);
  const ActivationMatrix acts = read_activations(cfg.acts);
  const FeatureMatrix fm = extract_features(ckpt.params, acts, parse_s_mode(cfg.s_mode), cfg.tiles);
  write_features(cfg.out, fm);
  out << "features " << fm.id() << ": N=" << fm.samples() << ", F=" << fm.features() << ", s_mode "
      << to_string(fm.s_mode) << '\n';
  double mean = 0.0;
  for (float s : fm.s_vector) mean += s;
  if (mean != 0.0) {
    const SDiagnostics d = s_diagnostics(fm.s_vector);
    out << "S mean " << sig6(d.mean) << " std " << sig6(d.std) << " cv " << sig6(d.coefficient_of_variation)
        << '\n';
  }
  out << "wrote " << cfg.out << '\n';
  return kExitOk;
}

void print_pair(std::ostream& out, const MppcResult& r) {
  out << "source=" << r.source_id << " target=" << r.target_id << '\n'
      << "mppc=" << fixed6(r.mppc) << '\n'
      << "wmppc=" << fixed6(r.wmppc) << '\n'
      << "dead_source=" << r.dead_source_count << '\n'
      << "n_samples=" << r.n_samples << '\n';
}

int cmd_wmppc(const RunConfig& cfg, std::ostream& out) {
  const FeatureMatrix src = read_features(cfg.src);
  const FeatureMatrix tgt = read_features(cfg.tgt);
  const MppcResult r = mppc_pair(src, tgt, cfg.mppc_options());
  print_pair(out, r);
  out << "s_rho_correlation=" << sig6(s_rho_correlation(src.s_vector, r.rho)) << '\n';
  ReportConfig rc = cfg.report_config();
  rc.s_mode = std::string(to_string(src.s_mode));
  if (!cfg.json.empty()) write_text(cfg.json, mppc_result_json(r, rc));
  if (!cfg.rho_csv.empty()) write_text(cfg.rho_csv, mppc_rho_csv(r, src.s_vector));
  return kExitOk;
}

int cmd_grid(const RunConfig& cfg, std::ostream& out) {
  const auto src = read_all_features(cfg.src_list);
  const auto tgt = read_all_features(cfg.tgt_list);
  const LayerGrid grid = layerwise_grid(src, tgt, cfg.mppc_options());
  const std::string csv = layer_grid_csv(grid);
  if (!cfg.out.empty()) write_text(cfg.out, csv);
  out << "wMPPC grid " << grid.source_model << " -> " << grid.target_model << '\n';
  for (std::size_t a = 0; a < grid.source_layers.size(); ++a) {
    out << "layer " << grid.source_layers[a] << ':';
    for (std::size_t b = 0; b < grid.target_layers.size(); ++b) out << ' ' << fixed6(grid.grid(a, b));
    out << '\n';
  }
  return kExitOk;
}

int emit_ranking(const RunConfig& cfg, const FeatureMatrix& model, const SharednessRanking& ranking,
                 std::ostream& out) {
  if (!cfg.out.empty()) write_text(cfg.out, ranking_csv(ranking, !cfg.all_rows));
  if (!cfg.manifest.empty()) write_text(cfg.manifest, ranking_manifest_json(ranking, model, cfg.top_samples));
  out << "source " << ranking.source_id << ", " << ranking.top_indices.size() << " of " << ranking.delta.size()
      << " features in the top " << sig6(ranking.fraction * 100.0) << "%\n";
  const std::size_t shown = std::min<std::size_t>(ranking.top_indices.size(), 10);
  for (std::size_t i = 0; i < shown; ++i) {
    const std::size_t f = ranking.top_indices[i];
    out << "  #" << (i + 1) << " feature " << f << " delta " << sig6(ranking.delta[f]) << '\n';
  }
  return kExitOk;
}

int cmd_sharedness(const RunConfig& cfg, std::ostream& out) {
  const FeatureMatrix model = read_features(cfg.model);
  const std::vector<FeatureMatrix> g{read_features(cfg.a)};
  const std::vector<FeatureMatrix> h{read_features(cfg.b)};
  return emit_ranking(cfg, model, rank_sharedness(model, g, h, cfg.fraction, cfg.mppc_options()), out);
}

int cmd_gcs(const RunConfig& cfg, std::ostream& out) {
  const FeatureMatrix model = read_features(cfg.model);
  const auto g = read_all_features(cfg.group_g);
  const auto h = read_all_features(cfg.group_h);
  return emit_ranking(cfg, model, rank_sharedness(model, g, h, cfg.fraction, cfg.mppc_options()), out);
}

int cmd_significance(const RunConfig& cfg, std::ostream& out) {
  const SignificanceQuery q{cfg.x, cfg.n_targets, cfg.n_samples};
  const double lp = fisher_max_tail_log10(q);
  out << "P(rho > " << sig6(q.x) << " | N=" << q.n_targets << ", L=" << q.n_samples << ") = 10^" << sig6(lp)
      << '\n'
      << "log10_p=" << sig6(lp) << '\n';
  if (!cfg.json.empty()) write_text(cfg.json, significance_json(q, lp));
  return kExitOk;
}

int cmd_shuffle(const RunConfig& cfg, std::ostream& out) {
  const FeatureMatrix src = read_features(cfg.src);
  const FeatureMatrix tgt = read_features(cfg.tgt);
  const MppcResult unshuffled = mppc_pair(src, tgt, cfg.mppc_options());
  const MppcResult shuffled = shuffle_baseline(src, tgt, cfg.seed, cfg.mppc_options());
  out << "unshuffled mppc=" << fixed6(unshuffled.mppc) << " wmppc=" << fixed6(unshuffled.wmppc) << '\n'
      << "shuffled   mppc=" << fixed6(shuffled.mppc) << " wmppc=" << fixed6(shuffled.wmppc) << '\n';
  if (!cfg.json.empty()) {
    nlohmann::json j = {{"source", src.id()},
                        {"target", tgt.id()},
                        {"seed", cfg.seed},
                        {"n_samples", src.samples()},
                        {"s_mode", to_string(src.s_mode)},
                        {"unshuffled", {{"mppc", unshuffled.mppc}, {"wmppc", unshuffled.wmppc}}},
                        {"shuffled", {{"mppc", shuffled.mppc}, {"wmppc", shuffled.wmppc}}}};
    write_text(cfg.json, j.dump(2) + "\n");
  }
  return kExitOk;
}

int cmd_flops(const RunConfig& cfg, std::ostream& out) {
  const std::uint64_t flops = estimate_flops(cfg.src_features, cfg.tgt_features, cfg.n);
  char sci[64];
  std::snprintf(sci, sizeof(sci), "%.5e", static_cast<double>(flops));
  out << "flops=" << flops << '\n' << "flops_sci=" << sci << '\n';
  return kExitOk;
}

int cmd_report(const RunConfig& cfg, std::ostream& out) {
  std::vector<FeatureMatrix> src = read_all_features(cfg.src_list);
  std::vector<FeatureMatrix> tgt = cfg.tgt_list.empty() ? src : read_all_features(cfg.tgt_list);
  if (cfg.all_layers) {
    src = concat_by_model(std::move(src));
    tgt = concat_by_model(std::move(tgt));
  }
  const WmppcTable table = wmppc_table(src, tgt, cfg.mppc_options());
  ReportConfig rc = cfg.report_config();
  rc.s_mode = std::string(to_string(src.front().s_mode));
  if (!cfg.csv.empty()) write_text(cfg.csv, wmppc_table_csv(table));
  if (!cfg.json.empty()) write_text(cfg.json, wmppc_table_json(table, rc));

  out << "wMPPC" << (cfg.all_layers ? " (all layers)" : "") << ", rows = source, columns = target\n";
  for (std::size_t s = 0; s < table.source_ids.size(); ++s) {
    out << table.source_ids[s] << ':';
    for (std::size_t t = 0; t < table.target_ids.size(); ++t) out << ' ' << fixed6(table.at(s, t).wmppc);
    out << '\n';
  }
  return kExitOk;
}

int cmd_inspect(const RunConfig& cfg, std::ostream& out) {
  for (const auto& path : cfg.files) {
    const FileSummary s = inspect_file(path);
    const char* kind = s.kind == FileKind::activations ? "activations" : s.kind == FileKind::features ? "features"
                                                                                                      : "checkpoint";
    out << path << ": " << kind << ", " << s.bytes << " bytes\n";
    out << nlohmann::json::parse(s.header_json).dump(2) << '\n';
  }
  return kExitOk;
}

// ---- argument plumbing -----------------------------------------------------

bool user_gave(const std::vector<std::string>& args, const std::string& key) {
  const std::string flag = "--" + key;
  return std::ranges::any_of(args, [&](const std::string& a) { return a == flag || a.starts_with(flag + "="); });
}

std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> parts;
  for (std::string p; in >> p;) parts.push_back(p);
  return parts;
}

std::string find_config_path(const std::vector<std::string>& args) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) return args[i + 1];
    if (args[i].starts_with("--config=")) return args[i].substr(9);
  }
  return {};
}

// Splices config-file entries in front of the user's flags for the selected
// subcommand, skipping keys the user set explicitly.
std::vector<std::string> merge_config(const CLI::App& app, const std::vector<std::string>& args) {
  const std::string path = find_config_path(args);
  if (path.empty()) return args;
  auto sub_it = std::ranges::find_if(args, [&](const std::string& a) {
    return !a.starts_with("-") && app.get_subcommand_no_throw(a) != nullptr;
  });
  if (sub_it == args.end()) return args;
  const CLI::App* sub = app.get_subcommand_no_throw(*sub_it);

  std::vector<std::string> merged{*sub_it};
  for (const auto& entry : read_config_file(path)) {
    const CLI::Option* opt = sub->get_option_no_throw("--" + entry.key);
    if (opt == nullptr || entry.key == "config") {
      throw UsageError(path + ":" + std::to_string(entry.line) + ": unknown key '" + entry.key +
                       "' for subcommand '" + sub->get_name() + "'");
    }
    if (user_gave(args, entry.key)) continue;
    if (opt->get_type_size_max() == 0) {  // flag
      merged.push_back("--" + entry.key + "=" + entry.value);
    } else if (opt->get_items_expected_max() > 1) {
      merged.push_back("--" + entry.key);
      for (auto& v : split_ws(entry.value)) merged.push_back(v);
    } else {
      merged.push_back("--" + entry.key + "=" + entry.value);
    }
  }
  for (auto it = args.begin(); it != args.end(); ++it) {
    if (it != sub_it) merged.push_back(*it);
  }
  return merged;
}

unsigned resolve_threads(unsigned flag_value, const CLI::App* sub) {
  if (sub->count("--threads") > 0) return flag_value;
  if (const char* env = std::getenv(kThreadsEnv); env != nullptr && *env != '\0') {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end == env || *end != '\0') throw UsageError(std::string(kThreadsEnv) + " must be an integer");
    return static_cast<unsigned>(v);
  }
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"concept_bridge: TopK SAE training and cross-model concept similarity", "concept_bridge"};
  app.set_version_flag("--version", std::string("concept_bridge ") + kVersion);
  app.require_subcommand(1);

  std::map<CLI::App*, int (*)(const RunConfig&, std::ostream&)> handlers;

  auto* train = app.add_subcommand("train", "Train a TopK SAE on an activation file");
  train->add_option("--acts", cfg.acts, "Input .acts file")->required();
  train->add_option("--out", cfg.out, "Output .sae checkpoint")->required();
  train->add_option("--json", cfg.json, "Training report JSON");
  train->add_option("--k", cfg.train.k, "TopK sparsity")->capture_default_str();
  train->add_option("--expansion", cfg.train.expansion_factor, "F / D")->capture_default_str();
  train->add_option("--lr", cfg.train.learning_rate, "Adam learning rate")->capture_default_str();
  train->add_option("--beta1", cfg.train.beta1)->capture_default_str();
  train->add_option("--beta2", cfg.train.beta2)->capture_default_str();
  train->add_option("--adam-eps", cfg.train.adam_epsilon)->capture_default_str();
  train->add_option("--batch-size", cfg.train.batch_size)->capture_default_str();
  train->add_option("--epochs", cfg.train.epochs)->capture_default_str();
  train->add_option("--seed", cfg.seed)->capture_default_str();
  add_tiles(train, cfg);
  add_threads(train, cfg);
  handlers[train] = cmd_train;

  auto* features = app.add_subcommand("features", "Extract pre-TopK features at the global token");
  features->add_option("--sae", cfg.sae, "SAE checkpoint")->required();
  features->add_option("--acts", cfg.acts, "global_only .acts file")->required();
  features->add_option("--out", cfg.out, "Output .feat file")->required();
  features->add_option("--s-mode", cfg.s_mode, "raw | relu | post_topk")
      ->check(CLI::IsMember({"raw", "relu", "post_topk"}))
      ->capture_default_str();
  add_tiles(features, cfg);
  add_threads(features, cfg);
  handlers[features] = cmd_features;

  auto* wmppc = app.add_subcommand("wmppc", "MPPC and wMPPC from one feature file to another");
  wmppc->add_option("--src", cfg.src, "Source .feat")->required();
  wmppc->add_option("--tgt", cfg.tgt, "Target .feat")->required();
  wmppc->add_option("--json", cfg.json, "Summary JSON");
  wmppc->add_option("--rho-csv", cfg.rho_csv, "Per-feature rho/argmax/S CSV");
  add_tiles(wmppc, cfg);
  add_threads(wmppc, cfg);
  handlers[wmppc] = cmd_wmppc;

  auto* grid = app.add_subcommand("grid", "Layerwise wMPPC grid between two models");
  grid->add_option("--src", cfg.src_list, "Source .feat files, one per layer")->required();
  grid->add_option("--tgt", cfg.tgt_list, "Target .feat files, one per layer")->required();
  grid->add_option("--out", cfg.out, "Grid CSV");
  add_tiles(grid, cfg);
  add_threads(grid, cfg);
  handlers[grid] = cmd_grid;

  auto* shared = app.add_subcommand("sharedness", "Comparative Sharedness of a model's features (A vs B)");
  shared->add_option("--model", cfg.model, "Features of the model M")->required();
  shared->add_option("--a", cfg.a, "Model A (shared with)")->required();
  shared->add_option("--b", cfg.b, "Model B (not shared with)")->required();
  auto* gcs = app.add_subcommand("gcs", "Generalized Comparative Sharedness (group G vs group H)");
  gcs->add_option("--model", cfg.model, "Features of the model M")->required();
  gcs->add_option("--group-g", cfg.group_g, "Feature files of group G")->required();
  gcs->add_option("--group-h", cfg.group_h, "Feature files of group H")->required();
  for (auto* sub : {shared, gcs}) {
    sub->add_option("--fraction", cfg.fraction, "Top fraction kept")->capture_default_str();
    sub->add_option("--out", cfg.out, "Ranking CSV");
    sub->add_option("--manifest", cfg.manifest, "Top-feature JSON manifest");
    sub->add_option("--top-samples", cfg.top_samples, "Samples listed per top feature")->capture_default_str();
    sub->add_flag("--all-rows", cfg.all_rows, "CSV lists every feature, not only the top fraction");
    add_tiles(sub, cfg);
    add_threads(sub, cfg);
  }
  handlers[shared] = cmd_sharedness;
  handlers[gcs] = cmd_gcs;

  auto* sig = app.add_subcommand("significance", "Fisher-z max-order-statistic tail probability");
  sig->add_option("--x", cfg.x, "Correlation threshold")->required();
  sig->add_option("--n-targets", cfg.n_targets, "Number of target features N")->required();
  sig->add_option("--n-samples", cfg.n_samples, "Aligned samples L")->required();
  sig->add_option("--json", cfg.json, "Significance JSON");
  add_threads(sig, cfg);
  handlers[sig] = cmd_significance;

  auto* shuffle = app.add_subcommand("shuffle-baseline", "wMPPC against column-shuffled target features");
  shuffle->add_option("--src", cfg.src, "Source .feat")->required();
  shuffle->add_option("--tgt", cfg.tgt, "Target .feat")->required();
  shuffle->add_option("--seed", cfg.seed)->capture_default_str();
  shuffle->add_option("--json", cfg.json, "Baseline JSON");
  add_tiles(shuffle, cfg);
  add_threads(shuffle, cfg);
  handlers[shuffle] = cmd_shuffle;

  auto* flops = app.add_subcommand("flops", "FLOPs of an all-pairs correlation");
  flops->add_option("--src-features", cfg.src_features, "Total source features")->required();
  flops->add_option("--tgt-features", cfg.tgt_features, "Total target features")->required();
  flops->add_option("--n", cfg.n, "Samples")->required();
  add_threads(flops, cfg);
  handlers[flops] = cmd_flops;

  auto* report = app.add_subcommand("report", "wMPPC matrix over a set of feature files (CSV + JSON)");
  report->add_option("--src", cfg.src_list, "Source .feat files")->required();
  report->add_option("--tgt", cfg.tgt_list, "Target .feat files (default: same as --src)");
  report->add_option("--csv", cfg.csv, "Matrix CSV");
  report->add_option("--json", cfg.json, "Matrix JSON");
  report->add_flag("--all-layers", cfg.all_layers, "Concatenate each model's layers before comparing");
  add_tiles(report, cfg);
  add_threads(report, cfg);
  handlers[report] = cmd_report;

  auto* inspect = app.add_subcommand("inspect", "Validate files and print their headers");
  inspect->add_option("files", cfg.files, ".acts / .feat / .sae files")->required();
  add_threads(inspect, cfg);
  handlers[inspect] = cmd_inspect;

  try {
    std::vector<std::string> merged = merge_config(app, args);
    std::ranges::reverse(merged);
    app.parse(merged);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << app.version() << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  CLI::App* chosen = app.get_subcommands().front();
  try {
    set_thread_count(resolve_threads(cfg.threads, chosen));
    cfg.tiles.validate();
    err << "# concept_bridge " << kVersion << ' ' << chosen->get_name() << " (threads " << thread_count() << ")\n";
    std::istringstream echo(chosen->config_to_str(true, false));
    for (std::string line; std::getline(echo, line);) {
      if (!line.empty()) err << "#   " << line << '\n';
    }
    return handlers.at(chosen)(cfg, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
}

}  // namespace concept_bridge::cli
