#include "concept_bridge/feature_store.hpp"

#include <cmath>

#include <json.hpp>

#include "binary_io.hpp"
#include "concept_bridge/checkpoint.hpp"
#include "concept_bridge/error.hpp"

namespace concept_bridge {
namespace {

constexpr std::string_view kActsMagic = "SAEA";
constexpr std::string_view kFeatMagic = "SAEF";
constexpr std::string_view kSaeMagic = "SAEC";

using nlohmann::json;

void write_matrix(io::ByteWriter& w, const DenseMatrix& m) {
  w.u64(m.rows());
  w.u32(static_cast<std::uint32_t>(m.cols()));
  w.f32s(m.values());
}

DenseMatrix read_matrix(io::ByteReader& r, const json& header) {
  const std::uint64_t rows = r.u64("n_rows");
  const std::uint32_t cols = r.u32("n_cols");
  if (header.at("n_rows").get<std::uint64_t>() != rows || header.at("n_cols").get<std::uint32_t>() != cols) {
    r.fail("header shape " + header.at("n_rows").dump() + "x" + header.at("n_cols").dump() +
           " disagrees with binary shape " + std::to_string(rows) + "x" + std::to_string(cols));
  }
  if (cols != 0 && rows > SIZE_MAX / 4 / cols) r.fail("matrix shape overflows the address space");
  auto data = r.f32s(static_cast<std::size_t>(rows) * cols, "matrix payload");
  try {
    return DenseMatrix(rows, cols, std::move(data));
  } catch (const DataError& e) {
    r.fail(e.what());
  }
}

json parse_header(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(source + ": malformed header JSON: " + e.what());
  }
}

template <typename Fn>
auto with_header_errors(const std::string& source, Fn fn) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw DataError(source + ": missing or mistyped header field: " + e.what());
  } catch (const InvalidArgument& e) {
    throw DataError(source + ": bad header value: " + e.what());
  }
}

}  // namespace

std::string_view to_string(TokenMode mode) {
  return mode == TokenMode::all_tokens ? "all_tokens" : "global_only";
}

TokenMode parse_token_mode(std::string_view name) {
  if (name == "all_tokens") return TokenMode::all_tokens;
  if (name == "global_only") return TokenMode::global_only;
  throw InvalidArgument("unknown token mode '" + std::string(name) + "' (expected all_tokens or global_only)");
}

void ActivationMatrix::validate() const {
  if (data.rows() == 0) throw InvalidArgument("ActivationMatrix: no rows");
  if (layer < 0) throw InvalidArgument("ActivationMatrix: negative layer");
}

std::string_view to_string(SMode mode) {
  switch (mode) {
    case SMode::raw: return "raw";
    case SMode::relu: return "relu";
    case SMode::post_topk: return "post_topk";
  }
  return "raw";
}

SMode parse_s_mode(std::string_view name) {
  if (name == "raw") return SMode::raw;
  if (name == "relu") return SMode::relu;
  if (name == "post_topk") return SMode::post_topk;
  throw InvalidArgument("unknown s_mode '" + std::string(name) + "' (expected raw, relu or post_topk)");
}

std::string FeatureMatrix::id() const {
  return model_id + "@" + (column_layers.empty() ? std::to_string(layer) : std::string("all"));
}

FeatureMatrix extract_features(const SaeParams& p, const ActivationMatrix& acts, SMode s_mode,
                               const TileConfig& tiles) {
  acts.validate();
  if (acts.token_mode != TokenMode::global_only) {
    throw InvalidArgument("extract_features: activations of '" + acts.model_id + "' layer " +
                          std::to_string(acts.layer) +
                          " are all_tokens; feature extraction uses one global-token row per sample");
  }
  FeatureMatrix fm;
  fm.data = sae_encode(p, acts.data, tiles);
  fm.model_id = acts.model_id;
  fm.layer = acts.layer;
  fm.dataset_id = acts.dataset_id;
  fm.sae_checkpoint_hash = checkpoint_hash(p);
  fm.s_mode = s_mode;
  fm.k = p.k;
  fm.s_vector = cumulative_activation(fm.data, s_mode, p.k);
  return fm;
}

std::vector<float> cumulative_activation(const DenseMatrix& features, SMode mode, std::size_t k) {
  if (features.empty()) throw InvalidArgument("cumulative_activation: empty feature matrix");
  const std::size_t f = features.cols();
  std::vector<double> sums(f, 0.0);
  switch (mode) {
    case SMode::raw:
      for (std::size_t r = 0; r < features.rows(); ++r) {
        const auto row = features.row(r);
        for (std::size_t j = 0; j < f; ++j) sums[j] += row[j];
      }
      break;
    case SMode::relu:
      for (std::size_t r = 0; r < features.rows(); ++r) {
        const auto row = features.row(r);
        for (std::size_t j = 0; j < f; ++j) sums[j] += std::max(row[j], 0.0f);
      }
      break;
    case SMode::post_topk:
      if (k == 0 || k > f) throw InvalidArgument("cumulative_activation: post_topk needs k in [1, F]");
      for (std::size_t r = 0; r < features.rows(); ++r) {
        const auto row = features.row(r);
        for (std::size_t j : topk_indices(row, k)) sums[j] += row[j];
      }
      break;
    default:
      throw InvalidArgument("cumulative_activation: unknown mode");
  }
  std::vector<float> out(f);
  for (std::size_t j = 0; j < f; ++j) out[j] = static_cast<float>(sums[j]);
  return out;
}

std::vector<float> cumulative_activation(const FeatureMatrix& fm, SMode mode) {
  return cumulative_activation(fm.data, mode, fm.k);
}

SDiagnostics s_diagnostics(std::span<const float> s) {
  if (s.empty()) throw InvalidArgument("s_diagnostics: empty vector");
  SDiagnostics d;
  for (float v : s) d.mean += v;
  d.mean /= static_cast<double>(s.size());
  double sq = 0.0;
  for (float v : s) sq += (v - d.mean) * (v - d.mean);
  d.std = std::sqrt(sq / static_cast<double>(s.size()));
  if (d.mean == 0.0) throw DataError("s_diagnostics: mean of S is 0, coefficient of variation undefined");
  d.coefficient_of_variation = d.std / d.mean;
  return d;
}

std::vector<char> serialize_activations(const ActivationMatrix& acts) {
  acts.validate();
  const json header = {{"model_id", acts.model_id},
                       {"layer", acts.layer},
                       {"dataset_id", acts.dataset_id},
                       {"token_mode", to_string(acts.token_mode)},
                       {"global_token_kind", acts.global_token_kind},
                       {"n_rows", acts.data.rows()},
                       {"n_cols", acts.data.cols()}};
  io::ByteWriter w;
  io::write_envelope(w, kActsMagic, header.dump());
  write_matrix(w, acts.data);
  return w.buffer();
}

ActivationMatrix deserialize_activations(std::vector<char> bytes, const std::string& source) {
  io::ByteReader r(std::move(bytes), source);
  const json header = parse_header(io::read_envelope(r, kActsMagic), source);
  return with_header_errors(source, [&] {
    ActivationMatrix acts;
    acts.model_id = header.at("model_id").get<std::string>();
    acts.layer = header.at("layer").get<std::int64_t>();
    acts.dataset_id = header.at("dataset_id").get<std::string>();
    acts.token_mode = parse_token_mode(header.at("token_mode").get<std::string>());
    acts.global_token_kind = header.value("global_token_kind", std::string{});
    acts.data = read_matrix(r, header);
    r.expect_end();
    return acts;
  });
}

void write_activations(const std::string& path, const ActivationMatrix& acts) {
  io::write_file(path, serialize_activations(acts));
}

ActivationMatrix read_activations(const std::string& path) {
  return deserialize_activations(io::read_file(path), path);
}

std::vector<char> serialize_features(const FeatureMatrix& fm) {
  if (fm.s_vector.size() != fm.features()) throw InvalidArgument("FeatureMatrix: s_vector length != F");
  if (!fm.column_layers.empty() && fm.column_layers.size() != fm.features()) {
    throw InvalidArgument("FeatureMatrix: column_layers length != F");
  }
  const json header = {{"model_id", fm.model_id},
                       {"layer", fm.layer},
                       {"dataset_id", fm.dataset_id},
                       {"sae_checkpoint_hash", fm.sae_checkpoint_hash},
                       {"s_mode", to_string(fm.s_mode)},
                       {"k", fm.k},
                       {"column_layers", fm.column_layers},
                       {"n_rows", fm.data.rows()},
                       {"n_cols", fm.data.cols()}};
  io::ByteWriter w;
  io::write_envelope(w, kFeatMagic, header.dump());
  write_matrix(w, fm.data);
  w.f32s(fm.s_vector);
  return w.buffer();
}

FeatureMatrix deserialize_features(std::vector<char> bytes, const std::string& source) {
  io::ByteReader r(std::move(bytes), source);
  const json header = parse_header(io::read_envelope(r, kFeatMagic), source);
  return with_header_errors(source, [&] {
    FeatureMatrix fm;
    fm.model_id = header.at("model_id").get<std::string>();
    fm.layer = header.at("layer").get<std::int64_t>();
    fm.dataset_id = header.at("dataset_id").get<std::string>();
    fm.sae_checkpoint_hash = header.at("sae_checkpoint_hash").get<std::string>();
    fm.s_mode = parse_s_mode(header.at("s_mode").get<std::string>());
    fm.k = header.at("k").get<std::size_t>();
    fm.column_layers = header.at("column_layers").get<std::vector<std::int64_t>>();
    fm.data = read_matrix(r, header);
    fm.s_vector = r.f32s(fm.data.cols(), "s_vector");
    r.expect_end();
    if (!fm.column_layers.empty() && fm.column_layers.size() != fm.data.cols()) {
      r.fail("column_layers length disagrees with n_cols");
    }
    return fm;
  });
}

void write_features(const std::string& path, const FeatureMatrix& fm) {
  io::write_file(path, serialize_features(fm));
}

FeatureMatrix read_features(const std::string& path) { return deserialize_features(io::read_file(path), path); }

FileSummary inspect_file(const std::string& path) {
  auto bytes = io::read_file(path);
  const std::size_t size = bytes.size();
  const std::string magic(bytes.data(), std::min<std::size_t>(4, size));
  FileSummary summary{FileKind::activations, {}, size};
  if (magic == kActsMagic) {
    deserialize_activations(bytes, path);
    io::ByteReader r(std::move(bytes), path);
    summary.header_json = io::read_envelope(r, kActsMagic);
  } else if (magic == kFeatMagic) {
    deserialize_features(bytes, path);
    io::ByteReader r(std::move(bytes), path);
    summary.kind = FileKind::features;
    summary.header_json = io::read_envelope(r, kFeatMagic);
  } else if (magic == kSaeMagic) {
    deserialize_checkpoint(bytes, path);
    io::ByteReader r(std::move(bytes), path);
    summary.kind = FileKind::checkpoint;
    summary.header_json = io::read_envelope(r, kSaeMagic);
  } else {
    throw DataError(path + ": unrecognized magic '" + magic + "' at byte offset 0 (expected SAEA, SAEF or SAEC)");
  }
  return summary;
}

}  // namespace concept_bridge
