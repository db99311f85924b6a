#include "concept_bridge/checkpoint.hpp"

#include <json.hpp>

#include "binary_io.hpp"
#include "concept_bridge/error.hpp"
#include "concept_bridge/version.hpp"

namespace concept_bridge {
namespace {

constexpr std::string_view kMagic = "SAEC";

nlohmann::json config_json(const TrainConfig& c) {
  return {{"learning_rate", c.learning_rate}, {"beta1", c.beta1},           {"beta2", c.beta2},
          {"adam_epsilon", c.adam_epsilon},   {"batch_size", c.batch_size}, {"epochs", c.epochs},
          {"expansion_factor", c.expansion_factor}, {"k", c.k},             {"seed", c.seed},
          {"sigma_tol", c.sigma_tol}};
}

TrainConfig config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.learning_rate = j.at("learning_rate").get<double>();
  c.beta1 = j.at("beta1").get<double>();
  c.beta2 = j.at("beta2").get<double>();
  c.adam_epsilon = j.at("adam_epsilon").get<double>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.epochs = j.at("epochs").get<std::size_t>();
  c.expansion_factor = j.at("expansion_factor").get<std::size_t>();
  c.k = j.at("k").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.sigma_tol = j.at("sigma_tol").get<double>();
  return c;
}

}  // namespace

std::vector<char> serialize_checkpoint(const Checkpoint& ckpt) {
  const SaeParams& p = ckpt.params;
  p.validate();
  const nlohmann::json header = {{"d_in", p.d_in},
                                 {"n_features", p.n_features},
                                 {"k", p.k},
                                 {"expansion", p.expansion_factor},
                                 {"seed", ckpt.config.seed},
                                 {"config", config_json(ckpt.config)},
                                 {"creator", std::string("concept_bridge ") + kVersion}};
  io::ByteWriter w;
  io::write_envelope(w, kMagic, header.dump());
  w.f32s(p.w_enc.values());
  w.f32s(p.w_dec.values());
  w.f32s(p.b_dec);
  return w.buffer();
}

Checkpoint deserialize_checkpoint(std::vector<char> bytes, const std::string& source) {
  io::ByteReader r(std::move(bytes), source);
  const std::string header_text = io::read_envelope(r, kMagic);
  Checkpoint ckpt;
  try {
    const auto header = nlohmann::json::parse(header_text);
    ckpt.params.d_in = header.at("d_in").get<std::size_t>();
    ckpt.params.n_features = header.at("n_features").get<std::size_t>();
    ckpt.params.k = header.at("k").get<std::size_t>();
    ckpt.params.expansion_factor = header.at("expansion").get<std::size_t>();
    ckpt.config = config_from_json(header.at("config"));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(source + ": malformed checkpoint header: " + e.what());
  }
  auto& p = ckpt.params;
  if (p.d_in == 0 || p.n_features == 0 || p.n_features > (std::size_t{1} << 31) / std::max<std::size_t>(p.d_in, 1)) {
    r.fail("implausible checkpoint shape");
  }
  p.w_enc = DenseMatrix(p.d_in, p.n_features, r.f32s(p.d_in * p.n_features, "w_enc"));
  p.w_dec = DenseMatrix(p.n_features, p.d_in, r.f32s(p.n_features * p.d_in, "w_dec"));
  p.b_dec = r.f32s(p.d_in, "b_dec");
  r.expect_end();
  p.validate();
  return ckpt;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  io::write_file(path, serialize_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::string& path) { return deserialize_checkpoint(io::read_file(path), path); }

std::string checkpoint_hash(const SaeParams& p) {
  io::ByteWriter w;
  w.u64(p.d_in);
  w.u64(p.n_features);
  w.u64(p.k);
  w.f32s(p.w_enc.values());
  w.f32s(p.w_dec.values());
  w.f32s(p.b_dec);
  return io::fnv1a_hex(w.buffer());
}

std::string read_checkpoint_header(const std::string& path) {
  io::ByteReader r(io::read_file(path), path);
  return io::read_envelope(r, kMagic);
}

}  // namespace concept_bridge
