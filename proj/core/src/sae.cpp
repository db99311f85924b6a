#include "concept_bridge/sae.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <string>

#include "concept_bridge/error.hpp"
#include "concept_bridge/random.hpp"

namespace concept_bridge {
namespace {

constexpr std::uint64_t kInitStream = 0x5AE1A1;
constexpr std::size_t kInferenceChunk = 4096;

DenseMatrix centered(const SaeParams& p, const DenseMatrix& x) {
  DenseMatrix out(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto src = x.row(r);
    auto dst = out.row(r);
    for (std::size_t d = 0; d < x.cols(); ++d) dst[d] = src[d] - p.b_dec[d];
  }
  return out;
}

DenseMatrix gather_rows(const DenseMatrix& m, std::span<const std::size_t> rows) {
  DenseMatrix out(rows.size(), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) std::ranges::copy(m.row(rows[i]), out.row(i).begin());
  return out;
}

DenseMatrix slice_rows(const DenseMatrix& m, std::size_t begin, std::size_t end) {
  DenseMatrix out(end - begin, m.cols());
  for (std::size_t r = begin; r < end; ++r) std::ranges::copy(m.row(r), out.row(r - begin).begin());
  return out;
}

void check_input_dims(const SaeParams& p, const DenseMatrix& x, const char* what) {
  if (x.cols() != p.d_in) {
    throw InvalidArgument(std::string(what) + ": input has " + std::to_string(x.cols()) +
                          " columns, SAE expects " + std::to_string(p.d_in));
  }
}

void check_finite_grad(std::span<const float> g, const char* tensor) {
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!std::isfinite(g[i])) {
      throw DataError(std::string("adam_step: non-finite gradient in ") + tensor + " at flat index " +
                      std::to_string(i) + " (value " + std::to_string(g[i]) + ")");
    }
  }
}

void adam_update(std::span<float> param, std::span<const float> grad, std::span<float> m, std::span<float> v,
                 const TrainConfig& cfg, double bias1, double bias2) {
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = grad[i];
    const double mi = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
    const double vi = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
    m[i] = static_cast<float>(mi);
    v[i] = static_cast<float>(vi);
    const double m_hat = mi / bias1;
    const double v_hat = vi / bias2;
    param[i] = static_cast<float>(param[i] - cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.adam_epsilon));
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw InvalidArgument("TrainConfig: learning_rate must be > 0");
  if (!(beta1 > 0.0 && beta1 < 1.0)) throw InvalidArgument("TrainConfig: beta1 must lie in (0, 1)");
  if (!(beta2 > 0.0 && beta2 < 1.0)) throw InvalidArgument("TrainConfig: beta2 must lie in (0, 1)");
  if (!(adam_epsilon >= 0.0)) throw InvalidArgument("TrainConfig: adam_epsilon must be >= 0");
  if (batch_size == 0) throw InvalidArgument("TrainConfig: batch_size must be positive");
  if (expansion_factor == 0) throw InvalidArgument("TrainConfig: expansion_factor must be positive");
  if (k == 0) throw InvalidArgument("TrainConfig: k must be positive");
  if (!(sigma_tol >= 0.0)) throw InvalidArgument("TrainConfig: sigma_tol must be >= 0");
  tiles.validate();
}

void SaeParams::validate() const {
  if (d_in == 0 || n_features == 0) throw InvalidArgument("SaeParams: empty dimensions");
  if (expansion_factor != 0 && n_features != expansion_factor * d_in) {
    throw InvalidArgument("SaeParams: n_features != expansion_factor * d_in");
  }
  if (k == 0 || k > n_features) throw InvalidArgument("SaeParams: k must lie in [1, n_features]");
  if (w_enc.rows() != d_in || w_enc.cols() != n_features) throw InvalidArgument("SaeParams: w_enc must be D x F");
  if (w_dec.rows() != n_features || w_dec.cols() != d_in) throw InvalidArgument("SaeParams: w_dec must be F x D");
  if (b_dec.size() != d_in) throw InvalidArgument("SaeParams: b_dec must have length D");
  auto finite = [](std::span<const float> v) { return std::ranges::all_of(v, [](float x) { return std::isfinite(x); }); };
  if (!finite(w_enc.values()) || !finite(w_dec.values()) || !finite(b_dec)) {
    throw DataError("SaeParams: non-finite parameter");
  }
}

SaeParams sae_init(std::size_t d_in, const TrainConfig& cfg, const DenseMatrix& warmup_batch) {
  if (d_in == 0) throw InvalidArgument("sae_init: d_in must be positive");
  cfg.validate();
  if (warmup_batch.cols() != d_in || warmup_batch.rows() == 0) {
    throw InvalidArgument("sae_init: warmup batch must be non-empty with d_in columns");
  }
  SaeParams p;
  p.d_in = d_in;
  p.expansion_factor = cfg.expansion_factor;
  p.n_features = cfg.expansion_factor * d_in;
  p.k = cfg.k;
  if (p.k > p.n_features) {
    throw InvalidArgument("sae_init: k = " + std::to_string(p.k) + " exceeds n_features = " +
                          std::to_string(p.n_features));
  }

  Rng rng(derive_seed(cfg.seed, kInitStream));
  p.w_dec = DenseMatrix(p.n_features, d_in);
  std::vector<double> row(d_in);
  for (std::size_t j = 0; j < p.n_features; ++j) {
    double norm_sq = 0.0;
    for (auto& v : row) {
      v = rng.normal();
      norm_sq += v * v;
    }
    const double inv = 1.0 / std::sqrt(norm_sq);
    auto dst = p.w_dec.row(j);
    for (std::size_t d = 0; d < d_in; ++d) dst[d] = static_cast<float>(row[d] * inv);
  }
  p.w_enc = p.w_dec.transposed();

  std::vector<double> mean(d_in, 0.0);
  for (std::size_t r = 0; r < warmup_batch.rows(); ++r) {
    const auto src = warmup_batch.row(r);
    for (std::size_t d = 0; d < d_in; ++d) mean[d] += src[d];
  }
  p.b_dec.resize(d_in);
  for (std::size_t d = 0; d < d_in; ++d) {
    p.b_dec[d] = static_cast<float>(mean[d] / static_cast<double>(warmup_batch.rows()));
  }
  return p;
}

std::vector<std::size_t> topk_indices(std::span<const float> f, std::size_t k) {
  if (k == 0 || k > f.size()) {
    throw InvalidArgument("topk_select: k = " + std::to_string(k) + " must lie in [1, " + std::to_string(f.size()) +
                          "]");
  }
  std::vector<std::size_t> idx(f.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(),
                    [&](std::size_t a, std::size_t b) { return f[a] > f[b] || (f[a] == f[b] && a < b); });
  idx.resize(k);
  return idx;
}

std::vector<float> topk_select(std::span<const float> f, std::size_t k) {
  std::vector<float> out(f.size(), 0.0f);
  for (std::size_t i : topk_indices(f, k)) out[i] = f[i];
  return out;
}

DenseMatrix sae_encode(const SaeParams& p, const DenseMatrix& x, const TileConfig& tiles) {
  check_input_dims(p, x, "sae_encode");
  if (x.rows() <= kInferenceChunk) return matmul(centered(p, x), p.w_enc, tiles);
  DenseMatrix out(x.rows(), p.n_features);
  for (std::size_t r0 = 0; r0 < x.rows(); r0 += kInferenceChunk) {
    const std::size_t r1 = std::min(x.rows(), r0 + kInferenceChunk);
    const DenseMatrix part = matmul(centered(p, slice_rows(x, r0, r1)), p.w_enc, tiles);
    for (std::size_t r = r0; r < r1; ++r) std::ranges::copy(part.row(r - r0), out.row(r).begin());
  }
  return out;
}

ForwardPass sae_forward(const SaeParams& p, const DenseMatrix& x, const TileConfig& tiles) {
  check_input_dims(p, x, "sae_forward");
  const std::size_t batch = x.rows();
  ForwardPass out;
  out.f_pre = matmul(centered(p, x), p.w_enc, tiles);
  out.f_sparse = DenseMatrix(batch, p.n_features);
  out.x_hat = DenseMatrix(batch, p.d_in);
  out.selected.resize(batch * p.k);

  std::vector<double> acc(p.d_in);
  for (std::size_t r = 0; r < batch; ++r) {
    auto idx = topk_indices(out.f_pre.row(r), p.k);
    std::ranges::sort(idx);
    std::ranges::fill(acc, 0.0);
    for (std::size_t s = 0; s < idx.size(); ++s) {
      const std::size_t j = idx[s];
      const float value = out.f_pre(r, j);
      out.f_sparse(r, j) = value;
      out.selected[r * p.k + s] = static_cast<std::uint32_t>(j);
      const auto dec = p.w_dec.row(j);
      for (std::size_t d = 0; d < p.d_in; ++d) acc[d] += static_cast<double>(value) * dec[d];
    }
    auto dst = out.x_hat.row(r);
    for (std::size_t d = 0; d < p.d_in; ++d) dst[d] = static_cast<float>(acc[d] + p.b_dec[d]);
  }
  return out;
}

double mse_loss(const DenseMatrix& x, const DenseMatrix& x_hat) {
  if (x.rows() != x_hat.rows() || x.cols() != x_hat.cols()) throw InvalidArgument("mse_loss: shape mismatch");
  if (x.rows() == 0) throw InvalidArgument("mse_loss: empty batch");
  double total = 0.0;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto a = x.row(r);
    const auto b = x_hat.row(r);
    double row_sum = 0.0;
    for (std::size_t d = 0; d < a.size(); ++d) {
      const double diff = static_cast<double>(a[d]) - b[d];
      row_sum += diff * diff;
    }
    total += row_sum;
  }
  return total / static_cast<double>(x.rows());
}

SaeGradients sae_backward(const SaeParams& p, const DenseMatrix& x, const ForwardPass& fwd) {
  check_input_dims(p, x, "sae_backward");
  const std::size_t batch = x.rows();
  const std::size_t dim = p.d_in;
  const std::size_t feats = p.n_features;
  if (fwd.f_pre.rows() != batch || fwd.f_pre.cols() != feats || fwd.f_sparse.rows() != batch ||
      fwd.f_sparse.cols() != feats || fwd.x_hat.rows() != batch || fwd.x_hat.cols() != dim ||
      fwd.selected.size() != batch * p.k) {
    throw InvalidArgument("sae_backward: forward outputs do not match the parameters and batch");
  }

  std::vector<double> g_enc(dim * feats, 0.0);
  std::vector<double> g_dec(feats * dim, 0.0);
  std::vector<double> g_bias(dim, 0.0);
  std::vector<double> g_out(dim);
  std::vector<double> g_centered(dim);
  std::vector<double> cent(dim);
  const double scale = 2.0 / static_cast<double>(batch);

  for (std::size_t r = 0; r < batch; ++r) {
    const auto xr = x.row(r);
    const auto xh = fwd.x_hat.row(r);
    for (std::size_t d = 0; d < dim; ++d) {
      g_out[d] = scale * (static_cast<double>(xh[d]) - xr[d]);
      g_bias[d] += g_out[d];
      cent[d] = static_cast<double>(xr[d]) - p.b_dec[d];
    }
    std::ranges::fill(g_centered, 0.0);
    for (std::size_t s = 0; s < p.k; ++s) {
      const std::size_t j = fwd.selected[r * p.k + s];
      const double fv = fwd.f_sparse(r, j);
      const auto dec = p.w_dec.row(j);
      double g_latent = 0.0;
      double* gd = g_dec.data() + j * dim;
      for (std::size_t d = 0; d < dim; ++d) {
        gd[d] += fv * g_out[d];
        g_latent += g_out[d] * dec[d];
      }
      for (std::size_t d = 0; d < dim; ++d) {
        g_enc[d * feats + j] += cent[d] * g_latent;
        g_centered[d] += g_latent * p.w_enc(d, j);
      }
    }
    for (std::size_t d = 0; d < dim; ++d) g_bias[d] -= g_centered[d];
  }

  auto to_float = [](const std::vector<double>& v) {
    std::vector<float> out(v.size());
    std::ranges::transform(v, out.begin(), [](double d) { return static_cast<float>(d); });
    return out;
  };
  SaeGradients grads;
  grads.w_enc = DenseMatrix(dim, feats);
  std::ranges::transform(g_enc, grads.w_enc.values().begin(), [](double d) { return static_cast<float>(d); });
  grads.w_dec = DenseMatrix(feats, dim);
  std::ranges::transform(g_dec, grads.w_dec.values().begin(), [](double d) { return static_cast<float>(d); });
  grads.b_dec = to_float(g_bias);
  return grads;
}

AdamState AdamState::zeros_like(const SaeParams& p) {
  AdamState s;
  s.m_enc.assign(p.w_enc.size(), 0.0f);
  s.v_enc.assign(p.w_enc.size(), 0.0f);
  s.m_dec.assign(p.w_dec.size(), 0.0f);
  s.v_dec.assign(p.w_dec.size(), 0.0f);
  s.m_bias.assign(p.b_dec.size(), 0.0f);
  s.v_bias.assign(p.b_dec.size(), 0.0f);
  return s;
}

void adam_step(AdamState& state, SaeParams& params, const SaeGradients& grads, const TrainConfig& cfg) {
  if (grads.w_enc.size() != params.w_enc.size() || grads.w_dec.size() != params.w_dec.size() ||
      grads.b_dec.size() != params.b_dec.size() || state.m_enc.size() != params.w_enc.size() ||
      state.m_dec.size() != params.w_dec.size() || state.m_bias.size() != params.b_dec.size() ||
      state.v_enc.size() != state.m_enc.size() || state.v_dec.size() != state.m_dec.size() ||
      state.v_bias.size() != state.m_bias.size()) {
    throw InvalidArgument("adam_step: parameter, gradient and moment shapes disagree");
  }
  check_finite_grad(grads.w_enc.values(), "w_enc");
  check_finite_grad(grads.w_dec.values(), "w_dec");
  check_finite_grad(grads.b_dec, "b_dec");

  state.step_count += 1;
  const auto t = static_cast<double>(state.step_count);
  const double bias1 = 1.0 - std::pow(cfg.beta1, t);
  const double bias2 = 1.0 - std::pow(cfg.beta2, t);
  adam_update(params.w_enc.values(), grads.w_enc.values(), state.m_enc, state.v_enc, cfg, bias1, bias2);
  adam_update(params.w_dec.values(), grads.w_dec.values(), state.m_dec, state.v_dec, cfg, bias1, bias2);
  adam_update(params.b_dec, grads.b_dec, state.m_bias, state.v_bias, cfg, bias1, bias2);
}

TrainResult train_sae(const ActivationMatrix& acts, const TrainConfig& cfg) {
  cfg.validate();
  acts.validate();
  const DenseMatrix& data = acts.data;
  for (std::size_t r = 0; r < data.rows(); ++r) {
    for (float v : data.row(r)) {
      if (!std::isfinite(v)) throw DataError("train_sae: non-finite activation in row " + std::to_string(r));
    }
  }
  const std::size_t n = data.rows();
  const std::size_t batch = std::min(cfg.batch_size, n);

  const auto warmup_order = seeded_permutation(n, derive_seed(cfg.seed, 0));
  const DenseMatrix warmup = gather_rows(data, std::span(warmup_order).first(batch));

  TrainResult result;
  result.params = sae_init(data.cols(), cfg, warmup);
  result.report.seed = cfg.seed;
  result.report.config = cfg;
  AdamState state = AdamState::zeros_like(result.params);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    const auto order = epoch == 0 ? warmup_order : seeded_permutation(n, derive_seed(cfg.seed, epoch));
    double weighted_loss = 0.0;
    for (std::size_t b0 = 0; b0 < n; b0 += batch) {
      const std::size_t b1 = std::min(n, b0 + batch);
      const DenseMatrix x = gather_rows(data, std::span(order).subspan(b0, b1 - b0));
      const ForwardPass fwd = sae_forward(result.params, x, cfg.tiles);
      const double loss = mse_loss(x, fwd.x_hat);
      result.report.batch_mse.push_back(loss);
      weighted_loss += loss * static_cast<double>(x.rows());
      const SaeGradients grads = sae_backward(result.params, x, fwd);
      adam_step(state, result.params, grads, cfg);
    }
    result.report.epoch_mse.push_back(weighted_loss / static_cast<double>(n));
    result.report.epoch_seconds.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  }
  result.report.dead_latents = dead_latent_count(result.params, acts, cfg.tiles);
  return result;
}

std::vector<std::size_t> selection_counts(const SaeParams& p, const DenseMatrix& data, const TileConfig& tiles) {
  check_input_dims(p, data, "selection_counts");
  std::vector<std::size_t> counts(p.n_features, 0);
  for (std::size_t r0 = 0; r0 < data.rows(); r0 += kInferenceChunk) {
    const std::size_t r1 = std::min(data.rows(), r0 + kInferenceChunk);
    const DenseMatrix f_pre = matmul(centered(p, slice_rows(data, r0, r1)), p.w_enc, tiles);
    for (std::size_t r = 0; r < f_pre.rows(); ++r) {
      for (std::size_t j : topk_indices(f_pre.row(r), p.k)) ++counts[j];
    }
  }
  return counts;
}

std::size_t dead_latent_count(const SaeParams& p, const ActivationMatrix& acts, const TileConfig& tiles) {
  const auto counts = selection_counts(p, acts.data, tiles);
  return static_cast<std::size_t>(std::ranges::count(counts, std::size_t{0}));
}

}  // namespace concept_bridge
