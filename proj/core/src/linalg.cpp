#include "concept_bridge/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "concept_bridge/error.hpp"
#include "concept_bridge/parallel.hpp"

namespace concept_bridge {
namespace {

constexpr std::size_t kMicroRows = 4;
constexpr std::size_t kMicroCols = 8;

std::size_t round_up(std::size_t v, std::size_t multiple) { return (v + multiple - 1) / multiple * multiple; }

void check_finite(std::span<const float> values, const char* what) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw DataError(std::string(what) + ": non-finite value at flat index " + std::to_string(i));
    }
  }
}

// c[MR x NR] += sum_k a[k, 0..MR) * b[k, 0..NR), k ascending.
void micro_kernel(std::size_t kb, const double* a, std::size_t lda, const double* b, std::size_t ldb, double* c,
                  std::size_t ldc) {
  double acc[kMicroRows][kMicroCols];
  for (std::size_t r = 0; r < kMicroRows; ++r)
    for (std::size_t s = 0; s < kMicroCols; ++s) acc[r][s] = c[r * ldc + s];
  for (std::size_t k = 0; k < kb; ++k) {
    const double* brow = b + k * ldb;
    const double* arow = a + k * lda;
    for (std::size_t r = 0; r < kMicroRows; ++r) {
      const double ar = arow[r];
      for (std::size_t s = 0; s < kMicroCols; ++s) acc[r][s] += ar * brow[s];
    }
  }
  for (std::size_t r = 0; r < kMicroRows; ++r)
    for (std::size_t s = 0; s < kMicroCols; ++s) c[r * ldc + s] = acc[r][s];
}

// Packs a K-slice of one operand: dst[k * padded + i] = op(k0 + k, i0 + i),
// zero for i >= valid.
template <typename Access>
void pack(Access op, std::size_t k0, std::size_t kb, std::size_t i0, std::size_t valid, std::size_t padded,
          double* dst) {
  for (std::size_t k = 0; k < kb; ++k) {
    double* out = dst + k * padded;
    for (std::size_t i = 0; i < valid; ++i) out[i] = static_cast<double>(op(k0 + k, i0 + i));
    std::fill(out + valid, out + padded, 0.0);
  }
}

// out[i, j] = (sum_k lhs(k, i) * rhs(k, j)) / divisor for i < m, j < n.
// Each output tile is owned by one task and every entry is summed in
// ascending k, so the result is independent of tiling and thread count.
template <typename Lhs, typename Rhs>
DenseMatrix blocked_product(std::size_t m, std::size_t n, std::size_t depth, Lhs lhs, Rhs rhs, double divisor,
                            const TileConfig& cfg) {
  cfg.validate();
  DenseMatrix out(m, n);
  if (m == 0 || n == 0) return out;

  const std::size_t tr = round_up(cfg.tile_rows, kMicroRows);
  const std::size_t tc = round_up(cfg.tile_cols, kMicroCols);
  const std::size_t kb_max = std::max<std::size_t>(1, std::min(cfg.inner_block, std::max<std::size_t>(depth, 1)));
  const std::size_t tiles_down = (m + tr - 1) / tr;
  const std::size_t tiles_across = (n + tc - 1) / tc;

  parallel_for(tiles_down * tiles_across, [&](std::size_t tile) {
    const std::size_t i0 = (tile / tiles_across) * tr;
    const std::size_t j0 = (tile % tiles_across) * tc;
    const std::size_t rows = std::min(tr, m - i0);
    const std::size_t cols = std::min(tc, n - j0);
    const std::size_t rows_p = round_up(rows, kMicroRows);
    const std::size_t cols_p = round_up(cols, kMicroCols);

    std::vector<double> acc(rows_p * cols_p, 0.0);
    std::vector<double> a_pack(kb_max * rows_p);
    std::vector<double> b_pack(kb_max * cols_p);

    for (std::size_t k0 = 0; k0 < depth; k0 += kb_max) {
      const std::size_t kb = std::min(kb_max, depth - k0);
      pack(lhs, k0, kb, i0, rows, rows_p, a_pack.data());
      pack(rhs, k0, kb, j0, cols, cols_p, b_pack.data());
      for (std::size_t mi = 0; mi < rows_p; mi += kMicroRows) {
        for (std::size_t nj = 0; nj < cols_p; nj += kMicroCols) {
          micro_kernel(kb, a_pack.data() + mi, rows_p, b_pack.data() + nj, cols_p, acc.data() + mi * cols_p + nj,
                       cols_p);
        }
      }
    }

    for (std::size_t i = 0; i < rows; ++i) {
      float* dst = &out(i0 + i, j0);
      const double* src = acc.data() + i * cols_p;
      if (divisor == 1.0) {
        for (std::size_t j = 0; j < cols; ++j) dst[j] = static_cast<float>(src[j]);
      } else {
        for (std::size_t j = 0; j < cols; ++j) dst[j] = static_cast<float>(src[j] / divisor);
      }
    }
  });
  return out;
}

}  // namespace

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0f) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<float> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw InvalidArgument("DenseMatrix: data length " + std::to_string(data_.size()) + " != " +
                          std::to_string(rows_) + " x " + std::to_string(cols_));
  }
  check_finite(data_, "DenseMatrix");
}

DenseMatrix DenseMatrix::transposed() const {
  DenseMatrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

std::size_t ColumnStats::constant_count() const {
  return static_cast<std::size_t>(std::count(constant_mask.begin(), constant_mask.end(), true));
}

void TileConfig::validate() const {
  if (tile_rows == 0 || tile_cols == 0 || inner_block == 0) {
    throw InvalidArgument("TileConfig: tile_rows, tile_cols and inner_block must be positive");
  }
}

StandardizedColumns standardize_columns(const DenseMatrix& m, double sigma_tol) {
  if (m.empty()) throw InvalidArgument("standardize_columns: empty matrix");
  if (!(sigma_tol >= 0.0)) throw InvalidArgument("standardize_columns: sigma_tol must be >= 0");
  check_finite(m.values(), "standardize_columns");

  const std::size_t n = m.rows();
  const std::size_t f = m.cols();
  ColumnStats stats;
  stats.means.assign(f, 0.0);
  stats.stds.assign(f, 0.0);
  stats.constant_mask.assign(f, false);

  for (std::size_t r = 0; r < n; ++r) {
    const auto row = m.row(r);
    for (std::size_t j = 0; j < f; ++j) stats.means[j] += row[j];
  }
  for (auto& mu : stats.means) mu /= static_cast<double>(n);

  std::vector<double> sq(f, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    const auto row = m.row(r);
    for (std::size_t j = 0; j < f; ++j) {
      const double d = row[j] - stats.means[j];
      sq[j] += d * d;
    }
  }
  for (std::size_t j = 0; j < f; ++j) {
    stats.stds[j] = std::sqrt(sq[j] / static_cast<double>(n));
    stats.constant_mask[j] = stats.stds[j] < sigma_tol || stats.stds[j] == 0.0;
  }

  DenseMatrix out(n, f);
  for (std::size_t r = 0; r < n; ++r) {
    const auto src = m.row(r);
    auto dst = out.row(r);
    for (std::size_t j = 0; j < f; ++j) {
      dst[j] = stats.constant_mask[j] ? 0.0f : static_cast<float>((src[j] - stats.means[j]) / stats.stds[j]);
    }
  }
  return {std::move(out), std::move(stats)};
}

DenseMatrix blocked_correlation_range(const DenseMatrix& xs, const DenseMatrix& ys, std::size_t col_begin,
                                      std::size_t col_end, const TileConfig& cfg) {
  if (xs.rows() != ys.rows()) {
    throw InvalidArgument("blocked_correlation: row counts differ (" + std::to_string(xs.rows()) + " vs " +
                          std::to_string(ys.rows()) + ")");
  }
  if (xs.rows() < 2) throw InvalidArgument("blocked_correlation: need at least 2 samples");
  if (col_begin > col_end || col_end > ys.cols()) throw InvalidArgument("blocked_correlation: bad column range");

  const std::size_t x_cols = xs.cols();
  const std::size_t y_cols = ys.cols();
  const float* x = xs.values().data();
  const float* y = ys.values().data();
  auto lhs = [x, x_cols](std::size_t k, std::size_t i) { return x[k * x_cols + i]; };
  auto rhs = [y, y_cols, col_begin](std::size_t k, std::size_t j) { return y[k * y_cols + col_begin + j]; };
  return blocked_product(x_cols, col_end - col_begin, xs.rows(), lhs, rhs, static_cast<double>(xs.rows()), cfg);
}

DenseMatrix blocked_correlation(const DenseMatrix& xs, const DenseMatrix& ys, const TileConfig& cfg) {
  return blocked_correlation_range(xs, ys, 0, ys.cols(), cfg);
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b, const TileConfig& cfg) {
  if (a.cols() != b.rows()) {
    throw InvalidArgument("matmul: shape mismatch (" + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                          " * " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()) + ")");
  }
  const std::size_t inner = a.cols();
  const std::size_t b_cols = b.cols();
  const float* pa = a.values().data();
  const float* pb = b.values().data();
  auto lhs = [pa, inner](std::size_t k, std::size_t i) { return pa[i * inner + k]; };
  auto rhs = [pb, b_cols](std::size_t k, std::size_t j) { return pb[k * b_cols + j]; };
  return blocked_product(a.rows(), b_cols, inner, lhs, rhs, 1.0, cfg);
}

RowMax rowwise_max(const DenseMatrix& m) {
  if (m.rows() == 0 || m.cols() == 0) throw InvalidArgument("rowwise_max: empty matrix");
  RowMax out;
  out.values.resize(m.rows());
  out.argmax.resize(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    std::size_t best = 0;
    for (std::size_t c = 1; c < row.size(); ++c)
      if (row[c] > row[best]) best = c;
    out.values[r] = row[best];
    out.argmax[r] = best;
  }
  return out;
}

}  // namespace concept_bridge
