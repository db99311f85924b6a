#pragma once

// Dense row-major float matrices and the blocked kernels the similarity and
// SAE code is built on. Every reduction accumulates in double, sequentially
// over the shared dimension, so results do not depend on tiling or on the
// number of worker threads.

#include <cstddef>
#include <span>
#include <vector>

namespace concept_bridge {

class DenseMatrix {
 public:
  DenseMatrix() = default;
  /// Zero-filled rows x cols matrix.
  DenseMatrix(std::size_t rows, std::size_t cols);
  /// Takes ownership of row-major data. Throws InvalidArgument on a size
  /// mismatch and DataError when any entry is NaN or infinite.
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<float> data);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  float& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  float operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<float> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const float> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<float> values() { return data_; }
  std::span<const float> values() const { return data_; }
  const std::vector<float>& storage() const { return data_; }

  DenseMatrix transposed() const;

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<float> data_;
};

struct ColumnStats {
  std::vector<double> means;
  /// Population standard deviation (divides by N).
  std::vector<double> stds;
  /// True where stds[j] < sigma_tol; such columns standardize to zero.
  std::vector<bool> constant_mask;

  std::size_t constant_count() const;
};

/// Output tiling for the blocked kernels. tile_rows/tile_cols bound the
/// output block owned by one task, inner_block the slice of the shared
/// dimension packed at a time.
struct TileConfig {
  std::size_t tile_rows = 128;
  std::size_t tile_cols = 256;
  std::size_t inner_block = 256;

  void validate() const;
};

struct StandardizedColumns {
  DenseMatrix matrix;
  ColumnStats stats;
};

inline constexpr double kDefaultSigmaTol = 1e-12;

/// (m[:,j] - mean_j) / std_j with population std; constant columns become 0.
StandardizedColumns standardize_columns(const DenseMatrix& m, double sigma_tol = kDefaultSigmaTol);

/// out[i,j] = sum_n xs[n,i] * ys[n,j] / N for standardized inputs, i.e. the
/// Pearson correlation between column i of xs and column j of ys.
DenseMatrix blocked_correlation(const DenseMatrix& xs, const DenseMatrix& ys, const TileConfig& cfg = {});

/// Correlation of xs against the target column range [col_begin, col_end)
/// of ys. Used by the streaming row-max path.
DenseMatrix blocked_correlation_range(const DenseMatrix& xs, const DenseMatrix& ys, std::size_t col_begin,
                                      std::size_t col_end, const TileConfig& cfg = {});

/// a * b with the same determinism contract as blocked_correlation.
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b, const TileConfig& cfg = {});

struct RowMax {
  std::vector<float> values;
  std::vector<std::size_t> argmax;
};

/// Per-row maximum; ties resolve to the lowest column index.
RowMax rowwise_max(const DenseMatrix& m);

}  // namespace concept_bridge
