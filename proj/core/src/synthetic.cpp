#include "concept_bridge/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "concept_bridge/error.hpp"
#include "concept_bridge/random.hpp"

namespace concept_bridge {

void DictionaryTask::validate() const {
  if (d_in == 0 || n_atoms == 0) throw InvalidArgument("DictionaryTask: empty dimensions");
  if (active_per_row == 0 || active_per_row > n_atoms) {
    throw InvalidArgument("DictionaryTask: active_per_row must lie in [1, n_atoms]");
  }
  if (!(coef_min <= coef_max)) throw InvalidArgument("DictionaryTask: coef_min > coef_max");
  if (!(noise >= 0.0)) throw InvalidArgument("DictionaryTask: noise must be >= 0");
}

DenseMatrix random_normal_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<float> data(rows * cols);
  for (auto& v : data) v = static_cast<float>(rng.normal());
  return DenseMatrix(rows, cols, std::move(data));
}

DenseMatrix make_dictionary(const DictionaryTask& task) {
  task.validate();
  Rng rng(derive_seed(task.dictionary_seed, 0xD1C7));
  DenseMatrix atoms(task.n_atoms, task.d_in);
  std::vector<double> row(task.d_in);
  for (std::size_t a = 0; a < task.n_atoms; ++a) {
    double norm_sq = 0.0;
    for (auto& v : row) {
      v = rng.normal();
      norm_sq += v * v;
    }
    const double inv = 1.0 / std::sqrt(norm_sq);
    for (std::size_t d = 0; d < task.d_in; ++d) atoms(a, d) = static_cast<float>(row[d] * inv);
  }
  return atoms;
}

ActivationMatrix make_dictionary_activations(const DictionaryTask& task, std::size_t n_rows,
                                             std::uint64_t sample_seed, TokenMode mode) {
  if (n_rows == 0) throw InvalidArgument("make_dictionary_activations: n_rows must be positive");
  const DenseMatrix atoms = make_dictionary(task);
  Rng rng(derive_seed(sample_seed, 0x5A3B));
  DenseMatrix data(n_rows, task.d_in);
  std::vector<double> acc(task.d_in);
  std::vector<std::size_t> chosen;
  for (std::size_t r = 0; r < n_rows; ++r) {
    std::fill(acc.begin(), acc.end(), 0.0);
    chosen.clear();
    while (chosen.size() < task.active_per_row) {
      const auto a = static_cast<std::size_t>(rng.uniform_below(task.n_atoms));
      if (std::find(chosen.begin(), chosen.end(), a) == chosen.end()) chosen.push_back(a);
    }
    for (std::size_t a : chosen) {
      const double coef = task.coef_min + (task.coef_max - task.coef_min) * rng.uniform();
      const auto atom = atoms.row(a);
      for (std::size_t d = 0; d < task.d_in; ++d) acc[d] += coef * atom[d];
    }
    auto dst = data.row(r);
    for (std::size_t d = 0; d < task.d_in; ++d) {
      dst[d] = static_cast<float>(acc[d] + (task.noise > 0.0 ? task.noise * rng.normal() : 0.0));
    }
  }
  ActivationMatrix out;
  out.data = std::move(data);
  out.model_id = "synthetic-dict-" + std::to_string(task.dictionary_seed);
  out.layer = 0;
  out.dataset_id = "synthetic-" + std::to_string(sample_seed);
  out.token_mode = mode;
  out.global_token_kind = mode == TokenMode::global_only ? "row" : "";
  return out;
}

}  // namespace concept_bridge
