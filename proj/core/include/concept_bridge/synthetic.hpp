#pragma once

// Synthetic activations with known sparse structure: every row is a sum of
// `active_per_row` unit-norm dictionary atoms with coefficients drawn
// uniformly from [coef_min, coef_max]. Used by tests, benchmarks and demos.

#include <cstddef>
#include <cstdint>

#include "concept_bridge/activations.hpp"
#include "concept_bridge/linalg.hpp"

namespace concept_bridge {

struct DictionaryTask {
  std::size_t d_in = 32;
  std::size_t n_atoms = 64;
  std::size_t active_per_row = 4;
  double coef_min = 0.5;
  double coef_max = 1.5;
  /// Gaussian noise std added to every entry.
  double noise = 0.0;
  std::uint64_t dictionary_seed = 1;

  void validate() const;
};

/// n_atoms x d_in, unit-norm rows; depends only on d_in, n_atoms and
/// dictionary_seed.
DenseMatrix make_dictionary(const DictionaryTask& task);

/// n_rows samples from the task's dictionary using sample_seed.
ActivationMatrix make_dictionary_activations(const DictionaryTask& task, std::size_t n_rows,
                                             std::uint64_t sample_seed, TokenMode mode = TokenMode::all_tokens);

/// i.i.d. N(0, 1) matrix.
DenseMatrix random_normal_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed);

}  // namespace concept_bridge
