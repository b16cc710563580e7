#pragma once

#include <random>

#include "kmsbounds/operators.hpp"

namespace kmsbounds {

/// Complex Ginibre matrix with unit-variance entries.
inline Matrix random_matrix(Eigen::Index dim, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(2.0));
  Matrix m(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    for (Eigen::Index j = 0; j < dim; ++j) m(i, j) = complex(normal(rng), normal(rng));
  }
  return m;
}

inline Matrix random_hermitian(Eigen::Index dim, std::mt19937_64& rng) {
  const Matrix g = random_matrix(dim, rng);
  return 0.5 * (g + g.adjoint());
}

inline LocalOperator random_hermitian(const Region& region, int local_dim, std::mt19937_64& rng) {
  const auto dim = static_cast<Eigen::Index>(checked_dimension(local_dim, region.size()));
  return {region, random_hermitian(dim, rng), local_dim};
}

inline LocalOperator random_operator(const Region& region, int local_dim, std::mt19937_64& rng) {
  const auto dim = static_cast<Eigen::Index>(checked_dimension(local_dim, region.size()));
  return {region, random_matrix(dim, rng), local_dim};
}

}  // namespace kmsbounds
