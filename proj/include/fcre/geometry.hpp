#pragma once

// Vector similarity, distance and ranking primitives.
//
// The free functions accept any Eigen dense vector expression. Reductions are
// always carried out in double precision regardless of the storage scalar.

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "fcre/types.hpp"

namespace fcre {

namespace detail {

template <typename A, typename B>
void require_same_dim(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b,
                      const char* op) {
  if (a.size() != b.size()) {
    throw DomainError(std::string(op) + ": dimension mismatch (" + std::to_string(a.size()) +
                      " vs " + std::to_string(b.size()) + ")");
  }
}

}  // namespace detail

/// Cosine similarity. Throws DomainError if either argument has zero norm.
template <typename A, typename B>
double cosine(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  detail::require_same_dim(a, b, "cosine");
  const auto ad = a.template cast<double>();
  const auto bd = b.template cast<double>();
  const double na = ad.norm();
  const double nb = bd.norm();
  if (na == 0.0) throw DomainError("cosine: first argument has zero norm");
  if (nb == 0.0) throw DomainError("cosine: second argument has zero norm");
  return ad.dot(bd) / (na * nb);
}

/// Gradient of cosine(a, b) with respect to a.
template <typename A, typename B>
Vector cosine_grad(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  detail::require_same_dim(a, b, "cosine_grad");
  const Vector ad = a.template cast<double>();
  const Vector bd = b.template cast<double>();
  const double na = ad.norm();
  const double nb = bd.norm();
  if (na == 0.0) throw DomainError("cosine_grad: first argument has zero norm");
  if (nb == 0.0) throw DomainError("cosine_grad: second argument has zero norm");
  const double c = ad.dot(bd) / (na * nb);
  return bd / (na * nb) - c * ad / (na * na);
}

template <typename A, typename B>
double euclidean(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  detail::require_same_dim(a, b, "euclidean");
  return (a.template cast<double>() - b.template cast<double>()).norm();
}

/// exp(cosine(a, b) / tau).
template <typename A, typename B>
double exp_cos_score(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b, double tau) {
  if (!(tau > 0.0)) throw DomainError("exp_cos_score: tau must be positive");
  return std::exp(cosine(a, b) / tau);
}

/// Per-relation scores with their 1-based ranks. Rank 1 is the highest score;
/// equal scores are ordered by ascending relation id.
struct RankTable {
  std::vector<RelationId> relations;
  std::vector<double> scores;
  std::vector<int> ranks;

  std::size_t size() const noexcept { return relations.size(); }
  /// Throws DomainError for an unknown relation.
  int rank_of(RelationId r) const;
};

RankTable rank_scores(std::span<const RelationId> relations, std::span<const double> scores);

}  // namespace fcre
