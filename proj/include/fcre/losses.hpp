#pragma once

// Per-sample training losses over a batch of latent embeddings.
//
// Every loss returns its value together with the gradient with respect to each
// embedding in the batch (column i of grad_z belongs to sample i). Description
// vectors are constants; the only other trainable input is the bilinear form
// used by the mutual-information loss.
//
// Positive, negative and denominator sets are all scoped to the batch.

#include <vector>

#include "fcre/encoder.hpp"
#include "fcre/hyperparams.hpp"
#include "fcre/types.hpp"

namespace fcre {

struct Batch {
  Matrix embeddings;                 // latent x B
  std::vector<RelationId> labels;    // B
  std::vector<Matrix> descriptions;  // B entries, each latent x K

  Eigen::Index size() const noexcept { return embeddings.cols(); }
  Eigen::Index latent_dim() const noexcept { return embeddings.rows(); }
  /// Throws DomainError on inconsistent shapes or ragged K.
  void validate() const;
};

struct LossResult {
  double value = 0.0;
  Matrix grad_z;  // latent x B
  Matrix grad_w;  // latent x latent; empty for losses that do not use W
  /// Set when the loss is undefined for this sample (no positive or no
  /// negative in the batch) and contributes zero.
  bool degenerate = false;
};

/// Positive/negative sets of a sample and the hard subsets for one description index.
struct MiningSets {
  std::vector<Eigen::Index> positives;
  std::vector<Eigen::Index> negatives;
  std::vector<Eigen::Index> hard_positives;
  std::vector<Eigen::Index> hard_negatives;
};

/// Lower bound applied to the HSMT log argument.
inline constexpr double kHsmtFloor = 1e-6;

std::vector<Eigen::Index> positives_of(const Batch& batch, Eigen::Index x);
std::vector<Eigen::Index> negatives_of(const Batch& batch, Eigen::Index x);

/// Supervised contrastive loss with f(a, b) = exp(cos(a, b) / tau).
LossResult scl_loss(const Batch& batch, Eigen::Index x, double tau);

/// -log(max(1 + max_p e^{|z_x - z_p|} - min_n e^{|z_x - z_n|}, kHsmtFloor)).
/// Gradient flows only through the selected hardest pair and is zero when clamped.
LossResult hsmt_loss(const Batch& batch, Eigen::Index x);

/// Hard positives and negatives of x measured against its k-th description.
MiningSets mine_hard(const Batch& batch, Eigen::Index x, Eigen::Index k);

/// Squared hard-margin loss summed over all K descriptions of x.
LossResult hm_loss(const Batch& batch, Eigen::Index x, double margin);

/// InfoNCE-style loss with critic h(z, d) = exp(z^T W d / tau). The negatives
/// are the descriptions of every distinct other relation present in the batch.
LossResult mi_loss(const Batch& batch, Eigen::Index x, const BilinearForm& w, double tau);

struct LossBreakdown {
  double scl = 0.0;
  double hsmt = 0.0;
  double hm = 0.0;
  double mi = 0.0;
};

struct JointResult {
  double value = 0.0;
  Matrix grad_z;
  Matrix grad_w;
  LossBreakdown components;  // unweighted batch means
  int degenerate_terms = 0;
};

/// Batch mean of the beta-weighted sum of all four losses. Terms whose beta is
/// zero are skipped entirely.
JointResult joint_loss(const Batch& batch, const HyperParams& hp, const BilinearForm& w);

}  // namespace fcre
