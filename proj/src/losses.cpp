#include "fcre/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fcre/geometry.hpp"

namespace fcre {

namespace {

double log_sum_exp(const Vector& s) {
  const double top = s.maxCoeff();
  return top + std::log((s.array() - top).exp().sum());
}

Vector softmax(const Vector& s) {
  const Vector e = (s.array() - s.maxCoeff()).exp();
  return e / e.sum();
}

LossResult empty_result(const Batch& batch, bool with_w = false) {
  LossResult r;
  r.grad_z = Matrix::Zero(batch.latent_dim(), batch.size());
  if (with_w) r.grad_w = Matrix::Zero(batch.latent_dim(), batch.latent_dim());
  return r;
}

void require_index(const Batch& batch, Eigen::Index x) {
  if (x < 0 || x >= batch.size()) {
    throw DomainError("loss: sample index " + std::to_string(x) + " out of range");
  }
}

}  // namespace

void Batch::validate() const {
  const auto b = static_cast<std::size_t>(size());
  if (labels.size() != b || descriptions.size() != b) {
    throw DomainError("batch: embeddings, labels and descriptions disagree in size");
  }
  if (b == 0) return;
  const Eigen::Index k = descriptions.front().cols();
  if (k < 1) throw DomainError("batch: samples need at least one description");
  for (const Matrix& d : descriptions) {
    if (d.rows() != latent_dim()) throw DomainError("batch: description dimension mismatch");
    if (d.cols() != k) throw DomainError("batch: ragged description count");
  }
}

std::vector<Eigen::Index> positives_of(const Batch& batch, Eigen::Index x) {
  std::vector<Eigen::Index> out;
  for (Eigen::Index i = 0; i < batch.size(); ++i) {
    if (i != x && batch.labels[i] == batch.labels[x]) out.push_back(i);
  }
  return out;
}

std::vector<Eigen::Index> negatives_of(const Batch& batch, Eigen::Index x) {
  std::vector<Eigen::Index> out;
  for (Eigen::Index i = 0; i < batch.size(); ++i) {
    if (batch.labels[i] != batch.labels[x]) out.push_back(i);
  }
  return out;
}

LossResult scl_loss(const Batch& batch, Eigen::Index x, double tau) {
  require_index(batch, x);
  if (!(tau > 0.0)) throw DomainError("scl_loss: tau must be positive");
  if (batch.size() < 2) throw DomainError("scl_loss: batch needs at least two samples");
  LossResult r = empty_result(batch);
  const auto pos = positives_of(batch, x);
  if (pos.empty()) {
    r.degenerate = true;
    return r;
  }

  // Denominator runs over every other sample in the batch.
  std::vector<Eigen::Index> others;
  for (Eigen::Index u = 0; u < batch.size(); ++u)
    if (u != x) others.push_back(u);

  const auto zx = batch.embeddings.col(x);
  Vector s(static_cast<Eigen::Index>(others.size()));
  for (std::size_t i = 0; i < others.size(); ++i) {
    s(static_cast<Eigen::Index>(i)) = cosine(zx, batch.embeddings.col(others[i])) / tau;
  }
  const double lse = log_sum_exp(s);
  const Vector soft = softmax(s);
  const double n_pos = static_cast<double>(pos.size());

  double value = 0.0;
  for (std::size_t i = 0; i < others.size(); ++i) {
    const Eigen::Index u = others[i];
    const bool is_pos = batch.labels[u] == batch.labels[x];
    if (is_pos) value += lse - s(static_cast<Eigen::Index>(i));
    const double g = (n_pos * soft(static_cast<Eigen::Index>(i)) - (is_pos ? 1.0 : 0.0)) / tau;
    const auto zu = batch.embeddings.col(u);
    r.grad_z.col(x) += g * cosine_grad(zx, zu);
    r.grad_z.col(u) += g * cosine_grad(zu, zx);
  }
  r.value = value;
  return r;
}

LossResult hsmt_loss(const Batch& batch, Eigen::Index x) {
  require_index(batch, x);
  LossResult r = empty_result(batch);
  const auto pos = positives_of(batch, x);
  const auto neg = negatives_of(batch, x);
  if (pos.empty() || neg.empty()) {
    r.degenerate = true;
    return r;
  }
  const auto zx = batch.embeddings.col(x);

  Eigen::Index hardest_pos = pos.front();
  double pos_dist = -1.0;
  for (Eigen::Index p : pos) {
    const double d = euclidean(zx, batch.embeddings.col(p));
    if (d > pos_dist) {
      pos_dist = d;
      hardest_pos = p;
    }
  }
  Eigen::Index hardest_neg = neg.front();
  double neg_dist = std::numeric_limits<double>::infinity();
  for (Eigen::Index n : neg) {
    const double d = euclidean(zx, batch.embeddings.col(n));
    if (d < neg_dist) {
      neg_dist = d;
      hardest_neg = n;
    }
  }

  const double e_pos = std::exp(pos_dist);
  const double e_neg = std::exp(neg_dist);
  const double arg = 1.0 + e_pos - e_neg;
  if (arg < kHsmtFloor) {
    r.value = -std::log(kHsmtFloor);
    return r;
  }
  r.value = -std::log(arg);

  // dL/dxi_p = -e_pos / arg, dL/dxi_n = e_neg / arg.
  if (pos_dist > 0.0) {
    const Vector dir = (zx - batch.embeddings.col(hardest_pos)) / pos_dist;
    const double g = -e_pos / arg;
    r.grad_z.col(x) += g * dir;
    r.grad_z.col(hardest_pos) -= g * dir;
  }
  if (neg_dist > 0.0) {
    const Vector dir = (zx - batch.embeddings.col(hardest_neg)) / neg_dist;
    const double g = e_neg / arg;
    r.grad_z.col(x) += g * dir;
    r.grad_z.col(hardest_neg) -= g * dir;
  }
  return r;
}

MiningSets mine_hard(const Batch& batch, Eigen::Index x, Eigen::Index k) {
  require_index(batch, x);
  if (k < 0 || k >= batch.descriptions[x].cols()) {
    throw DomainError("mine_hard: description index " + std::to_string(k) + " out of range");
  }
  MiningSets sets;
  sets.positives = positives_of(batch, x);
  sets.negatives = negatives_of(batch, x);
  if (sets.positives.empty() || sets.negatives.empty()) {
    throw DomainError("mine_hard: sample needs at least one positive and one negative");
  }
  const auto d = batch.descriptions[x].col(k);
  auto distance = [&](Eigen::Index i) { return 1.0 - cosine(d, batch.embeddings.col(i)); };

  double closest_neg = std::numeric_limits<double>::infinity();
  for (Eigen::Index n : sets.negatives) closest_neg = std::min(closest_neg, distance(n));
  double farthest_pos = -std::numeric_limits<double>::infinity();
  for (Eigen::Index p : sets.positives) farthest_pos = std::max(farthest_pos, distance(p));

  for (Eigen::Index p : sets.positives)
    if (distance(p) > closest_neg) sets.hard_positives.push_back(p);
  for (Eigen::Index n : sets.negatives)
    if (distance(n) < farthest_pos) sets.hard_negatives.push_back(n);
  return sets;
}

LossResult hm_loss(const Batch& batch, Eigen::Index x, double margin) {
  require_index(batch, x);
  LossResult r = empty_result(batch);
  if (positives_of(batch, x).empty() || negatives_of(batch, x).empty()) {
    r.degenerate = true;
    return r;
  }
  const Matrix& descs = batch.descriptions[x];
  for (Eigen::Index k = 0; k < descs.cols(); ++k) {
    const auto d = descs.col(k);
    const MiningSets sets = mine_hard(batch, x, k);
    for (Eigen::Index p : sets.hard_positives) {
      const auto zp = batch.embeddings.col(p);
      const double gap = 1.0 - cosine(d, zp);
      r.value += gap * gap;
      r.grad_z.col(p) += -2.0 * gap * cosine_grad(zp, d);
    }
    for (Eigen::Index n : sets.hard_negatives) {
      const auto zn = batch.embeddings.col(n);
      const double excess = std::max(0.0, margin - 1.0 + cosine(d, zn));
      if (excess == 0.0) continue;
      r.value += excess * excess;
      r.grad_z.col(n) += 2.0 * excess * cosine_grad(zn, d);
    }
  }
  return r;
}

LossResult mi_loss(const Batch& batch, Eigen::Index x, const BilinearForm& w, double tau) {
  require_index(batch, x);
  if (!(tau > 0.0)) throw DomainError("mi_loss: tau must be positive");
  if (w.w.rows() != batch.latent_dim() || w.w.cols() != batch.latent_dim()) {
    throw DomainError("mi_loss: bilinear form does not match latent dimension");
  }
  LossResult r = empty_result(batch, true);

  // Positive descriptions first, then each distinct negative relation once,
  // in order of first appearance in the batch.
  std::vector<const Matrix*> blocks{&batch.descriptions[x]};
  std::vector<RelationId> taken{batch.labels[x]};
  for (Eigen::Index i = 0; i < batch.size(); ++i) {
    if (std::find(taken.begin(), taken.end(), batch.labels[i]) == taken.end()) {
      taken.push_back(batch.labels[i]);
      blocks.push_back(&batch.descriptions[i]);
    }
  }
  const Eigen::Index k = batch.descriptions[x].cols();
  if (blocks.size() == 1) return r;  // -log(1)

  Matrix all(batch.latent_dim(), k * static_cast<Eigen::Index>(blocks.size()));
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    all.middleCols(static_cast<Eigen::Index>(b) * k, k) = *blocks[b];
  }
  const auto zx = batch.embeddings.col(x);
  const Vector wz = w.w.transpose() * zx;
  const Vector s = (all.transpose() * wz) / tau;
  const Vector s_pos = s.head(k);

  r.value = log_sum_exp(s) - log_sum_exp(s_pos);

  Vector g = softmax(s);
  g.head(k) -= softmax(s_pos);
  // s_j = z^T W d_j / tau
  const Vector weighted = all * g / tau;  // sum_j g_j d_j / tau
  r.grad_z.col(x) = w.w * weighted;
  r.grad_w = zx * weighted.transpose();
  return r;
}

JointResult joint_loss(const Batch& batch, const HyperParams& hp, const BilinearForm& w) {
  batch.validate();
  if (batch.size() < 2) throw DomainError("joint_loss: batch needs at least two samples");
  JointResult out;
  out.grad_z = Matrix::Zero(batch.latent_dim(), batch.size());
  out.grad_w = Matrix::Zero(batch.latent_dim(), batch.latent_dim());
  const double inv_b = 1.0 / static_cast<double>(batch.size());

  auto add = [&](const LossResult& r, double beta, double& component) {
    component += r.value * inv_b;
    out.value += beta * r.value * inv_b;
    out.grad_z += (beta * inv_b) * r.grad_z;
    if (r.grad_w.size() != 0) out.grad_w += (beta * inv_b) * r.grad_w;
    if (r.degenerate) ++out.degenerate_terms;
  };

  for (Eigen::Index x = 0; x < batch.size(); ++x) {
    if (hp.beta_sc > 0) add(scl_loss(batch, x, hp.tau), hp.beta_sc, out.components.scl);
    if (hp.beta_st > 0) add(hsmt_loss(batch, x), hp.beta_st, out.components.hsmt);
    if (hp.beta_hm > 0) add(hm_loss(batch, x, hp.margin), hp.beta_hm, out.components.hm);
    if (hp.beta_mi > 0) add(mi_loss(batch, x, w, hp.tau), hp.beta_mi, out.components.mi);
  }
  return out;
}

}  // namespace fcre
