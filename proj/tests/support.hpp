#pragma once

// Random instance builders and gradient-check harnesses shared by the unit
// tests and the acceptance runner.

#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "fcre/encoder.hpp"
#include "fcre/losses.hpp"
#include "oracles.hpp"

namespace testing {

using fcre::Matrix;
using fcre::Vector;

inline Vector gaussian(Eigen::Index n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = g(rng);
  return v;
}

inline Matrix gaussian(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = g(rng);
  return m;
}

/// Labels 0..n_rel-1 with `per_rel` samples each, descriptions shared per relation.
struct RawBatch {
  Matrix features;  // f x B
  std::vector<fcre::RelationId> labels;
  std::vector<Matrix> descriptions;
};

inline RawBatch random_raw_batch(std::mt19937_64& rng, int n_rel, int per_rel, Eigen::Index features,
                                 Eigen::Index latent, Eigen::Index k) {
  RawBatch raw;
  const Eigen::Index b = n_rel * per_rel;
  raw.features = gaussian(features, b, rng);
  std::vector<Matrix> per_relation;
  for (int r = 0; r < n_rel; ++r) per_relation.push_back(gaussian(latent, k, rng));
  for (int r = 0; r < n_rel; ++r)
    for (int i = 0; i < per_rel; ++i) {
      raw.labels.push_back(r);
      raw.descriptions.push_back(per_relation[static_cast<std::size_t>(r)]);
    }
  return raw;
}

inline fcre::Batch encode_batch(const fcre::EncoderParams& params, const RawBatch& raw) {
  fcre::Batch batch;
  batch.embeddings.resize(params.w2.rows(), raw.features.cols());
  for (Eigen::Index i = 0; i < raw.features.cols(); ++i)
    batch.embeddings.col(i) = fcre::encode(params, raw.features.col(i));
  batch.labels = raw.labels;
  batch.descriptions = raw.descriptions;
  return batch;
}

inline oracle::BatchView view_of(const fcre::Batch& batch) {
  oracle::BatchView v;
  for (Eigen::Index i = 0; i < batch.size(); ++i) {
    v.z.push_back(oracle::to_vec(batch.embeddings.col(i)));
    v.labels.push_back(batch.labels[static_cast<std::size_t>(i)]);
    std::vector<oracle::Vec> ds;
    const Matrix& d = batch.descriptions[static_cast<std::size_t>(i)];
    for (Eigen::Index k = 0; k < d.cols(); ++k) ds.push_back(oracle::to_vec(d.col(k)));
    v.descs.push_back(std::move(ds));
  }
  return v;
}

inline std::vector<oracle::Vec> rows_of(const Matrix& m) {
  std::vector<oracle::Vec> out;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    out.emplace_back();
    for (Eigen::Index j = 0; j < m.cols(); ++j) out.back().push_back(m(i, j));
  }
  return out;
}

/// Batch objective evaluated by the library: value plus gradient w.r.t. the
/// embeddings and (optionally) W.
struct Objective {
  double value = 0.0;
  Matrix grad_z;
  Matrix grad_w;
};

using ObjectiveFn = std::function<Objective(const fcre::Batch&, const fcre::BilinearForm&)>;

/// Sum over samples of one per-sample loss.
template <typename PerSample>
ObjectiveFn summed(PerSample loss) {
  return [loss](const fcre::Batch& batch, const fcre::BilinearForm& w) {
    Objective o;
    o.grad_z = Matrix::Zero(batch.latent_dim(), batch.size());
    o.grad_w = Matrix::Zero(batch.latent_dim(), batch.latent_dim());
    for (Eigen::Index x = 0; x < batch.size(); ++x) {
      const fcre::LossResult r = loss(batch, x, w);
      o.value += r.value;
      o.grad_z += r.grad_z;
      if (r.grad_w.size() != 0) o.grad_w += r.grad_w;
    }
    return o;
  };
}

struct GradCheck {
  double rel_error_params = 0.0;
  double rel_error_w = 0.0;
  double value = 0.0;
};

inline constexpr double kFdStep = 1e-5;
inline constexpr double kFdTolerance = 1e-4;

/// Analytic gradients of objective(encode(theta, features)) with respect to the
/// encoder parameters and W, compared against central finite differences.
inline GradCheck check_composed_gradient(const fcre::EncoderParams& params, const fcre::BilinearForm& w,
                                         const RawBatch& raw, const ObjectiveFn& objective,
                                         bool check_w) {
  const fcre::EncoderShape shape = params.shape();
  const Objective at = objective(encode_batch(params, raw), w);

  fcre::EncoderParams grads = fcre::EncoderParams::zeros(shape);
  for (Eigen::Index i = 0; i < raw.features.cols(); ++i) {
    const fcre::EncoderTrace trace = fcre::encode_traced(params, raw.features.col(i));
    fcre::accumulate_backward(params, trace, at.grad_z.col(i), grads);
  }

  const auto f_params = [&](const oracle::Vec& theta) {
    const Vector flat = Eigen::Map<const Vector>(theta.data(), static_cast<Eigen::Index>(theta.size()));
    return objective(encode_batch(fcre::EncoderParams::unflatten(shape, flat), raw), w).value;
  };
  GradCheck out;
  out.value = at.value;
  out.rel_error_params = oracle::relative_error(
      oracle::to_vec(grads.flatten()),
      oracle::finite_difference(f_params, oracle::to_vec(params.flatten()), kFdStep));

  if (check_w) {
    const fcre::Batch batch = encode_batch(params, raw);
    const Eigen::Index d = w.w.rows();
    const auto f_w = [&](const oracle::Vec& theta) {
      fcre::BilinearForm moved{Eigen::Map<const Matrix>(theta.data(), d, d)};
      return objective(batch, moved).value;
    };
    const oracle::Vec w_flat(w.w.data(), w.w.data() + w.w.size());
    const oracle::Vec analytic(at.grad_w.data(), at.grad_w.data() + at.grad_w.size());
    out.rel_error_w = oracle::relative_error(analytic, oracle::finite_difference(f_w, w_flat, kFdStep));
  }
  return out;
}

/// Smallest gap between the HSMT selections and their runners-up, over all
/// anchors, measured on e^{distance}. Small gaps make the subgradient ambiguous.
inline double hsmt_selection_gap(const fcre::Batch& batch) {
  double gap = std::numeric_limits<double>::infinity();
  const oracle::BatchView v = view_of(batch);
  for (std::size_t x = 0; x < v.z.size(); ++x) {
    std::vector<double> pos, neg;
    for (std::size_t i = 0; i < v.z.size(); ++i) {
      if (i == x) continue;
      const double e = std::exp(oracle::euclidean(v.z[x], v.z[i]));
      (v.labels[i] == v.labels[x] ? pos : neg).push_back(e);
    }
    std::sort(pos.rbegin(), pos.rend());
    std::sort(neg.begin(), neg.end());
    if (pos.size() > 1) gap = std::min(gap, pos[0] - pos[1]);
    if (neg.size() > 1) gap = std::min(gap, neg[1] - neg[0]);
    if (!pos.empty() && !neg.empty()) {
      // Distance of the log argument from the clamp floor.
      gap = std::min(gap, std::abs(1.0 + pos[0] - neg[0] - fcre::kHsmtFloor));
    }
  }
  return gap;
}

}  // namespace testing
