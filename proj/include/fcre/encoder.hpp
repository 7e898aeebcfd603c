#pragma once

// Two-layer tanh encoder f -> h -> d, its hand-derived backward pass, the
// trainable bilinear critic W, and an Adam optimizer over flat parameter vectors.

#include <cstdint>
#include <random>

#include <nlohmann/json.hpp>

#include "fcre/types.hpp"

namespace fcre {

struct EncoderShape {
  int features = 32;
  int hidden = 32;
  int latent = 16;

  Eigen::Index parameter_count() const {
    return Eigen::Index{hidden} * features + hidden + Eigen::Index{latent} * hidden + latent;
  }
  void validate() const;
  bool operator==(const EncoderShape&) const = default;
};

/// Weights of z = tanh(W2 tanh(W1 x + b1) + b2).
///
/// The flat layout is W1, b1, W2, b2, each in Eigen's column-major order.
struct EncoderParams {
  Matrix w1;  // hidden x features
  Vector b1;
  Matrix w2;  // latent x hidden
  Vector b2;

  EncoderShape shape() const {
    return {static_cast<int>(w1.cols()), static_cast<int>(w1.rows()), static_cast<int>(w2.rows())};
  }

  static EncoderParams zeros(const EncoderShape& shape);
  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for all weights and biases.
  static EncoderParams random(const EncoderShape& shape, std::mt19937_64& rng);

  Vector flatten() const;
  static EncoderParams unflatten(const EncoderShape& shape, const Eigen::Ref<const Vector>& flat);

  EncoderParams& operator+=(const EncoderParams& other);
  bool operator==(const EncoderParams& other) const;
};

/// Trainable d x d matrix of the bilinear critic exp(z^T W d / tau).
struct BilinearForm {
  Matrix w;

  /// Identity plus uniform noise of the given scale.
  static BilinearForm near_identity(int dim, std::mt19937_64& rng, double noise = 0.01);
};

/// Intermediate activations kept for the backward pass.
struct EncoderTrace {
  Vector input;
  Vector hidden;
  Vector output;
};

Vector encode(const EncoderParams& params, const Eigen::Ref<const Vector>& x);
EncoderTrace encode_traced(const EncoderParams& params, const Eigen::Ref<const Vector>& x);

/// Adds d(grad_out . encode(x))/d(params) into `grads`.
void accumulate_backward(const EncoderParams& params, const EncoderTrace& trace,
                         const Eigen::Ref<const Vector>& grad_out, EncoderParams& grads);

/// Flat gradient of grad_out . encode(x) with respect to the parameters.
Vector encode_backward(const EncoderParams& params, const Eigen::Ref<const Vector>& x,
                       const Eigen::Ref<const Vector>& grad_out);

class Adam {
 public:
  struct Options {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
  };

  Adam(Eigen::Index size, Options options);

  /// Updates `params` in place and advances the step counter.
  void step(Eigen::Ref<Vector> params, const Eigen::Ref<const Vector>& grads);

  std::int64_t steps() const noexcept { return step_; }
  const Options& options() const noexcept { return options_; }
  const Vector& first_moment() const noexcept { return m_; }
  const Vector& second_moment() const noexcept { return v_; }

 private:
  Options options_;
  Vector m_;
  Vector v_;
  std::int64_t step_ = 0;
};

nlohmann::ordered_json to_json(const EncoderParams& params);
EncoderParams encoder_params_from_json(const nlohmann::json& j);

}  // namespace fcre
