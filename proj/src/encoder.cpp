#include "fcre/encoder.hpp"

#include <cmath>
#include <string>

namespace fcre {

namespace {

void fill_uniform(Eigen::Ref<Matrix> m, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = dist(rng);
}

void require_input(const EncoderParams& params, Eigen::Index size) {
  if (size != params.w1.cols()) {
    throw DomainError("encode: expected " + std::to_string(params.w1.cols()) +
                      " features, got " + std::to_string(size));
  }
}

}  // namespace

void EncoderShape::validate() const {
  if (features < 1 || hidden < 1 || latent < 1) {
    throw DomainError("encoder shape: all dimensions must be >= 1");
  }
}

EncoderParams EncoderParams::zeros(const EncoderShape& shape) {
  shape.validate();
  return {Matrix::Zero(shape.hidden, shape.features), Vector::Zero(shape.hidden),
          Matrix::Zero(shape.latent, shape.hidden), Vector::Zero(shape.latent)};
}

EncoderParams EncoderParams::random(const EncoderShape& shape, std::mt19937_64& rng) {
  EncoderParams p = zeros(shape);
  const double bound1 = 1.0 / std::sqrt(static_cast<double>(shape.features));
  const double bound2 = 1.0 / std::sqrt(static_cast<double>(shape.hidden));
  fill_uniform(p.w1, bound1, rng);
  fill_uniform(p.b1, bound1, rng);
  fill_uniform(p.w2, bound2, rng);
  fill_uniform(p.b2, bound2, rng);
  return p;
}

Vector EncoderParams::flatten() const {
  Vector flat(shape().parameter_count());
  Eigen::Index at = 0;
  auto put = [&](const auto& m) {
    flat.segment(at, m.size()) = Eigen::Map<const Vector>(m.data(), m.size());
    at += m.size();
  };
  put(w1);
  put(b1);
  put(w2);
  put(b2);
  return flat;
}

EncoderParams EncoderParams::unflatten(const EncoderShape& shape,
                                       const Eigen::Ref<const Vector>& flat) {
  if (flat.size() != shape.parameter_count()) {
    throw DomainError("unflatten: expected " + std::to_string(shape.parameter_count()) +
                      " values, got " + std::to_string(flat.size()));
  }
  EncoderParams p = zeros(shape);
  Eigen::Index at = 0;
  auto take = [&](auto& m) {
    Eigen::Map<Vector>(m.data(), m.size()) = flat.segment(at, m.size());
    at += m.size();
  };
  take(p.w1);
  take(p.b1);
  take(p.w2);
  take(p.b2);
  return p;
}

EncoderParams& EncoderParams::operator+=(const EncoderParams& other) {
  w1 += other.w1;
  b1 += other.b1;
  w2 += other.w2;
  b2 += other.b2;
  return *this;
}

bool EncoderParams::operator==(const EncoderParams& other) const {
  return shape() == other.shape() && w1 == other.w1 && b1 == other.b1 && w2 == other.w2 &&
         b2 == other.b2;
}

BilinearForm BilinearForm::near_identity(int dim, std::mt19937_64& rng, double noise) {
  if (dim < 1) throw DomainError("bilinear form: dimension must be >= 1");
  Matrix w = Matrix::Identity(dim, dim);
  Matrix n(dim, dim);
  fill_uniform(n, noise, rng);
  return {w + n};
}

EncoderTrace encode_traced(const EncoderParams& params, const Eigen::Ref<const Vector>& x) {
  require_input(params, x.size());
  EncoderTrace t;
  t.input = x;
  t.hidden = (params.w1 * x + params.b1).array().tanh();
  t.output = (params.w2 * t.hidden + params.b2).array().tanh();
  return t;
}

Vector encode(const EncoderParams& params, const Eigen::Ref<const Vector>& x) {
  return encode_traced(params, x).output;
}

void accumulate_backward(const EncoderParams& params, const EncoderTrace& trace,
                         const Eigen::Ref<const Vector>& grad_out, EncoderParams& grads) {
  if (grad_out.size() != params.w2.rows()) {
    throw DomainError("encode_backward: gradient has dimension " +
                      std::to_string(grad_out.size()) + ", expected " +
                      std::to_string(params.w2.rows()));
  }
  const Vector delta2 =
      grad_out.array() * (1.0 - trace.output.array().square());
  const Vector delta1 =
      (params.w2.transpose() * delta2).array() * (1.0 - trace.hidden.array().square());
  grads.w2.noalias() += delta2 * trace.hidden.transpose();
  grads.b2 += delta2;
  grads.w1.noalias() += delta1 * trace.input.transpose();
  grads.b1 += delta1;
}

Vector encode_backward(const EncoderParams& params, const Eigen::Ref<const Vector>& x,
                       const Eigen::Ref<const Vector>& grad_out) {
  EncoderParams grads = EncoderParams::zeros(params.shape());
  accumulate_backward(params, encode_traced(params, x), grad_out, grads);
  return grads.flatten();
}

Adam::Adam(Eigen::Index size, Options options)
    : options_(options), m_(Vector::Zero(size)), v_(Vector::Zero(size)) {
  if (!(options_.learning_rate > 0.0)) throw DomainError("adam: learning rate must be positive");
}

void Adam::step(Eigen::Ref<Vector> params, const Eigen::Ref<const Vector>& grads) {
  if (params.size() != m_.size() || grads.size() != m_.size()) {
    throw DomainError("adam: expected " + std::to_string(m_.size()) + " parameters, got " +
                      std::to_string(params.size()) + " params and " +
                      std::to_string(grads.size()) + " grads");
  }
  ++step_;
  const double b1 = options_.beta1;
  const double b2 = options_.beta2;
  m_ = b1 * m_ + (1.0 - b1) * grads;
  v_ = b2 * v_ + (1.0 - b2) * grads.cwiseAbs2();
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(step_));
  params.array() -= options_.learning_rate * (m_.array() / c1) /
                    ((v_.array() / c2).sqrt() + options_.eps);
}

nlohmann::ordered_json to_json(const EncoderParams& params) {
  const EncoderShape s = params.shape();
  const Vector flat = params.flatten();
  nlohmann::ordered_json j;
  j["features"] = s.features;
  j["hidden"] = s.hidden;
  j["latent"] = s.latent;
  j["params"] = std::vector<double>(flat.data(), flat.data() + flat.size());
  return j;
}

EncoderParams encoder_params_from_json(const nlohmann::json& j) {
  const EncoderShape s{j.at("features").get<int>(), j.at("hidden").get<int>(),
                       j.at("latent").get<int>()};
  s.validate();
  const auto values = j.at("params").get<std::vector<double>>();
  return EncoderParams::unflatten(s, Eigen::Map<const Vector>(values.data(),
                                                              static_cast<Eigen::Index>(values.size())));
}

}  // namespace fcre
