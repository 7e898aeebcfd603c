#pragma once

#include <nlohmann/json.hpp>

namespace fcre {

/// Training and inference hyperparameters.
///
/// Defaults follow the TACRED column of the reference tables (beta_HM = 0.5,
/// beta_MI = 2.0, margin 0.5, alpha 0.4, epsilon 60, 10 + 10 epochs, K = 7).
/// The learning rate default targets the small synthetic encoder; 1e-5 is the
/// value used for full language-model fine-tuning.
struct HyperParams {
  double tau = 0.1;
  double margin = 0.5;
  double beta_sc = 1.0;
  double beta_st = 1.0;
  double beta_hm = 0.5;
  double beta_mi = 2.0;
  double alpha = 0.4;
  double epsilon = 60.0;
  int k_desc = 7;
  int memory_size = 1;
  int epochs_current = 10;
  int epochs_memory = 10;
  double learning_rate = 1e-3;

  /// Throws DomainError on any out-of-range field.
  void validate() const;
  bool operator==(const HyperParams&) const = default;
};

nlohmann::ordered_json to_json(const HyperParams& hp);
/// Missing keys keep their defaults.
HyperParams hyperparams_from_json(const nlohmann::json& j);

}  // namespace fcre
