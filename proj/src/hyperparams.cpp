#include "fcre/hyperparams.hpp"

#include "fcre/types.hpp"

namespace fcre {

void HyperParams::validate() const {
  if (!(tau > 0.0)) throw DomainError("hyperparams: tau must be > 0");
  if (!(margin > 0.0 && margin <= 1.0)) throw DomainError("hyperparams: margin must be in (0, 1]");
  if (beta_sc < 0 || beta_st < 0 || beta_hm < 0 || beta_mi < 0) {
    throw DomainError("hyperparams: beta coefficients must be >= 0");
  }
  if (!(beta_sc > 0 || beta_st > 0 || beta_hm > 0 || beta_mi > 0)) {
    throw DomainError("hyperparams: at least one beta coefficient must be > 0");
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw DomainError("hyperparams: alpha must be in [0, 1]");
  if (!(epsilon > 0.0)) throw DomainError("hyperparams: epsilon must be > 0");
  if (k_desc < 1) throw DomainError("hyperparams: k_desc must be >= 1");
  if (memory_size < 1) throw DomainError("hyperparams: memory_size must be >= 1");
  if (epochs_current < 0 || epochs_memory < 0) {
    throw DomainError("hyperparams: epoch counts must be >= 0");
  }
  if (!(learning_rate > 0.0)) throw DomainError("hyperparams: learning_rate must be > 0");
}

nlohmann::ordered_json to_json(const HyperParams& hp) {
  nlohmann::ordered_json j;
  j["tau"] = hp.tau;
  j["margin"] = hp.margin;
  j["beta_sc"] = hp.beta_sc;
  j["beta_st"] = hp.beta_st;
  j["beta_hm"] = hp.beta_hm;
  j["beta_mi"] = hp.beta_mi;
  j["alpha"] = hp.alpha;
  j["epsilon"] = hp.epsilon;
  j["k_desc"] = hp.k_desc;
  j["memory_size"] = hp.memory_size;
  j["epochs_current"] = hp.epochs_current;
  j["epochs_memory"] = hp.epochs_memory;
  j["learning_rate"] = hp.learning_rate;
  return j;
}

HyperParams hyperparams_from_json(const nlohmann::json& j) {
  HyperParams hp;
  auto read = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::remove_reference_t<decltype(field)>>();
  };
  read("tau", hp.tau);
  read("margin", hp.margin);
  read("beta_sc", hp.beta_sc);
  read("beta_st", hp.beta_st);
  read("beta_hm", hp.beta_hm);
  read("beta_mi", hp.beta_mi);
  read("alpha", hp.alpha);
  read("epsilon", hp.epsilon);
  read("k_desc", hp.k_desc);
  read("memory_size", hp.memory_size);
  read("epochs_current", hp.epochs_current);
  read("epochs_memory", hp.epochs_memory);
  read("learning_rate", hp.learning_rate);
  return hp;
}

}  // namespace fcre
