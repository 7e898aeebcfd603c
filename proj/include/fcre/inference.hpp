#pragma once

// Prediction heads and continual-learning accuracy metrics.

#include <functional>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "fcre/descriptions.hpp"
#include "fcre/encoder.hpp"
#include "fcre/geometry.hpp"
#include "fcre/task_stream.hpp"

namespace fcre {

/// Mean current-encoder embedding of each relation's memory samples.
using PrototypeStore = std::map<RelationId, Vector>;

enum class Head { Ncm, Dri };

std::string to_string(Head head);
/// Accepts "ncm" or "dri".
Head parse_head(const std::string& name);

/// Nearest class mean: argmax_r -|z - p_r|, ties to the lower relation id.
RelationId ncm_predict(const Eigen::Ref<const Vector>& z, const PrototypeStore& prototypes);

struct DriRanks {
  RankTable distance;     // scores are -|z - p_r|
  RankTable description;  // scores are cos(z, mean description of r)
};

/// Ranks of every seen relation under both retrieval scores. Throws
/// DomainError when the prototype and description registries differ.
DriRanks dri_ranks(const Eigen::Ref<const Vector>& z, const PrototypeStore& prototypes,
                   const DescriptionSet& descriptions);

/// alpha / (epsilon + rank_E) + (1 - alpha) / (epsilon + rank_cos).
double dri_fuse(int distance_rank, int description_rank, double alpha, double epsilon);

double dri_score(const Eigen::Ref<const Vector>& z, RelationId r, const PrototypeStore& prototypes,
                 const DescriptionSet& descriptions, double alpha, double epsilon);

/// Fused argmax from raw per-relation scores (higher is better for both lists),
/// ties to the lower relation id.
RelationId dri_predict_from_scores(std::span<const RelationId> relations,
                                   std::span<const double> distance_scores,
                                   std::span<const double> description_scores, double alpha,
                                   double epsilon);

/// argmax_r of the fused score, ties to the lower relation id.
RelationId dri_predict(const Eigen::Ref<const Vector>& z, const PrototypeStore& prototypes,
                       const DescriptionSet& descriptions, double alpha, double epsilon);

/// Accuracy after training task j (1-based) on the test pools of tasks 1..j.
struct MetricsRow {
  int task = 0;
  Head head = Head::Dri;
  std::vector<double> acc_per_task;  // ACC_{j,i}, i = 1..j
  double acc_avg = 0.0;              // ACC_j
};

/// Per-head accuracy trajectory over a task stream.
struct MetricsReport {
  Head head = Head::Dri;
  std::vector<MetricsRow> rows;

  /// ACC_1 - ACC_T, the forgetting magnitude.
  double drop() const;
  /// ACC_T - ACC_1, the signed change.
  double delta() const { return -drop(); }
  double final_accuracy() const;
};

/// Scores test pools of tasks 1..j with an arbitrary predictor.
MetricsRow evaluate_predictions(const TaskStream& stream, int through_task, Head head,
                                const std::function<RelationId(const Sample&)>& predict);

struct InferenceModel {
  const EncoderParams& encoder;
  const PrototypeStore& prototypes;
  const DescriptionSet& descriptions;
  double alpha;
  double epsilon;
};

MetricsRow evaluate(const InferenceModel& model, const TaskStream& stream, int through_task,
                    Head head);

/// CSV with header `task,head,acc_avg,acc_per_task_1..T,drop,delta`.
/// `drop`/`delta` on row j compare ACC_j with ACC_1.
void write_metrics_csv(std::ostream& out, const std::vector<MetricsReport>& reports, int n_tasks);

}  // namespace fcre
