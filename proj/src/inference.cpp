#include "fcre/inference.hpp"

#include <ostream>

#include <fmt/format.h>

namespace fcre {

std::string to_string(Head head) { return head == Head::Ncm ? "ncm" : "dri"; }

Head parse_head(const std::string& name) {
  if (name == "ncm") return Head::Ncm;
  if (name == "dri") return Head::Dri;
  throw DomainError("unknown inference head '" + name + "' (expected ncm or dri)");
}

RelationId ncm_predict(const Eigen::Ref<const Vector>& z, const PrototypeStore& prototypes) {
  if (prototypes.empty()) throw DomainError("ncm_predict: no prototypes");
  RelationId best = prototypes.begin()->first;
  double best_score = -std::numeric_limits<double>::infinity();
  // Ascending id iteration plus strict comparison keeps the lower id on ties.
  for (const auto& [r, p] : prototypes) {
    const double score = -euclidean(z, p);
    if (score > best_score) {
      best_score = score;
      best = r;
    }
  }
  return best;
}

DriRanks dri_ranks(const Eigen::Ref<const Vector>& z, const PrototypeStore& prototypes,
                   const DescriptionSet& descriptions) {
  if (prototypes.empty()) throw DomainError("dri: no prototypes");
  if (prototypes.size() != descriptions.size()) {
    throw DomainError("dri: prototype and description registries differ in size");
  }
  std::vector<RelationId> ids;
  std::vector<double> dist_scores;
  std::vector<double> desc_scores;
  ids.reserve(prototypes.size());
  for (const auto& [r, p] : prototypes) {
    if (!descriptions.contains(r)) {
      throw DomainError("dri: relation " + std::to_string(r) + " has a prototype but no descriptions");
    }
    ids.push_back(r);
    dist_scores.push_back(-euclidean(z, p));
    desc_scores.push_back(cosine(z, descriptions.mean(r)));
  }
  return {rank_scores(ids, dist_scores), rank_scores(ids, desc_scores)};
}

double dri_fuse(int distance_rank, int description_rank, double alpha, double epsilon) {
  return alpha / (epsilon + distance_rank) + (1.0 - alpha) / (epsilon + description_rank);
}

namespace {

void check_fusion_params(double alpha, double epsilon) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw DomainError("dri: alpha must be in [0, 1]");
  if (!(epsilon > 0.0)) throw DomainError("dri: epsilon must be positive");
}

}  // namespace

double dri_score(const Eigen::Ref<const Vector>& z, RelationId r, const PrototypeStore& prototypes,
                 const DescriptionSet& descriptions, double alpha, double epsilon) {
  check_fusion_params(alpha, epsilon);
  const DriRanks ranks = dri_ranks(z, prototypes, descriptions);
  return dri_fuse(ranks.distance.rank_of(r), ranks.description.rank_of(r), alpha, epsilon);
}

namespace {

RelationId fused_argmax(const RankTable& distance, const RankTable& description, double alpha,
                        double epsilon) {
  RelationId best = distance.relations.front();
  double best_score = -1.0;
  for (std::size_t i = 0; i < distance.size(); ++i) {
    const double s = dri_fuse(distance.ranks[i], description.ranks[i], alpha, epsilon);
    if (s > best_score || (s == best_score && distance.relations[i] < best)) {
      best_score = s;
      best = distance.relations[i];
    }
  }
  return best;
}

}  // namespace

RelationId dri_predict_from_scores(std::span<const RelationId> relations,
                                   std::span<const double> distance_scores,
                                   std::span<const double> description_scores, double alpha,
                                   double epsilon) {
  check_fusion_params(alpha, epsilon);
  return fused_argmax(rank_scores(relations, distance_scores),
                      rank_scores(relations, description_scores), alpha, epsilon);
}

RelationId dri_predict(const Eigen::Ref<const Vector>& z, const PrototypeStore& prototypes,
                       const DescriptionSet& descriptions, double alpha, double epsilon) {
  check_fusion_params(alpha, epsilon);
  const DriRanks ranks = dri_ranks(z, prototypes, descriptions);
  return fused_argmax(ranks.distance, ranks.description, alpha, epsilon);
}

double MetricsReport::drop() const {
  if (rows.empty()) return 0.0;
  return rows.front().acc_avg - rows.back().acc_avg;
}

double MetricsReport::final_accuracy() const { return rows.empty() ? 0.0 : rows.back().acc_avg; }

MetricsRow evaluate_predictions(const TaskStream& stream, int through_task, Head head,
                                const std::function<RelationId(const Sample&)>& predict) {
  if (through_task < 1 || static_cast<std::size_t>(through_task) > stream.tasks.size()) {
    throw DomainError("evaluate: task index " + std::to_string(through_task) + " out of range");
  }
  MetricsRow row;
  row.task = through_task;
  row.head = head;
  for (int i = 0; i < through_task; ++i) {
    const Task& task = stream.tasks[static_cast<std::size_t>(i)];
    if (task.test.empty()) {
      throw DomainError("evaluate: task " + std::to_string(i + 1) + " has an empty test pool");
    }
    std::size_t correct = 0;
    for (const Sample& s : task.test)
      if (predict(s) == s.relation) ++correct;
    row.acc_per_task.push_back(static_cast<double>(correct) / static_cast<double>(task.test.size()));
  }
  double sum = 0.0;
  for (double a : row.acc_per_task) sum += a;
  row.acc_avg = sum / static_cast<double>(row.acc_per_task.size());
  return row;
}

MetricsRow evaluate(const InferenceModel& model, const TaskStream& stream, int through_task,
                    Head head) {
  return evaluate_predictions(stream, through_task, head, [&](const Sample& s) {
    const Vector z = encode(model.encoder, s.features);
    return head == Head::Ncm
               ? ncm_predict(z, model.prototypes)
               : dri_predict(z, model.prototypes, model.descriptions, model.alpha, model.epsilon);
  });
}

void write_metrics_csv(std::ostream& out, const std::vector<MetricsReport>& reports, int n_tasks) {
  out << "task,head,acc_avg";
  for (int i = 1; i <= n_tasks; ++i) out << ",acc_per_task_" << i;
  out << ",drop,delta\r\n";
  for (const MetricsReport& report : reports) {
    if (report.rows.empty()) continue;
    const double first = report.rows.front().acc_avg;
    for (const MetricsRow& row : report.rows) {
      out << row.task << ',' << to_string(row.head) << ',' << fmt::format("{:.6f}", row.acc_avg);
      for (int i = 0; i < n_tasks; ++i) {
        out << ',';
        if (static_cast<std::size_t>(i) < row.acc_per_task.size()) {
          out << fmt::format("{:.6f}", row.acc_per_task[static_cast<std::size_t>(i)]);
        }
      }
      out << ',' << fmt::format("{:.6f}", first - row.acc_avg) << ','
          << fmt::format("{:.6f}", row.acc_avg - first) << "\r\n";
    }
  }
}

}  // namespace fcre
