#include "fcre/task_stream.hpp"

#include <set>
#include <string>

namespace fcre {

std::vector<Sample> Task::test_pool(RelationId r) const {
  std::vector<Sample> out;
  for (const Sample& s : test)
    if (s.relation == r) out.push_back(s);
  return out;
}

void TaskStream::validate() const {
  std::set<RelationId> seen;
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    const Task& task = tasks[t];
    const std::string where = "task " + std::to_string(t + 1);
    if (task.relations.empty()) throw ProtocolError(where + " has no relations");
    std::set<RelationId> own(task.relations.begin(), task.relations.end());
    for (RelationId r : task.relations) {
      if (!seen.insert(r).second) {
        throw ProtocolError(where + ": relation " + std::to_string(r) +
                            " already appeared in an earlier task");
      }
    }
    std::set<RelationId> trained;
    for (const auto* split : {&task.train, &task.test}) {
      for (const Sample& s : *split) {
        if (!own.count(s.relation)) {
          throw ProtocolError(where + ": sample labelled with foreign relation " +
                              std::to_string(s.relation));
        }
        if (s.features.size() != feature_dim) {
          throw ProtocolError(where + ": feature dimension " + std::to_string(s.features.size()) +
                              ", expected " + std::to_string(feature_dim));
        }
        if (!s.features.allFinite()) throw ProtocolError(where + ": non-finite feature value");
      }
    }
    for (const Sample& s : task.train) trained.insert(s.relation);
    for (RelationId r : task.relations) {
      if (!trained.count(r)) {
        throw ProtocolError(where + ": relation " + std::to_string(r) + " has no training samples");
      }
    }
  }
}

std::vector<RelationId> TaskStream::relations_through(std::size_t task_count) const {
  std::vector<RelationId> out;
  for (std::size_t t = 0; t < task_count && t < tasks.size(); ++t) {
    out.insert(out.end(), tasks[t].relations.begin(), tasks[t].relations.end());
  }
  return out;
}

}  // namespace fcre
