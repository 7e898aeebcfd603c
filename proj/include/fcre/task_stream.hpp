#pragma once

#include <vector>

#include "fcre/types.hpp"

namespace fcre {

struct Sample {
  Vector features;
  RelationId relation = 0;

  bool operator==(const Sample& o) const {
    return relation == o.relation && features == o.features;
  }
};

/// One N-way task: its new relations, training set and held-out test pool.
struct Task {
  std::vector<RelationId> relations;  // ascending
  std::vector<Sample> train;
  std::vector<Sample> test;

  std::vector<Sample> test_pool(RelationId r) const;
  bool operator==(const Task&) const = default;
};

struct TaskStream {
  std::vector<Task> tasks;
  Eigen::Index feature_dim = 0;

  /// Checks disjoint relation sets, uniform feature dimension, finite
  /// features, and that every relation has training data. Throws ProtocolError.
  void validate() const;
  std::vector<RelationId> relations_through(std::size_t task_count) const;
  bool operator==(const TaskStream&) const = default;
};

}  // namespace fcre
