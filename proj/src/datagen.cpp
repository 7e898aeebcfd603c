#include "fcre/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <string>

namespace fcre {

namespace {

constexpr int kMaxCenterAttempts = 20000;

Vector gaussian(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = dist(rng);
  return v;
}

}  // namespace

void SyntheticSpec::validate() const {
  if (n_tasks < 1 || n_way < 1 || shots < 1 || test_per_relation < 1 || feature_dim < 1 ||
      task1_oversample < 1) {
    throw DomainError("synthetic spec: all counts must be >= 1");
  }
  if (!(cluster_separation > 0.0 && cluster_separation <= M_PI)) {
    throw DomainError("synthetic spec: cluster_separation must be in (0, pi]");
  }
  if (!(within_class_noise >= 0.0)) {
    throw DomainError("synthetic spec: within_class_noise must be >= 0");
  }
}

GeneratedStream generate_stream(const SyntheticSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  const int n_classes = spec.n_tasks * spec.n_way;
  const double max_cos = std::cos(spec.cluster_separation);

  GeneratedStream out;
  std::vector<Vector> centers;
  centers.reserve(static_cast<std::size_t>(n_classes));
  for (int r = 0; r < n_classes; ++r) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaxCenterAttempts && !placed; ++attempt) {
      Vector c = gaussian(spec.feature_dim, rng).normalized();
      bool ok = true;
      for (const Vector& other : centers) {
        if (c.dot(other) > max_cos) {
          ok = false;
          break;
        }
      }
      if (ok) {
        centers.push_back(std::move(c));
        placed = true;
      }
    }
    if (!placed) {
      throw DomainError("generate_stream: cannot place " + std::to_string(n_classes) +
                        " centers " + std::to_string(spec.cluster_separation) +
                        " rad apart in " + std::to_string(spec.feature_dim) +
                        " dimensions; use a smaller cluster_separation");
    }
    out.centers.emplace(r, centers.back());
  }

  auto draw = [&](RelationId r) {
    return Sample{centers[static_cast<std::size_t>(r)] +
                      spec.within_class_noise * gaussian(spec.feature_dim, rng),
                  r};
  };

  out.stream.feature_dim = spec.feature_dim;
  for (int t = 0; t < spec.n_tasks; ++t) {
    Task task;
    const int train_count = t == 0 ? spec.task1_oversample : spec.shots;
    for (int i = 0; i < spec.n_way; ++i) task.relations.push_back(RelationId{t} * spec.n_way + i);
    for (RelationId r : task.relations)
      for (int s = 0; s < train_count; ++s) task.train.push_back(draw(r));
    for (RelationId r : task.relations)
      for (int s = 0; s < spec.test_per_relation; ++s) task.test.push_back(draw(r));
    out.stream.tasks.push_back(std::move(task));
  }
  return out;
}

TaskStream parse_dataset(std::istream& in) {
  TaskStream stream;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(std::string("invalid JSON: ") + e.what(), line_no);
    }
    for (const char* key : {"task", "relation", "split", "features"}) {
      if (!j.is_object() || !j.contains(key)) {
        throw ParseError(std::string("missing field \"") + key + "\"", line_no);
      }
    }
    if (!j["task"].is_number_integer() || j["task"].get<long long>() < 1) {
      throw ParseError("\"task\" must be a positive integer", line_no);
    }
    if (!j["relation"].is_number_integer()) throw ParseError("\"relation\" must be an integer", line_no);
    const auto t = j["task"].get<std::size_t>();
    const auto r = j["relation"].get<RelationId>();
    const auto& split = j["split"];
    if (!split.is_string() || (split != "train" && split != "test")) {
      throw ParseError("\"split\" must be \"train\" or \"test\"", line_no);
    }
    const auto& feats = j["features"];
    if (!feats.is_array() || feats.empty()) {
      throw ParseError("\"features\" must be a non-empty array", line_no);
    }
    Vector x(static_cast<Eigen::Index>(feats.size()));
    for (std::size_t i = 0; i < feats.size(); ++i) {
      if (!feats[i].is_number()) throw ParseError("non-numeric feature", line_no);
      x(static_cast<Eigen::Index>(i)) = feats[i].get<double>();
    }
    if (stream.feature_dim == 0) stream.feature_dim = x.size();
    if (x.size() != stream.feature_dim) {
      throw ParseError("feature dimension " + std::to_string(x.size()) + ", expected " +
                           std::to_string(stream.feature_dim),
                       line_no);
    }
    if (t > stream.tasks.size()) stream.tasks.resize(t);
    Task& task = stream.tasks[t - 1];
    (split == "train" ? task.train : task.test).push_back(Sample{std::move(x), r});
    if (std::find(task.relations.begin(), task.relations.end(), r) == task.relations.end()) {
      task.relations.insert(std::upper_bound(task.relations.begin(), task.relations.end(), r), r);
    }
  }
  for (std::size_t t = 0; t < stream.tasks.size(); ++t) {
    if (stream.tasks[t].relations.empty()) {
      throw ParseError("task " + std::to_string(t + 1) + " has no samples; tasks must be contiguous");
    }
  }
  try {
    stream.validate();
  } catch (const ProtocolError& e) {
    throw ParseError(e.what());
  }
  return stream;
}

TaskStream ingest_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open dataset file " + path.string());
  return parse_dataset(in);
}

void write_dataset(std::ostream& out, const TaskStream& stream) {
  for (std::size_t t = 0; t < stream.tasks.size(); ++t) {
    const Task& task = stream.tasks[t];
    auto emit = [&](const Sample& s, const char* split) {
      nlohmann::ordered_json j;
      j["task"] = t + 1;
      j["relation"] = s.relation;
      j["split"] = split;
      j["features"] = std::vector<double>(s.features.data(), s.features.data() + s.features.size());
      out << j.dump() << '\n';
    };
    for (const Sample& s : task.train) emit(s, "train");
    for (const Sample& s : task.test) emit(s, "test");
  }
}

nlohmann::ordered_json to_json(const SyntheticSpec& spec) {
  nlohmann::ordered_json j;
  j["n_tasks"] = spec.n_tasks;
  j["n_way"] = spec.n_way;
  j["shots"] = spec.shots;
  j["test_per_relation"] = spec.test_per_relation;
  j["feature_dim"] = spec.feature_dim;
  j["cluster_separation"] = spec.cluster_separation;
  j["within_class_noise"] = spec.within_class_noise;
  j["task1_oversample"] = spec.task1_oversample;
  j["seed"] = spec.seed;
  return j;
}

SyntheticSpec synthetic_spec_from_json(const nlohmann::json& j) {
  SyntheticSpec s;
  auto read = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::remove_reference_t<decltype(field)>>();
  };
  read("n_tasks", s.n_tasks);
  read("n_way", s.n_way);
  read("shots", s.shots);
  read("test_per_relation", s.test_per_relation);
  read("feature_dim", s.feature_dim);
  read("cluster_separation", s.cluster_separation);
  read("within_class_noise", s.within_class_noise);
  read("task1_oversample", s.task1_oversample);
  read("seed", s.seed);
  return s;
}

}  // namespace fcre
