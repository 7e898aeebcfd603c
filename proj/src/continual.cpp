#include "fcre/continual.hpp"

#include <algorithm>
#include <numeric>

#include <spdlog/spdlog.h>

#include "fcre/geometry.hpp"
#include "fcre/losses.hpp"

namespace fcre {

namespace {

Vector flatten_all(const EncoderParams& encoder, const Matrix& w) {
  const Vector enc = encoder.flatten();
  Vector flat(enc.size() + w.size());
  flat << enc, Eigen::Map<const Vector>(w.data(), w.size());
  return flat;
}

}  // namespace

std::vector<std::size_t> select_memory(std::span<const Vector> embeddings, int memory_size) {
  if (embeddings.empty()) throw DomainError("select_memory: relation has no samples");
  if (memory_size < 1) throw DomainError("select_memory: memory size must be >= 1");
  Vector centroid = Vector::Zero(embeddings.front().size());
  for (const Vector& z : embeddings) centroid += z;
  centroid /= static_cast<double>(embeddings.size());

  std::vector<double> dist(embeddings.size());
  for (std::size_t i = 0; i < embeddings.size(); ++i) dist[i] = euclidean(embeddings[i], centroid);
  std::vector<std::size_t> order(embeddings.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dist[a] < dist[b]; });
  // Distances that agree up to rounding are ties (e.g. both members of a
  // two-sample class); those go by ascending index.
  for (auto first = order.begin(); first != order.end();) {
    const double base = dist[*first];
    auto last = std::find_if(first, order.end(), [&](std::size_t i) {
      return dist[i] - base > kMemoryTieTolerance * (1.0 + base);
    });
    std::sort(first, last);
    first = last;
  }
  order.resize(std::min(order.size(), static_cast<std::size_t>(memory_size)));
  return order;
}

std::vector<Sample> select_memory(std::span<const Sample> samples, const EncoderParams& encoder,
                                  int memory_size) {
  std::vector<Vector> z;
  z.reserve(samples.size());
  for (const Sample& s : samples) z.push_back(encode(encoder, s.features));
  std::vector<Sample> out;
  for (std::size_t i : select_memory(z, memory_size)) out.push_back(samples[i]);
  return out;
}

PrototypeStore build_prototypes(const MemoryBuffer& memory, const EncoderParams& encoder) {
  PrototypeStore store;
  for (const auto& [r, samples] : memory) {
    if (samples.empty()) {
      spdlog::warn("build_prototypes: relation {} has an empty memory, skipped", r);
      continue;
    }
    Vector sum = Vector::Zero(encoder.w2.rows());
    for (const Sample& s : samples) sum += encode(encoder, s.features);
    store.emplace(r, sum / static_cast<double>(samples.size()));
  }
  return store;
}

ContinualState ContinualState::initialize(const EncoderShape& shape, const HyperParams& hp,
                                          std::uint64_t init_seed, std::uint64_t shuffle_seed,
                                          std::vector<Head> heads) {
  hp.validate();
  shape.validate();
  std::mt19937_64 rng(init_seed);
  EncoderParams encoder = EncoderParams::random(shape, rng);
  BilinearForm bilinear = BilinearForm::near_identity(shape.latent, rng);
  const Eigen::Index n = shape.parameter_count() + Eigen::Index{shape.latent} * shape.latent;
  Adam adam(n, Adam::Options{hp.learning_rate});
  std::vector<MetricsReport> metrics;
  for (Head h : heads) metrics.push_back(MetricsReport{h, {}});
  return ContinualState{std::move(encoder), std::move(bilinear), std::move(adam), {}, {}, {}, {},
                        std::move(heads), std::move(metrics), std::mt19937_64(shuffle_seed), 0};
}

double train_step(ContinualState& state, std::span<const Sample> samples, const HyperParams& hp,
                  int* degenerate_terms) {
  const auto b = static_cast<Eigen::Index>(samples.size());
  const Eigen::Index latent = state.encoder.w2.rows();
  std::vector<EncoderTrace> traces;
  traces.reserve(samples.size());
  Batch batch;
  batch.embeddings.resize(latent, b);
  for (Eigen::Index i = 0; i < b; ++i) {
    const Sample& s = samples[static_cast<std::size_t>(i)];
    traces.push_back(encode_traced(state.encoder, s.features));
    batch.embeddings.col(i) = traces.back().output;
    batch.labels.push_back(s.relation);
    batch.descriptions.push_back(state.descriptions.vectors(s.relation));
  }

  const JointResult loss = joint_loss(batch, hp, state.bilinear);
  if (degenerate_terms) *degenerate_terms += loss.degenerate_terms;

  EncoderParams grads = EncoderParams::zeros(state.encoder.shape());
  for (Eigen::Index i = 0; i < b; ++i) {
    accumulate_backward(state.encoder, traces[static_cast<std::size_t>(i)], loss.grad_z.col(i),
                        grads);
  }
  Vector theta = flatten_all(state.encoder, state.bilinear.w);
  state.optimizer.step(theta, flatten_all(grads, loss.grad_w));

  const Eigen::Index n_enc = state.encoder.shape().parameter_count();
  state.encoder = EncoderParams::unflatten(state.encoder.shape(), theta.head(n_enc));
  state.bilinear.w = Eigen::Map<const Matrix>(theta.data() + n_enc, latent, latent);
  return loss.value;
}

EpochStats train_epoch(ContinualState& state, std::span<const Sample> data, const HyperParams& hp) {
  EpochStats stats;
  if (data.size() < 2) return stats;
  double total = 0.0;
  if (data.size() <= kFullBatchLimit) {
    total += train_step(state, data, hp, &stats.degenerate_terms);
    stats.steps = 1;
  } else {
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), state.rng);
    std::vector<Sample> chunk;
    for (std::size_t start = 0; start < order.size(); start += kMiniBatchSize) {
      const std::size_t end = std::min(order.size(), start + kMiniBatchSize);
      if (end - start < 2) break;
      chunk.clear();
      for (std::size_t i = start; i < end; ++i) chunk.push_back(data[order[i]]);
      total += train_step(state, chunk, hp, &stats.degenerate_terms);
      ++stats.steps;
    }
  }
  stats.mean_loss = stats.steps ? total / stats.steps : 0.0;
  return stats;
}

void run_task(ContinualState& state, const TaskStream& stream, std::size_t task_index,
              const DescriptionSet& all_descriptions, const HyperParams& hp) {
  hp.validate();
  if (task_index >= stream.tasks.size()) {
    throw ProtocolError("run_task: task " + std::to_string(task_index + 1) + " not in stream");
  }
  const Task& task = stream.tasks[task_index];
  for (RelationId r : task.relations) {
    if (std::find(state.seen.begin(), state.seen.end(), r) != state.seen.end()) {
      throw ProtocolError("run_task: relation " + std::to_string(r) + " was already learned");
    }
    if (!all_descriptions.contains(r)) {
      throw ProtocolError("run_task: no descriptions for relation " + std::to_string(r));
    }
  }

  // Extend the description registry.
  state.descriptions.merge(all_descriptions.subset(task.relations));

  // Train on the current task.
  for (int e = 0; e < hp.epochs_current; ++e) {
    const EpochStats s = train_epoch(state, task.train, hp);
    spdlog::debug("task {} current epoch {}: loss {:.6f} ({} steps)", task_index + 1, e + 1,
                  s.mean_loss, s.steps);
  }

  // Memory update: L samples per new relation, closest to the class centroid.
  for (RelationId r : task.relations) {
    std::vector<Sample> cls;
    for (const Sample& s : task.train)
      if (s.relation == r) cls.push_back(s);
    state.memory[r] = select_memory(cls, state.encoder, hp.memory_size);
  }
  state.seen.insert(state.seen.end(), task.relations.begin(), task.relations.end());

  state.prototypes = build_prototypes(state.memory, state.encoder);

  // Rehearsal on old memory together with the current task data. Memory of
  // the new relations is already a subset of the task data.
  std::vector<Sample> rehearsal;
  for (const auto& [r, samples] : state.memory) {
    if (std::find(task.relations.begin(), task.relations.end(), r) != task.relations.end()) continue;
    rehearsal.insert(rehearsal.end(), samples.begin(), samples.end());
  }
  rehearsal.insert(rehearsal.end(), task.train.begin(), task.train.end());
  for (int e = 0; e < hp.epochs_memory; ++e) {
    const EpochStats s = train_epoch(state, rehearsal, hp);
    spdlog::debug("task {} memory epoch {}: loss {:.6f} ({} steps)", task_index + 1, e + 1,
                  s.mean_loss, s.steps);
  }

  // Prototypes must live in the latent space of the encoder used for inference.
  if (hp.epochs_memory > 0) state.prototypes = build_prototypes(state.memory, state.encoder);

  ++state.tasks_completed;
  const InferenceModel model{state.encoder, state.prototypes, state.descriptions, hp.alpha,
                             hp.epsilon};
  for (MetricsReport& report : state.metrics) {
    report.rows.push_back(evaluate(model, stream, state.tasks_completed, report.head));
  }
}

nlohmann::ordered_json checkpoint_json(const ContinualState& state) {
  nlohmann::ordered_json j;
  j["task"] = state.tasks_completed;
  j["encoder"] = to_json(state.encoder);
  const Matrix& w = state.bilinear.w;
  j["bilinear"] = {{"dim", w.rows()}, {"values", std::vector<double>(w.data(), w.data() + w.size())}};
  auto& mem = j["memory"] = nlohmann::ordered_json::array();
  for (const auto& [r, samples] : state.memory) {
    nlohmann::ordered_json entry;
    entry["relation"] = r;
    auto& feats = entry["samples"] = nlohmann::ordered_json::array();
    for (const Sample& s : samples) {
      feats.push_back(std::vector<double>(s.features.data(), s.features.data() + s.features.size()));
    }
    mem.push_back(std::move(entry));
  }
  j["relations"] = state.seen;
  return j;
}

Checkpoint checkpoint_from_json(const nlohmann::json& j) {
  Checkpoint c;
  c.task = j.at("task").get<int>();
  c.encoder = encoder_params_from_json(j.at("encoder"));
  const auto dim = j.at("bilinear").at("dim").get<Eigen::Index>();
  const auto values = j.at("bilinear").at("values").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(values.size()) != dim * dim) {
    throw ParseError("checkpoint: bilinear form has wrong size");
  }
  c.bilinear = Eigen::Map<const Matrix>(values.data(), dim, dim);
  for (const auto& entry : j.at("memory")) {
    const auto r = entry.at("relation").get<RelationId>();
    auto& samples = c.memory[r];
    for (const auto& f : entry.at("samples")) {
      const auto v = f.get<std::vector<double>>();
      samples.push_back(
          Sample{Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())), r});
    }
  }
  c.relations = j.at("relations").get<std::vector<RelationId>>();
  return c;
}

}  // namespace fcre
