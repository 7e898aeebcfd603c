#include "fcre/experiment.hpp"

#include <atomic>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

namespace fcre {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Config

void ExperimentConfig::validate(bool check_files) const {
  hyper.validate();
  encoder.validate();
  if (seeds.empty()) throw DomainError("config: at least one seed is required");
  if (heads.empty()) throw DomainError("config: at least one head is required");
  if (!(description_spread >= 0.0)) throw DomainError("config: description_spread must be >= 0");
  effective_hyperparams().validate();
  if (data_mode == DataMode::Synthetic) {
    synthetic.validate();
    if (!dataset_path.empty() || !descriptions_path.empty()) {
      throw DomainError("config: synthetic mode takes no dataset/descriptions paths");
    }
    if (synthetic.feature_dim != encoder.features) {
      throw DomainError("config: synthetic feature_dim must equal encoder features");
    }
  } else {
    if (dataset_path.empty() || descriptions_path.empty()) {
      throw DomainError("config: file mode needs both dataset and descriptions paths");
    }
    if (check_files) {
      for (const auto& p : {dataset_path, descriptions_path}) {
        if (!fs::exists(p)) throw DomainError("config: input file not found: " + p);
      }
    }
  }
}

HyperParams ExperimentConfig::effective_hyperparams() const {
  HyperParams hp = hyper;
  if (!ablation.use_sc) hp.beta_sc = 0.0;
  if (!ablation.use_st) hp.beta_st = 0.0;
  if (!ablation.use_hm) hp.beta_hm = 0.0;
  if (!ablation.use_mi) hp.beta_mi = 0.0;
  return hp;
}

nlohmann::ordered_json to_json(const ExperimentConfig& c) {
  nlohmann::ordered_json j;
  auto& data = j["data"];
  data["mode"] = c.data_mode == DataMode::Synthetic ? "synthetic" : "files";
  data["synthetic"] = to_json(c.synthetic);
  data["dataset"] = c.dataset_path;
  data["descriptions"] = c.descriptions_path;
  data["description_spread"] = c.description_spread;
  j["backbone_seed"] = c.backbone_seed;
  j["encoder"] = {{"features", c.encoder.features},
                  {"hidden", c.encoder.hidden},
                  {"latent", c.encoder.latent}};
  j["hyper"] = to_json(c.hyper);
  j["seeds"] = c.seeds;
  auto& heads = j["heads"] = nlohmann::ordered_json::array();
  for (Head h : c.heads) heads.push_back(to_string(h));
  auto& ab = j["ablation"];
  ab["sc"] = c.ablation.use_sc;
  ab["st"] = c.ablation.use_st;
  ab["hm"] = c.ablation.use_hm;
  ab["mi"] = c.ablation.use_mi;
  ab["description_source"] =
      c.ablation.description_source == DescriptionSource::KSet ? "k-set" : "raw-mean";
  j["out"] = c.out_dir;
  return j;
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  try {
    if (j.contains("data")) {
      const auto& d = j["data"];
      if (d.contains("mode")) {
        const auto mode = d["mode"].get<std::string>();
        if (mode == "synthetic") {
          c.data_mode = DataMode::Synthetic;
        } else if (mode == "files") {
          c.data_mode = DataMode::Files;
        } else {
          throw ParseError("config: data.mode must be \"synthetic\" or \"files\"");
        }
      }
      if (d.contains("synthetic")) c.synthetic = synthetic_spec_from_json(d["synthetic"]);
      if (d.contains("dataset")) c.dataset_path = d["dataset"].get<std::string>();
      if (d.contains("descriptions")) c.descriptions_path = d["descriptions"].get<std::string>();
      if (d.contains("description_spread")) c.description_spread = d["description_spread"].get<double>();
    }
    if (j.contains("backbone_seed")) c.backbone_seed = j["backbone_seed"].get<std::uint64_t>();
    if (j.contains("encoder")) {
      const auto& e = j["encoder"];
      if (e.contains("features")) c.encoder.features = e["features"].get<int>();
      if (e.contains("hidden")) c.encoder.hidden = e["hidden"].get<int>();
      if (e.contains("latent")) c.encoder.latent = e["latent"].get<int>();
    }
    if (j.contains("hyper")) c.hyper = hyperparams_from_json(j["hyper"]);
    if (j.contains("seeds")) c.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
    if (j.contains("heads")) {
      c.heads.clear();
      for (const auto& h : j["heads"]) c.heads.push_back(parse_head(h.get<std::string>()));
    }
    if (j.contains("ablation")) {
      const auto& a = j["ablation"];
      if (a.contains("sc")) c.ablation.use_sc = a["sc"].get<bool>();
      if (a.contains("st")) c.ablation.use_st = a["st"].get<bool>();
      if (a.contains("hm")) c.ablation.use_hm = a["hm"].get<bool>();
      if (a.contains("mi")) c.ablation.use_mi = a["mi"].get<bool>();
      if (a.contains("description_source")) {
        const auto src = a["description_source"].get<std::string>();
        if (src == "k-set") {
          c.ablation.description_source = DescriptionSource::KSet;
        } else if (src == "raw-mean") {
          c.ablation.description_source = DescriptionSource::RawMean;
        } else {
          throw ParseError("config: ablation.description_source must be \"k-set\" or \"raw-mean\"");
        }
      }
    }
    if (j.contains("out")) c.out_dir = j["out"].get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  return c;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("config: invalid JSON: ") + e.what());
  }
  return config_from_json(j);
}

std::string serialize_config(const ExperimentConfig& config) { return to_json(config).dump(2) + "\n"; }

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// ---------------------------------------------------------------------------
// Runs

PreparedData prepare_data(const ExperimentConfig& config, std::uint64_t seed) {
  if (config.data_mode == DataMode::Files) {
    PreparedData d{ingest_dataset(config.dataset_path),
                   ingest_descriptions(config.descriptions_path, config.encoder.latent)};
    if (d.stream.feature_dim != config.encoder.features) {
      throw DomainError("dataset feature dimension " + std::to_string(d.stream.feature_dim) +
                        " does not match encoder features " + std::to_string(config.encoder.features));
    }
    return d;
  }
  SyntheticSpec spec = config.synthetic;
  spec.seed = derive_seed(config.synthetic.seed, seed);
  GeneratedStream gen = generate_stream(spec);

  std::mt19937_64 backbone_rng(config.backbone_seed);
  const EncoderParams backbone = EncoderParams::random(config.encoder, backbone_rng);
  std::map<RelationId, Vector> anchors;
  for (const auto& [r, center] : gen.centers) anchors.emplace(r, encode(backbone, center));
  return {std::move(gen.stream),
          synth_descriptions(derive_seed(spec.seed, 0xDE5C), anchors, config.hyper.k_desc,
                             config.description_spread)};
}

std::string run_id(const ExperimentConfig& config, std::uint64_t seed) {
  // FNV-1a over the serialized config and the seed.
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&](const std::string& s) {
    for (unsigned char ch : s) {
      h ^= ch;
      h *= 0x100000001b3ull;
    }
  };
  mix(serialize_config(config));
  mix("#seed=" + std::to_string(seed));
  return fmt::format("{:016x}", h);
}

namespace {

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

}  // namespace

SeedOutcome run_seed(const ExperimentConfig& config, std::uint64_t seed,
                     const std::optional<fs::path>& run_dir, const PreparedData* data) {
  SeedOutcome outcome;
  outcome.seed = seed;
  outcome.run_id = run_id(config, seed);
  try {
    config.validate();
    std::optional<PreparedData> owned;
    if (!data) {
      owned = prepare_data(config, seed);
      data = &*owned;
    }
    const DescriptionSet descriptions =
        config.ablation.description_source == DescriptionSource::RawMean
            ? data->descriptions.means_only()
            : data->descriptions;
    const HyperParams hp = config.effective_hyperparams();

    if (run_dir) {
      fs::create_directories(*run_dir / "checkpoints");
      write_file(*run_dir / "config.json", serialize_config(config));
    }
    ContinualState state = ContinualState::initialize(config.encoder, hp, config.backbone_seed,
                                                      derive_seed(seed, 1), config.heads);
    for (std::size_t t = 0; t < data->stream.tasks.size(); ++t) {
      run_task(state, data->stream, t, descriptions, hp);
      if (run_dir) {
        write_file(*run_dir / "checkpoints" / fmt::format("task_{}.json", t + 1),
                   checkpoint_json(state).dump() + "\n");
      }
    }
    outcome.reports = state.metrics;
    if (run_dir) {
      std::ostringstream csv;
      write_metrics_csv(csv, outcome.reports, static_cast<int>(data->stream.tasks.size()));
      write_file(*run_dir / "metrics.csv", csv.str());
    }
    outcome.ok = true;
  } catch (const std::exception& e) {
    outcome.ok = false;
    outcome.error = e.what();
    spdlog::error("seed {} failed: {}", seed, e.what());
  }
  return outcome;
}

GenerateSummary cmd_generate(const ExperimentConfig& config, const fs::path& out_dir) {
  config.validate();
  if (config.data_mode != DataMode::Synthetic) {
    throw DomainError("generate: config must use synthetic data mode");
  }
  const PreparedData data = prepare_data(config, config.seeds.front());
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + out_dir.string());

  GenerateSummary summary;
  summary.dataset = out_dir / "dataset.jsonl";
  summary.descriptions = out_dir / "descriptions.jsonl";
  std::ostringstream ds;
  write_dataset(ds, data.stream);
  write_file(summary.dataset, ds.str());
  std::ostringstream dd;
  write_descriptions(dd, data.descriptions);
  write_file(summary.descriptions, dd.str());
  for (const Task& t : data.stream.tasks) summary.dataset_rows += t.train.size() + t.test.size();
  summary.description_rows = data.descriptions.size();
  return summary;
}

bool RunSummary::all_ok() const {
  for (const SeedOutcome& o : outcomes)
    if (!o.ok) return false;
  return true;
}

RunSummary cmd_run(const ExperimentConfig& config, unsigned max_workers) {
  config.validate(true);
  const fs::path out(config.out_dir);
  fs::create_directories(out);

  // File inputs are shared by every seed; load them once.
  std::optional<PreparedData> shared;
  if (config.data_mode == DataMode::Files) shared = prepare_data(config, 0);

  RunSummary summary;
  summary.outcomes.resize(config.seeds.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < config.seeds.size(); i = next++) {
      const std::uint64_t seed = config.seeds[i];
      summary.outcomes[i] = run_seed(config, seed, out / run_id(config, seed),
                                     shared ? &*shared : nullptr);
    }
  };
  const unsigned workers =
      std::max(1u, std::min<unsigned>(max_workers, static_cast<unsigned>(config.seeds.size())));
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::ostringstream csv;
  write_summary_csv(csv, summary);
  write_file(out / "summary.csv", csv.str());
  return summary;
}

void write_summary_csv(std::ostream& out, const RunSummary& summary) {
  out << "seed,run_id,head,status,acc_first,acc_final,drop,message\r\n";
  std::map<Head, std::vector<const MetricsReport*>> by_head;
  for (const SeedOutcome& o : summary.outcomes) {
    if (!o.ok) {
      out << o.seed << ',' << o.run_id << ",,failed,,,," << csv_quote(o.error) << "\r\n";
      continue;
    }
    for (const MetricsReport& r : o.reports) {
      if (r.rows.empty()) continue;
      out << o.seed << ',' << o.run_id << ',' << to_string(r.head) << ",ok,"
          << fmt::format("{:.6f},{:.6f},{:.6f}", r.rows.front().acc_avg, r.final_accuracy(),
                         r.drop())
          << ",\r\n";
      by_head[r.head].push_back(&r);
    }
  }
  for (const auto& [head, reports] : by_head) {
    const double n = static_cast<double>(reports.size());
    auto stats = [&](auto field) {
      double mean = 0.0;
      for (const auto* r : reports) mean += field(*r);
      mean /= n;
      double var = 0.0;
      for (const auto* r : reports) var += std::pow(field(*r) - mean, 2);
      const double sd = reports.size() > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;
      return std::pair{mean, sd};
    };
    const auto first = stats([](const MetricsReport& r) { return r.rows.front().acc_avg; });
    const auto fin = stats([](const MetricsReport& r) { return r.final_accuracy(); });
    const auto drop = stats([](const MetricsReport& r) { return r.drop(); });
    out << "mean,," << to_string(head) << ",ok,"
        << fmt::format("{:.6f},{:.6f},{:.6f}", first.first, fin.first, drop.first) << ",\r\n";
    out << "std,," << to_string(head) << ",ok,"
        << fmt::format("{:.6f},{:.6f},{:.6f}", first.second, fin.second, drop.second) << ",\r\n";
  }
}

// ---------------------------------------------------------------------------
// Reports

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        fields.back() += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.emplace_back();
    } else if (ch != '\r') {
      fields.back() += ch;
    }
  }
  return fields;
}

struct Trajectory {
  std::string source;
  // head -> task -> acc_avg
  std::map<std::string, std::map<int, double>> acc;
  int per_task_columns = 0;
};

Trajectory read_metrics_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open metrics file " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path.string() + ": empty file");
  const auto header = split_csv_line(line);
  auto column = [&](const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw ParseError(path.string() + ": missing column '" + name + "'", 1);
  };
  const std::size_t c_task = column("task");
  const std::size_t c_head = column("head");
  const std::size_t c_acc = column("acc_avg");

  Trajectory t;
  t.source = path.string();
  for (const auto& h : header)
    if (h.rfind("acc_per_task_", 0) == 0) ++t.per_task_columns;

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto f = split_csv_line(line);
    if (f.size() != header.size()) {
      throw ParseError(path.string() + ": expected " + std::to_string(header.size()) + " fields",
                       line_no);
    }
    try {
      t.acc[f[c_head]][std::stoi(f[c_task])] = std::stod(f[c_acc]);
    } catch (const std::logic_error&) {
      throw ParseError(path.string() + ": non-numeric value in column 'task' or 'acc_avg'", line_no);
    }
  }
  return t;
}

}  // namespace

void cmd_report(const std::vector<fs::path>& csv_paths, std::ostream& table, std::ostream& plot_csv) {
  if (csv_paths.empty()) throw DomainError("report: no input files");
  std::vector<Trajectory> inputs;
  for (const auto& p : csv_paths) inputs.push_back(read_metrics_csv(p));
  for (const Trajectory& t : inputs) {
    if (t.per_task_columns != inputs.front().per_task_columns) {
      throw ParseError("report: schema mismatch: " + t.source + " has " +
                       std::to_string(t.per_task_columns) + " acc_per_task columns, " +
                       inputs.front().source + " has " +
                       std::to_string(inputs.front().per_task_columns));
    }
  }

  plot_csv << "source,head,task,acc_avg,dri_minus_ncm\r\n";
  for (const Trajectory& t : inputs) {
    int max_task = 0;
    for (const auto& [head, rows] : t.acc)
      for (const auto& [task, _] : rows) max_task = std::max(max_task, task);

    const auto ncm = t.acc.find("ncm");
    const auto dri = t.acc.find("dri");
    const bool paired = ncm != t.acc.end() && dri != t.acc.end();
    auto delta = [&](int task) -> std::optional<double> {
      if (!paired) return std::nullopt;
      auto a = dri->second.find(task);
      auto b = ncm->second.find(task);
      if (a == dri->second.end() || b == ncm->second.end()) return std::nullopt;
      return a->second - b->second;
    };

    table << t.source << '\n' << fmt::format("{:<8}", "head");
    for (int task = 1; task <= max_task; ++task) table << fmt::format("{:>9}", "T" + std::to_string(task));
    table << '\n';
    for (const auto& [head, rows] : t.acc) {
      table << fmt::format("{:<8}", head);
      for (int task = 1; task <= max_task; ++task) {
        auto it = rows.find(task);
        table << (it == rows.end() ? fmt::format("{:>9}", "-") : fmt::format("{:>9.4f}", it->second));
      }
      table << '\n';
      for (const auto& [task, acc] : rows) {
        const auto d = delta(task);
        plot_csv << csv_quote(t.source) << ',' << head << ',' << task << ','
                 << fmt::format("{:.6f}", acc) << ',' << (d ? fmt::format("{:.6f}", *d) : "")
                 << "\r\n";
      }
    }
    if (paired) {
      table << fmt::format("{:<8}", "dri-ncm");
      for (int task = 1; task <= max_task; ++task) {
        const auto d = delta(task);
        table << (d ? fmt::format("{:>+9.4f}", *d) : fmt::format("{:>9}", "-"));
      }
      table << '\n';
    }
    table << '\n';
  }
}

}  // namespace fcre
