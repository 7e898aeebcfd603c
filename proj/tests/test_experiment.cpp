#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "fcre/experiment.hpp"

namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("fcre-test-" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  out << s;
}

fcre::ExperimentConfig tiny_config(const fs::path& out) {
  fcre::ExperimentConfig c;
  c.synthetic.n_tasks = 2;
  c.synthetic.task1_oversample = 5;
  c.synthetic.test_per_relation = 4;
  c.hyper.epochs_current = 1;
  c.hyper.epochs_memory = 1;
  c.seeds = {1, 2};
  c.out_dir = out.string();
  return c;
}

int run_cli(const std::string& args, const std::string& stdout_path = "/dev/null") {
  const std::string cmd =
      std::string(FCRE_CLI_PATH) + " --log-level error " + args + " > " + stdout_path + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("config round-trip") {
  fcre::ExperimentConfig c;
  c.synthetic.within_class_noise = 0.18;
  c.hyper.alpha = 0.25;
  c.hyper.learning_rate = 3e-4;
  c.seeds = {7, 11};
  c.heads = {fcre::Head::Dri};
  c.ablation.use_mi = false;
  c.ablation.description_source = fcre::DescriptionSource::RawMean;
  const std::string text = fcre::serialize_config(c);
  const auto back = fcre::config_from_json(nlohmann::json::parse(text));
  CHECK(back == c);
  CHECK(fcre::serialize_config(back) == text);

  // Missing keys keep defaults.
  CHECK(fcre::config_from_json(nlohmann::json::parse("{}")) == fcre::ExperimentConfig{});
  CHECK_THROWS_AS(fcre::config_from_json(nlohmann::json::parse(R"({"data": {"mode": "web"}})")), fcre::ParseError);
  CHECK_THROWS_AS(fcre::config_from_json(nlohmann::json::parse(R"({"seeds": "x"})")), fcre::ParseError);
}

TEST_CASE("config validation") {
  fcre::ExperimentConfig c;
  CHECK_NOTHROW(c.validate());
  c.seeds.clear();
  CHECK_THROWS_AS(c.validate(), fcre::DomainError);
  c = {};
  c.encoder.features = 16;
  CHECK_THROWS_AS(c.validate(), fcre::DomainError);
  c = {};
  c.ablation = {false, false, false, false, fcre::DescriptionSource::KSet};
  CHECK_THROWS_AS(c.validate(), fcre::DomainError);
  c = {};
  c.data_mode = fcre::DataMode::Files;
  c.dataset_path = "/nonexistent/data.jsonl";
  c.descriptions_path = "/nonexistent/desc.jsonl";
  CHECK_NOTHROW(c.validate());
  CHECK_THROWS_AS(c.validate(true), fcre::DomainError);
}

TEST_CASE("generate writes the expected files") {
  TempDir tmp;
  fcre::ExperimentConfig c;  // 8 x 5-way x 5-shot, 20 test, task 1 oversampled to 100
  const auto s = fcre::cmd_generate(c, tmp.path / "a");
  CHECK(s.dataset_rows == 8u * 5u * (5u + 20u) + 5u * (100u - 5u));
  CHECK(s.description_rows == 40);

  std::size_t lines = 0;
  std::ifstream in(s.dataset);
  for (std::string line; std::getline(in, line);) ++lines;
  CHECK(lines == s.dataset_rows);

  const auto again = fcre::cmd_generate(c, tmp.path / "b");
  CHECK(slurp(s.dataset) == slurp(again.dataset));
  CHECK(slurp(s.descriptions) == slurp(again.descriptions));

  // Generated files feed a file-mode run and reproduce the synthetic data.
  const auto synthetic = fcre::prepare_data(c, c.seeds.front());
  fcre::ExperimentConfig files = c;
  files.data_mode = fcre::DataMode::Files;
  files.dataset_path = s.dataset.string();
  files.descriptions_path = s.descriptions.string();
  const auto loaded = fcre::prepare_data(files, 0);
  CHECK(loaded.stream == synthetic.stream);
  CHECK(loaded.descriptions == synthetic.descriptions);
}

TEST_CASE("run writes per-seed directories and is reproducible") {
  TempDir tmp;
  auto c = tiny_config(tmp.path / "first");
  const auto summary = fcre::cmd_run(c, 2);
  REQUIRE(summary.all_ok());
  for (std::uint64_t seed : c.seeds) {
    const fs::path dir = tmp.path / "first" / fcre::run_id(c, seed);
    CHECK(fs::exists(dir / "config.json"));
    CHECK(fs::exists(dir / "checkpoints" / "task_1.json"));
    CHECK(fs::exists(dir / "checkpoints" / "task_2.json"));
    CHECK(fcre::load_config(dir / "config.json") == c);
    const std::string metrics = slurp(dir / "metrics.csv");
    CHECK(std::count(metrics.begin(), metrics.end(), '\n') == 1 + 2 * 2);
  }
  std::ostringstream csv;
  fcre::write_summary_csv(csv, summary);
  CHECK(csv.str().find("mean,,ncm,ok,") != std::string::npos);
  CHECK(csv.str().find("std,,dri,ok,") != std::string::npos);

  auto c2 = c;
  c2.out_dir = (tmp.path / "second").string();
  REQUIRE(fcre::cmd_run(c2, 1).all_ok());
  for (std::uint64_t seed : c.seeds) {
    // The out dir is part of the config, so the run ids differ; contents must not.
    CHECK(slurp(tmp.path / "first" / fcre::run_id(c, seed) / "metrics.csv") ==
          slurp(tmp.path / "second" / fcre::run_id(c2, seed) / "metrics.csv"));
  }
  CHECK(fcre::run_id(c, 1) != fcre::run_id(c, 2));
}

TEST_CASE("a failing seed is recorded") {
  TempDir tmp;
  auto c = tiny_config(tmp.path);
  c.synthetic.cluster_separation = 3.0;  // no room for 10 centers this far apart
  const auto summary = fcre::cmd_run(c, 1);
  CHECK(!summary.all_ok());
  std::ostringstream csv;
  fcre::write_summary_csv(csv, summary);
  CHECK(csv.str().find(",failed,") != std::string::npos);
}

TEST_CASE("a run without training epochs completes") {
  TempDir tmp;
  auto c = tiny_config(tmp.path);
  c.hyper.epochs_current = c.hyper.epochs_memory = 0;
  c.seeds = {3};
  const auto out = fcre::run_seed(c, 3);
  REQUIRE(out.ok);
  for (const auto& r : out.reports) CHECK(r.rows.size() == 2);
}

TEST_CASE("report") {
  TempDir tmp;
  spit(tmp.path / "a.csv",
       "task,head,acc_avg,acc_per_task_1,acc_per_task_2,drop,delta\r\n"
       "1,ncm,0.900000,0.900000,,0.000000,0.000000\r\n"
       "2,ncm,0.600000,0.500000,0.700000,0.300000,-0.300000\r\n"
       "1,dri,0.950000,0.950000,,0.000000,0.000000\r\n"
       "2,dri,0.700000,0.600000,0.800000,0.250000,-0.250000\r\n");
  std::ostringstream table, plot;
  fcre::cmd_report({tmp.path / "a.csv"}, table, plot);
  CHECK(table.str().find("dri-ncm") != std::string::npos);
  CHECK(table.str().find("+0.0500") != std::string::npos);
  CHECK(table.str().find("+0.1000") != std::string::npos);
  const std::string p = plot.str();
  CHECK(p.find("source,head,task,acc_avg,dri_minus_ncm\r\n") == 0);
  CHECK(p.find(",dri,2,0.700000,0.100000\r\n") != std::string::npos);
  CHECK(p.find(",ncm,1,0.900000,0.050000\r\n") != std::string::npos);

  spit(tmp.path / "bad.csv", "task,head,accuracy\r\n1,ncm,0.5\r\n");
  CHECK_THROWS_WITH_AS(fcre::cmd_report({tmp.path / "bad.csv"}, table, plot), doctest::Contains("acc_avg"),
                       fcre::ParseError);

  spit(tmp.path / "three.csv", "task,head,acc_avg,acc_per_task_1,acc_per_task_2,acc_per_task_3,drop\r\n");
  CHECK_THROWS_WITH_AS(fcre::cmd_report({tmp.path / "a.csv", tmp.path / "three.csv"}, table, plot),
                       doctest::Contains("schema mismatch"), fcre::ParseError);
}

TEST_CASE("command-line exit codes") {
  TempDir tmp;
  const auto c = tiny_config(tmp.path / "runs");
  spit(tmp.path / "ok.json", fcre::serialize_config(c));
  CHECK(run_cli("run --config " + (tmp.path / "ok.json").string() + " --seed 4") == 0);

  auto failing = c;
  failing.synthetic.cluster_separation = 3.0;
  spit(tmp.path / "fail.json", fcre::serialize_config(failing));
  CHECK(run_cli("run --config " + (tmp.path / "fail.json").string()) == 1);

  spit(tmp.path / "broken.json", "{not json");
  CHECK(run_cli("run --config " + (tmp.path / "broken.json").string()) == 2);

  // Flags override config keys.
  const fs::path printed = tmp.path / "printed.json";
  CHECK(run_cli("run --config " + (tmp.path / "ok.json").string() +
                " --seed 9,10 --head dri --no-mi --k-desc 3 --alpha 0.7 --epsilon 30 --out x --print-config",
                printed.string()) == 0);
  const auto resolved = fcre::load_config(printed);
  CHECK(resolved.seeds == std::vector<std::uint64_t>{9, 10});
  CHECK(resolved.heads == std::vector<fcre::Head>{fcre::Head::Dri});
  CHECK(!resolved.ablation.use_mi);
  CHECK(resolved.hyper.k_desc == 3);
  CHECK(resolved.hyper.alpha == 0.7);
  CHECK(resolved.hyper.epsilon == 30.0);
  CHECK(resolved.out_dir == "x");

  CHECK(run_cli("generate --out " + (tmp.path / "gen").string()) == 0);
  CHECK(fs::exists(tmp.path / "gen" / "dataset.jsonl"));
}
