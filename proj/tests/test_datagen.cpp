#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "fcre/datagen.hpp"

using fcre::SyntheticSpec;

TEST_CASE("protocol shape of the default stream") {
  const SyntheticSpec spec;  // 8 tasks x 5-way x 5-shot, f = 32
  const auto gen = fcre::generate_stream(spec);
  const auto& stream = gen.stream;
  REQUIRE(stream.tasks.size() == 8);
  CHECK(stream.feature_dim == 32);
  CHECK(gen.centers.size() == 40);

  std::set<fcre::RelationId> all;
  for (std::size_t t = 0; t < 8; ++t) {
    const auto& task = stream.tasks[t];
    CHECK(task.relations.size() == 5);
    CHECK(task.train.size() == (t == 0 ? 5u * 100u : 25u));
    CHECK(task.test.size() == 5u * 20u);
    for (fcre::RelationId r : task.relations) {
      CHECK(all.insert(r).second);
      CHECK(task.test_pool(r).size() == 20);
    }
  }
  // Dense, globally unique ids.
  CHECK(*all.begin() == 0);
  CHECK(*all.rbegin() == 39);
  CHECK_NOTHROW(stream.validate());

  // Unit centers respecting the minimum angle.
  for (const auto& [a, ca] : gen.centers) {
    CHECK(ca.norm() == doctest::Approx(1.0));
    for (const auto& [b, cb] : gen.centers)
      if (a < b) CHECK(ca.dot(cb) <= std::cos(spec.cluster_separation) + 1e-12);
  }
}

TEST_CASE("generation is deterministic and noise-free samples equal their centers") {
  SyntheticSpec spec;
  spec.n_tasks = 3;
  spec.seed = 17;
  CHECK(fcre::generate_stream(spec).stream == fcre::generate_stream(spec).stream);

  spec.within_class_noise = 0.0;
  const auto gen = fcre::generate_stream(spec);
  for (const auto& task : gen.stream.tasks) {
    for (const auto& s : task.train) CHECK(s.features == gen.centers.at(s.relation));
    for (const auto& s : task.test) CHECK(s.features == gen.centers.at(s.relation));
  }
}

TEST_CASE("infeasible separation suggests a smaller value") {
  SyntheticSpec spec;
  spec.feature_dim = 2;
  spec.cluster_separation = 1.5;
  CHECK_THROWS_WITH_AS(fcre::generate_stream(spec), doctest::Contains("smaller cluster_separation"),
                       fcre::DomainError);
  spec.n_way = 0;
  CHECK_THROWS_AS(fcre::generate_stream(spec), fcre::DomainError);
}

TEST_CASE("dataset files") {
  SUBCASE("hand-written two-task file") {
    const std::string text =
        "{\"task\":1,\"relation\":0,\"split\":\"train\",\"features\":[1.0,0.0]}\n"
        "{\"task\":1,\"relation\":0,\"split\":\"test\",\"features\":[0.9,0.1]}\n"
        "{\"task\":2,\"relation\":1,\"split\":\"train\",\"features\":[0.0,1.0]}\n"
        "{\"task\":2,\"relation\":1,\"split\":\"test\",\"features\":[0.1,0.9]}\n";
    std::istringstream in(text);
    const auto stream = fcre::parse_dataset(in);
    CHECK(stream.tasks.size() == 2);
    CHECK(stream.feature_dim == 2);
    std::ostringstream out;
    fcre::write_dataset(out, stream);
    CHECK(out.str() == text);
  }

  SUBCASE("overlapping relation is named") {
    std::istringstream in(
        "{\"task\":1,\"relation\":7,\"split\":\"train\",\"features\":[1.0]}\n"
        "{\"task\":2,\"relation\":7,\"split\":\"train\",\"features\":[1.0]}\n");
    CHECK_THROWS_WITH_AS(fcre::parse_dataset(in), doctest::Contains("relation 7"), fcre::ParseError);
  }

  SUBCASE("errors carry line numbers") {
    std::istringstream bad_dim(
        "{\"task\":1,\"relation\":0,\"split\":\"train\",\"features\":[1.0,2.0]}\n"
        "{\"task\":1,\"relation\":0,\"split\":\"train\",\"features\":[1.0]}\n");
    CHECK_THROWS_WITH_AS(fcre::parse_dataset(bad_dim), doctest::Contains("line 2"), fcre::ParseError);
    std::istringstream bad_split("{\"task\":1,\"relation\":0,\"split\":\"dev\",\"features\":[1.0]}\n");
    CHECK_THROWS_WITH_AS(fcre::parse_dataset(bad_split), doctest::Contains("line 1"), fcre::ParseError);
  }

  SUBCASE("generated stream round-trips byte-identically") {
    SyntheticSpec spec;
    spec.n_tasks = 3;
    spec.task1_oversample = 7;
    const auto stream = fcre::generate_stream(spec).stream;
    std::ostringstream first;
    fcre::write_dataset(first, stream);
    std::istringstream in(first.str());
    const auto back = fcre::parse_dataset(in);
    CHECK(back == stream);
    std::ostringstream second;
    fcre::write_dataset(second, back);
    CHECK(second.str() == first.str());
  }
}

TEST_CASE("spec JSON round-trip") {
  SyntheticSpec spec;
  spec.n_tasks = 4;
  spec.within_class_noise = 0.3;
  spec.seed = 99;
  CHECK(fcre::synthetic_spec_from_json(fcre::to_json(spec)) == spec);
}
