#include "fcre/descriptions.hpp"

#include <fstream>
#include <random>
#include <string>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

namespace fcre {

void DescriptionSet::add(RelationId r, Matrix vectors) {
  if (vectors.rows() < 1 || vectors.cols() < 1) {
    throw DomainError("descriptions: relation " + std::to_string(r) + " has no vectors");
  }
  if (entries_.empty()) {
    k_ = vectors.cols();
    dim_ = vectors.rows();
  }
  if (vectors.rows() != dim_) {
    throw DomainError("descriptions: relation " + std::to_string(r) + " has dimension " +
                      std::to_string(vectors.rows()) + ", expected " + std::to_string(dim_));
  }
  if (vectors.cols() != k_) {
    throw DomainError("descriptions: relation " + std::to_string(r) + " has " +
                      std::to_string(vectors.cols()) + " vectors, expected " +
                      std::to_string(k_));
  }
  if (contains(r)) throw ProtocolError("descriptions: duplicate relation " + std::to_string(r));
  if (!vectors.allFinite()) {
    throw DomainError("descriptions: relation " + std::to_string(r) + " has non-finite entries");
  }
  for (Eigen::Index i = 0; i < vectors.cols(); ++i) {
    if (vectors.col(i).norm() == 0.0) {
      throw DomainError("descriptions: relation " + std::to_string(r) + " vector " +
                        std::to_string(i) + " is zero");
    }
  }
  Vector mean = vectors.rowwise().mean();
  if (mean.norm() == 0.0) {
    spdlog::warn("descriptions: mean of relation {} is the zero vector", r);
  }
  entries_.emplace(r, Entry{std::move(vectors), std::move(mean)});
}

const Matrix& DescriptionSet::vectors(RelationId r) const {
  auto it = entries_.find(r);
  if (it == entries_.end()) throw DomainError("descriptions: unknown relation " + std::to_string(r));
  return it->second.vectors;
}

const Vector& DescriptionSet::mean(RelationId r) const {
  auto it = entries_.find(r);
  if (it == entries_.end()) throw DomainError("descriptions: unknown relation " + std::to_string(r));
  return it->second.mean;
}

std::vector<RelationId> DescriptionSet::relations() const {
  std::vector<RelationId> out;
  out.reserve(entries_.size());
  for (const auto& [r, _] : entries_) out.push_back(r);
  return out;
}

void DescriptionSet::merge(const DescriptionSet& other) {
  for (const auto& [r, e] : other.entries_) add(r, e.vectors);
}

DescriptionSet DescriptionSet::subset(std::span<const RelationId> relations) const {
  DescriptionSet out;
  for (RelationId r : relations) out.add(r, vectors(r));
  return out;
}

DescriptionSet DescriptionSet::means_only() const {
  DescriptionSet out;
  for (const auto& [r, e] : entries_) out.add(r, e.mean);
  return out;
}

bool DescriptionSet::operator==(const DescriptionSet& other) const {
  if (k_ != other.k_ || dim_ != other.dim_ || entries_.size() != other.entries_.size()) return false;
  auto a = entries_.begin();
  auto b = other.entries_.begin();
  for (; a != entries_.end(); ++a, ++b) {
    if (a->first != b->first || a->second.vectors != b->second.vectors) return false;
  }
  return true;
}

Vector mean_description(const DescriptionSet& set, RelationId r) { return set.mean(r); }

DescriptionSet parse_descriptions(std::istream& in, Eigen::Index expected_dim) {
  DescriptionSet set;
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
    if (!j.is_object() || !j.contains("relation") || !j.contains("vectors")) {
      throw ParseError("expected object with \"relation\" and \"vectors\"", line_no);
    }
    if (!j["relation"].is_number_integer()) throw ParseError("\"relation\" must be an integer", line_no);
    const auto r = j["relation"].get<RelationId>();
    const auto& vecs = j["vectors"];
    if (!vecs.is_array() || vecs.empty()) {
      throw ParseError("relation " + std::to_string(r) + ": \"vectors\" must be a non-empty array",
                       line_no);
    }
    Matrix m(expected_dim, static_cast<Eigen::Index>(vecs.size()));
    for (std::size_t k = 0; k < vecs.size(); ++k) {
      const auto& v = vecs[k];
      if (!v.is_array() || static_cast<Eigen::Index>(v.size()) != expected_dim) {
        throw ParseError("relation " + std::to_string(r) + ": vector " + std::to_string(k) +
                             " must have " + std::to_string(expected_dim) + " numbers",
                         line_no);
      }
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number()) {
          throw ParseError("relation " + std::to_string(r) + ": non-numeric entry", line_no);
        }
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = v[i].get<double>();
      }
    }
    try {
      set.add(r, std::move(m));
    } catch (const std::logic_error& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return set;
}

DescriptionSet ingest_descriptions(const std::filesystem::path& path, Eigen::Index expected_dim) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open description file " + path.string());
  return parse_descriptions(in, expected_dim);
}

void write_descriptions(std::ostream& out, const DescriptionSet& set) {
  for (RelationId r : set.relations()) {
    const Matrix& m = set.vectors(r);
    nlohmann::ordered_json j;
    j["relation"] = r;
    auto& vecs = j["vectors"] = nlohmann::ordered_json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) {
      vecs.push_back(std::vector<double>(m.col(k).data(), m.col(k).data() + m.rows()));
    }
    out << j.dump() << '\n';
  }
}

DescriptionSet synth_descriptions(std::uint64_t seed, const std::map<RelationId, Vector>& centers,
                                  int k, double spread) {
  if (centers.empty()) throw DomainError("synth_descriptions: need at least one relation");
  if (k < 1) throw DomainError("synth_descriptions: k must be >= 1");
  if (!(spread >= 0.0)) throw DomainError("synth_descriptions: spread must be >= 0");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  DescriptionSet set;
  for (const auto& [r, center] : centers) {
    if (center.size() < 1) throw DomainError("synth_descriptions: empty center");
    const double norm = center.norm();
    if (norm == 0.0) {
      throw DomainError("synth_descriptions: center of relation " + std::to_string(r) + " is zero");
    }
    const Vector dir = center / norm;
    Matrix m(center.size(), k);
    for (int i = 0; i < k; ++i) {
      Vector v = dir;
      for (Eigen::Index j = 0; j < v.size(); ++j) v(j) += spread * gauss(rng);
      m.col(i) = v.normalized();
    }
    set.add(r, std::move(m));
  }
  return set;
}

}  // namespace fcre
