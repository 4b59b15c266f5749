#include "oger/embedding.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"
#include "oger/error.hpp"
#include "oger/rng.hpp"

namespace oger {

double EmbeddingVector::norm() const {
  double sum = 0.0;
  for (double x : values) sum += x * x;
  return std::sqrt(sum);
}

bool EmbeddingVector::is_zero() const {
  return std::all_of(values.begin(), values.end(), [](double x) { return x == 0.0; });
}

void EncoderSpec::validate() const {
  if (d < 1) throw ConfigError("encoder.d must be at least 1");
  if (kind == Kind::kReference) {
    if (ngram_orders.empty()) throw ConfigError("encoder.ngram_orders must be non-empty");
    for (auto n : ngram_orders) {
      if (n < 1) throw ConfigError("encoder.ngram_orders entries must be positive");
    }
  }
}

std::size_t ngram_bucket(std::string_view gram, const EncoderSpec& spec) {
  return static_cast<std::size_t>(hash_bytes(gram, spec.seed ^ gram.size()) % spec.d);
}

EmbeddingVector encode(std::string_view text, const EncoderSpec& spec) {
  spec.validate();
  if (spec.kind != EncoderSpec::Kind::kReference) {
    throw InvalidArgument("encode: external encoders are replayed from an EmbeddingCache");
  }
  EmbeddingVector out{std::vector<double>(spec.d, 0.0)};
  for (auto n : spec.ngram_orders) {
    if (text.size() < n) continue;
    for (std::size_t i = 0; i + n <= text.size(); ++i) {
      out.values[ngram_bucket(text.substr(i, n), spec)] += 1.0;
    }
  }
  const double norm = out.norm();
  if (norm > 0.0) {
    for (double& x : out.values) x /= norm;
  }
  return out;
}

double cosine(const EmbeddingVector& u, const EmbeddingVector& v) {
  if (u.d() != v.d()) {
    throw InvalidArgument("cosine: dimension mismatch (" + std::to_string(u.d()) + " vs " +
                          std::to_string(v.d()) + ")");
  }
  const double nu = u.norm();
  const double nv = v.norm();
  if (nu == 0.0 || nv == 0.0) return 0.0;
  double dot = 0.0;
  for (std::size_t i = 0; i < u.d(); ++i) dot += u.values[i] * v.values[i];
  return std::clamp(dot / (nu * nv), -1.0, 1.0);
}

EmbeddingCache EmbeddingCache::read(std::istream& in) {
  EmbeddingCache cache;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto j = nlohmann::json::parse(line);
      EmbeddingVector v{j.at("vector").get<std::vector<double>>()};
      cache.put(j.at("id").get<std::string>(), std::move(v));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("embedding cache line " + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      throw ParseError("embedding cache line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return cache;
}

void EmbeddingCache::write(std::ostream& out) const {
  for (const auto& [id, v] : entries_) {
    nlohmann::ordered_json j;
    j["id"] = id;
    j["vector"] = v.values;
    out << j.dump() << '\n';
  }
}

void EmbeddingCache::put(std::string id, EmbeddingVector v) {
  if (v.d() == 0) throw InvalidArgument("embedding for '" + id + "' is empty");
  for (double x : v.values) {
    if (!std::isfinite(x)) throw InvalidArgument("embedding for '" + id + "' is not finite");
  }
  if (d_ != 0 && v.d() != d_) {
    throw InvalidArgument("embedding for '" + id + "' has d=" + std::to_string(v.d()) +
                          ", cache has d=" + std::to_string(d_));
  }
  d_ = v.d();
  entries_.insert_or_assign(std::move(id), std::move(v));
}

const EmbeddingVector* EmbeddingCache::find(const std::string& id) const {
  auto it = entries_.find(id);
  return it == entries_.end() ? nullptr : &it->second;
}

}  // namespace oger
