#include "oger/policy.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"
#include "oger/error.hpp"

namespace oger {

std::vector<double> softmax(std::span<const double> logits, double temperature) {
  std::vector<double> out(logits.size());
  if (logits.empty()) return out;
  const double top = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp((logits[i] - top) / temperature);
    sum += out[i];
  }
  for (double& p : out) p /= sum;
  return out;
}

TabularPolicy::TabularPolicy(std::size_t buckets, std::size_t positions, std::size_t vocab,
                             double temperature)
    : buckets_(buckets),
      positions_(positions),
      vocab_(vocab),
      logits_(buckets * positions * vocab, 0.0) {
  if (buckets == 0 || positions == 0 || vocab == 0) {
    throw InvalidArgument("TabularPolicy: every dimension must be positive");
  }
  set_temperature(temperature);
}

void TabularPolicy::set_temperature(double t) {
  if (!(t > 0.0) || !std::isfinite(t)) throw InvalidArgument("temperature must be positive");
  temperature_ = t;
}

std::vector<double> TabularPolicy::distribution(std::size_t bucket, std::size_t position) const {
  return softmax(row(bucket, position), temperature_);
}

double TabularPolicy::prob(std::size_t bucket, std::size_t position, std::size_t token) const {
  return distribution(bucket, position)[token];
}

void TabularPolicy::save(std::ostream& out) const {
  nlohmann::ordered_json j;
  j["format"] = "oger-tabular-policy-v1";
  j["buckets"] = buckets_;
  j["positions"] = positions_;
  j["vocab"] = vocab_;
  j["temperature"] = temperature_;
  j["logits"] = logits_;
  out << j.dump() << '\n';
}

TabularPolicy TabularPolicy::load(std::istream& in) {
  nlohmann::json j;
  try {
    in >> j;
    if (j.at("format") != "oger-tabular-policy-v1") throw ParseError("unknown snapshot format");
    TabularPolicy p(j.at("buckets").get<std::size_t>(), j.at("positions").get<std::size_t>(),
                    j.at("vocab").get<std::size_t>(), j.at("temperature").get<double>());
    auto logits = j.at("logits").get<std::vector<double>>();
    if (logits.size() != p.num_params()) throw ParseError("snapshot logits have the wrong size");
    for (double x : logits) {
      if (!std::isfinite(x)) throw ParseError("snapshot has non-finite logits");
    }
    p.logits_ = std::move(logits);
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("policy snapshot: ") + e.what());
  }
}

}  // namespace oger
