#pragma once

#include <cstddef>
#include <istream>
#include <ostream>
#include <span>
#include <vector>

namespace oger {

/// Toy autoregressive categorical policy with one logit row per
/// (query bucket, position). The token distribution at a position is
/// softmax(logits / temperature).
class TabularPolicy {
 public:
  TabularPolicy() = default;
  TabularPolicy(std::size_t buckets, std::size_t positions, std::size_t vocab,
                double temperature = 1.0);

  std::size_t buckets() const { return buckets_; }
  std::size_t positions() const { return positions_; }
  std::size_t vocab() const { return vocab_; }
  double temperature() const { return temperature_; }
  void set_temperature(double t);

  std::size_t num_params() const { return logits_.size(); }
  std::size_t index(std::size_t bucket, std::size_t position, std::size_t token) const {
    return (bucket * positions_ + position) * vocab_ + token;
  }
  std::span<double> params() { return logits_; }
  std::span<const double> params() const { return logits_; }
  std::span<const double> row(std::size_t bucket, std::size_t position) const {
    return {logits_.data() + index(bucket, position, 0), vocab_};
  }

  std::vector<double> distribution(std::size_t bucket, std::size_t position) const;
  double prob(std::size_t bucket, std::size_t position, std::size_t token) const;

  /// JSON snapshot; doubles are written in shortest round-trip form so equal
  /// policies produce byte-identical files.
  void save(std::ostream& out) const;
  static TabularPolicy load(std::istream& in);

  friend bool operator==(const TabularPolicy&, const TabularPolicy&) = default;

 private:
  std::size_t buckets_ = 0;
  std::size_t positions_ = 0;
  std::size_t vocab_ = 0;
  double temperature_ = 1.0;
  std::vector<double> logits_;
};

/// softmax(z / temperature), max-shifted.
std::vector<double> softmax(std::span<const double> logits, double temperature);

}  // namespace oger
