#pragma once

#include <cstddef>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include "oger/curation.hpp"
#include "oger/embedding.hpp"
#include "oger/grpo.hpp"
#include "oger/sim.hpp"

namespace oger {

struct EvaluationConfig {
  std::size_t rollouts = 8;
  std::vector<std::size_t> k = {1, 8};
  double temperature = 1.0;
};

/// Every tunable of the toolkit. Files use a flat sectioned key-value format:
///
///   # comment
///   [optimizer]
///   clip_eps = 0.2
///
/// Precedence is defaults < file < command-line overrides.
struct RunConfig {
  CurationConfig curation;
  EncoderSpec encoder;
  std::string encoder_cache;  ///< embedding cache for external encoders
  std::size_t replace_k = 1;
  OptimizerConfig optimizer;
  sim::SimConfig simulation;
  EvaluationConfig evaluation;

  /// Fully qualified keys ("section.key") in serialization order.
  static const std::vector<std::string>& keys();

  /// Throws ConfigError naming the key when it is unknown or the value does
  /// not parse.
  void set(std::string_view key, std::string_view value);
  std::string get(std::string_view key) const;

  /// Applies a config file on top of the current values.
  void merge_file(std::istream& in, std::string_view origin = "<config>");
  void merge_file(const std::string& path);

  /// Canonical file form; parsing it back reproduces the config exactly.
  std::string serialize() const;

  /// Simulation config with the replacement, optimizer and encoder sections
  /// folded in.
  sim::SimConfig sim_config() const;

  void validate() const;
};

/// "1,2,3" -> {1, 2, 3}. Throws ConfigError on malformed input.
std::vector<std::size_t> parse_size_list(std::string_view csv, std::string_view key);
std::vector<std::string> split_csv(std::string_view csv);

}  // namespace oger
