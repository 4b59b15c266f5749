#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "oger/curation.hpp"
#include "oger/embedding.hpp"
#include "oger/exploration_reward.hpp"
#include "oger/grpo.hpp"
#include "oger/policy.hpp"
#include "oger/rng.hpp"
#include "oger/trajectory.hpp"

namespace oger::sim {

// Vocabulary: 16 reasoning symbols, 10 answer digits, 1 terminator.
inline constexpr int kReasoningSymbols = 16;
inline constexpr int kDigitBase = 16;
inline constexpr int kTerminator = 26;
inline constexpr int kVocabSize = 27;

// Reasoning symbols 0-9 name operands; the rest are connectives.
inline constexpr int kPlus = 10;
inline constexpr int kEquals = 11;
inline constexpr int kSo = 12;
inline constexpr int kThen = 13;
inline constexpr int kThus = 14;
inline constexpr int kHmm = 15;

inline constexpr std::size_t kNumQueries = 100;

/// Query "a+b" with gold answer (a + b) mod 10.
struct SymbolSumTask {
  int a = 0;
  int b = 0;

  int gold() const { return (a + b) % 10; }
  std::string gold_answer() const { return std::to_string(gold()); }
  std::string query_id() const;
  std::size_t bucket() const { return static_cast<std::size_t>(a * 10 + b); }

  static SymbolSumTask from_bucket(std::size_t bucket);
  /// Parses ids produced by query_id(). Throws InvalidArgument otherwise.
  static SymbolSumTask from_query_id(std::string_view id);
};

std::vector<SymbolSumTask> all_tasks();

/// Space-separated token names, terminator omitted.
std::string render_text(std::span<const std::int32_t> tokens);

/// The digit immediately before the terminator, or "" for unfinished or
/// malformed responses.
std::string extract_answer(std::span<const std::int32_t> tokens);

/// One sampled response plus the distributions it was drawn from.
struct Rollout {
  Trajectory trajectory;
  std::vector<std::vector<double>> position_probs;
  TokenDistribution last_token;
};

/// n autoregressive samples at `temperature`, each capped at `max_len` tokens.
std::vector<Rollout> rollout(const TabularPolicy& policy, const SymbolSumTask& task,
                             std::size_t n, double temperature, std::size_t max_len,
                             CounterRng& rng, std::string_view id_prefix = "r");

/// Scripted teachers: "minimal", "padded", "longform".
std::vector<std::string> teacher_names();
Trajectory teacher_generate(std::string_view teacher_id, const SymbolSumTask& task);

/// Teacher corpus for every query, passed through curation.
CurationResult build_offline_corpus(std::span<const std::string> teachers, std::size_t max_len);

enum class Variant { kOger, kNoRefinement, kNoReward, kGrpo };

Variant parse_variant(std::string_view name);
std::string_view variant_name(Variant v);
ExplorationMode exploration_mode(Variant v);

struct SimConfig {
  std::size_t steps = 300;
  std::size_t batch_queries = 8;
  std::size_t group_size = 8;
  double temperature = 1.0;
  std::size_t max_len = 12;
  Variant variant = Variant::kOger;
  std::size_t replace_k = 1;
  std::uint64_t seed = 0;
  std::size_t snapshot_every = 50;
  std::vector<std::string> teachers = {"minimal", "padded", "longform"};
  double init_scale = 0.5;
  EncoderSpec encoder;
  OptimizerConfig optimizer;

  void validate() const;
};

struct StepMetrics {
  std::size_t step = 0;
  double mean_entropy = 0.0;
  double avg_score = 0.0;
  double failed_ratio = 0.0;
  double oger_mean = 0.0;
  double oger_max = 0.0;
  double loss = 0.0;
  std::size_t rollouts = 0;
  std::size_t correct = 0;
};

std::string metrics_to_json(const StepMetrics& m);

/// Everything computed for one query in one step, kept for inspection.
struct GroupTrace {
  SymbolSumTask task;
  std::vector<Rollout> rollouts;
  std::vector<RewardBreakdown> online_rewards;
  HybridGroup hybrid;
  std::vector<RewardBreakdown> hybrid_rewards;
  AdvantageSet advantages;
  double loss = 0.0;
};

struct TrainState {
  TabularPolicy policy;
  TabularPolicy reference;  ///< initial policy, used by the optional KL term
  std::size_t step = 0;
  std::map<std::string, TrajectoryGroup> offline;  ///< keyed by query_id
  std::map<std::string, std::vector<EmbeddingVector>> offline_embeddings;
};

/// Initial policy and curated offline corpus for `cfg`.
TrainState initial_state(const SimConfig& cfg);

/// Deterministic initial logits.
TabularPolicy initial_policy(const SimConfig& cfg);

/// Queries drawn for a step, in processing order.
std::vector<SymbolSumTask> batch_for_step(const SimConfig& cfg, std::size_t step);

struct StepResult {
  StepMetrics metrics;
  std::vector<GroupTrace> groups;
};

/// One OGER step (rollout, verify, embed, score, replace, gate, advantage,
/// surrogate gradient) followed by a single update. Advances state.step.
StepResult train_step(TrainState& state, const SimConfig& cfg, bool keep_trace = false);

struct RunOutputs {
  std::vector<StepMetrics> metrics;
  TabularPolicy final_policy;
};

/// Runs cfg.steps steps. Metrics lines go to `metrics_out` when given;
/// snapshots go to `snapshot_dir` when given. On a non-finite loss the failing
/// step's inputs are written to snapshot_dir/failed_step.json and NumericError
/// is thrown.
RunOutputs run_training(const SimConfig& cfg, std::ostream* metrics_out = nullptr,
                        const std::optional<std::filesystem::path>& snapshot_dir = std::nullopt);

/// Unbiased pass@k estimate 1 - C(n-c, k) / C(n, k).
double pass_at_k(std::size_t n, std::size_t c, std::size_t k);

struct PassAtKReport {
  std::vector<std::size_t> ks;
  std::vector<std::string> query_ids;
  std::vector<std::size_t> correct;               ///< per query
  std::vector<std::vector<double>> per_query;     ///< [query][k index]
  std::vector<double> mean;                       ///< [k index]
};

PassAtKReport evaluate_pass_at_k(const TabularPolicy& policy, std::span<const SymbolSumTask> queries,
                                 std::size_t n_rollouts, std::span<const std::size_t> ks,
                                 double temperature, std::size_t max_len, std::uint64_t seed);

}  // namespace oger::sim
