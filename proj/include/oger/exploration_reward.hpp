#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "oger/embedding.hpp"
#include "oger/trajectory.hpp"

namespace oger {

/// N x M cosine similarities between online and offline embeddings.
class SimilarityMatrix {
 public:
  SimilarityMatrix(std::size_t n, std::size_t m) : n_(n), m_(m), entries_(n * m, 0.0) {}

  std::size_t n() const { return n_; }
  std::size_t m() const { return m_; }
  double& at(std::size_t i, std::size_t j) { return entries_[i * m_ + j]; }
  double at(std::size_t i, std::size_t j) const { return entries_[i * m_ + j]; }
  std::span<const double> row(std::size_t i) const { return {entries_.data() + i * m_, m_}; }

 private:
  std::size_t n_;
  std::size_t m_;
  std::vector<double> entries_;
};

struct TokenDistribution {
  std::vector<double> probs;

  std::size_t vocab_size() const { return probs.size(); }
  /// Throws InvalidArgument unless probs are non-negative and sum to 1 (1e-9).
  void validate() const;
};

/// Which part of the exploration reward is active.
enum class ExplorationMode {
  kFull,          ///< D * exp(-H_last) * R_m
  kNoRefinement,  ///< D * R_m (entropy factor forced to 1)
  kDisabled,      ///< exploration reward is 0; R_total = R_m
};

struct RewardBreakdown {
  std::string id;
  bool online = true;
  int r_m = 0;
  std::optional<double> sim;
  std::optional<double> divergence;
  std::optional<double> h_last;
  std::optional<double> r_oger;
  double r_total = 0.0;
};

/// Throws InvalidArgument if `e_off` is empty (use the M = 0 fallback in
/// score_group instead), if `e_on` is empty, or on dimension mismatch.
SimilarityMatrix similarity_matrix(std::span<const EmbeddingVector> e_on,
                                   std::span<const EmbeddingVector> e_off);

double mean_similarity(const SimilarityMatrix& s, std::size_t i);

/// 1 - clamp(sim, 0, 1).
double divergence(double sim);

/// Shannon entropy in nats, with 0 ln 0 = 0.
double last_token_entropy(const TokenDistribution& dist);

/// d * exp(-h_last) * r_m.
double oger_reward(double d, double h_last, int r_m);

/// Per-member inputs to total_reward, aligned with HybridGroup::members.
/// Online members carry sim and h_last; teacher members only r_m.
struct MemberSignals {
  int r_m = 0;
  std::optional<double> sim;
  std::optional<double> h_last;
};

/// Gated total reward for every member of a hybrid group. Online members get
/// r_m + r_oger, teacher members get r_m. Throws InvalidArgument when a correct
/// online member lacks sim or h_last under an active exploration mode.
std::vector<RewardBreakdown> total_reward(const HybridGroup& group,
                                          std::span<const MemberSignals> signals,
                                          ExplorationMode mode = ExplorationMode::kFull);

/// Online-side signals for one group: sim_i, D_i, H_last_i.
struct OnlineSignals {
  std::vector<double> sim;
  std::vector<double> divergence;
  std::vector<double> h_last;
};

OnlineSignals online_signals(std::span<const EmbeddingVector> e_on,
                             std::span<const EmbeddingVector> e_off,
                             std::span<const TokenDistribution> last_token);

/// Scores a query group end to end without replacement: online breakdowns in
/// input order, then offline ones. With no offline references every member
/// falls back to r_total = r_m and the exploration fields stay unset.
std::vector<RewardBreakdown> score_group(const TrajectoryGroup& group,
                                         std::span<const EmbeddingVector> e_on,
                                         std::span<const EmbeddingVector> e_off,
                                         std::span<const TokenDistribution> last_token,
                                         std::span<const int> r_m_online,
                                         std::span<const int> r_m_offline,
                                         ExplorationMode mode = ExplorationMode::kFull);

}  // namespace oger
