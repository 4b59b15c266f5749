#include "oger/exploration_reward.hpp"

#include <algorithm>
#include <cmath>

#include "oger/error.hpp"

namespace oger {

namespace {

void check_verdict(int r_m) {
  if (r_m != 0 && r_m != 1) {
    throw InvalidArgument("verifiable reward must be 0 or 1, got " + std::to_string(r_m));
  }
}

RewardBreakdown score_member(const Trajectory& t, const MemberSignals& in, ExplorationMode mode) {
  check_verdict(in.r_m);
  RewardBreakdown out;
  out.id = t.id;
  out.online = t.source.is_online();
  out.r_m = in.r_m;
  out.r_total = in.r_m;
  if (!out.online) return out;

  if (in.sim) {
    out.sim = *in.sim;
    out.divergence = divergence(*in.sim);
  }
  out.h_last = in.h_last;
  if (mode == ExplorationMode::kDisabled) {
    out.r_oger = 0.0;
    return out;
  }
  if (in.r_m == 1) {
    if (!out.divergence) throw InvalidArgument("online trajectory " + t.id + " has no similarity");
    if (!out.h_last) {
      throw InvalidArgument("online trajectory " + t.id + " is correct but has no last-token entropy");
    }
  }
  if (in.r_m == 0) {
    out.r_oger = 0.0;
    return out;
  }
  const double h = mode == ExplorationMode::kNoRefinement ? 0.0 : *out.h_last;
  out.r_oger = oger_reward(*out.divergence, h, in.r_m);
  out.r_total = in.r_m + *out.r_oger;
  return out;
}

}  // namespace

void TokenDistribution::validate() const {
  if (probs.empty()) throw InvalidArgument("token distribution is empty");
  double sum = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw InvalidArgument("token distribution has a negative or non-finite entry");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw InvalidArgument("token distribution sums to " + std::to_string(sum));
  }
}

SimilarityMatrix similarity_matrix(std::span<const EmbeddingVector> e_on,
                                   std::span<const EmbeddingVector> e_off) {
  if (e_off.empty()) {
    throw InvalidArgument("similarity_matrix: no offline references; use the M = 0 fallback");
  }
  if (e_on.empty()) throw InvalidArgument("similarity_matrix: no online trajectories");
  SimilarityMatrix s(e_on.size(), e_off.size());
  for (std::size_t i = 0; i < e_on.size(); ++i) {
    for (std::size_t j = 0; j < e_off.size(); ++j) s.at(i, j) = cosine(e_on[i], e_off[j]);
  }
  return s;
}

double mean_similarity(const SimilarityMatrix& s, std::size_t i) {
  if (i >= s.n()) {
    throw InvalidArgument("mean_similarity: row " + std::to_string(i) + " out of range");
  }
  double sum = 0.0;
  for (double x : s.row(i)) sum += x;
  return sum / static_cast<double>(s.m());
}

double divergence(double sim) {
  if (std::isnan(sim)) throw NumericError("divergence: similarity is NaN");
  return 1.0 - std::clamp(sim, 0.0, 1.0);
}

double last_token_entropy(const TokenDistribution& dist) {
  dist.validate();
  double h = 0.0;
  for (double p : dist.probs) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return std::max(h, 0.0);
}

double oger_reward(double d, double h_last, int r_m) {
  check_verdict(r_m);
  if (r_m == 0) return 0.0;
  return d * std::exp(-h_last);
}

std::vector<RewardBreakdown> total_reward(const HybridGroup& group,
                                          std::span<const MemberSignals> signals,
                                          ExplorationMode mode) {
  if (signals.size() != group.members.size()) {
    throw InvalidArgument("total_reward: " + std::to_string(signals.size()) + " signals for " +
                          std::to_string(group.members.size()) + " members");
  }
  std::vector<RewardBreakdown> out;
  out.reserve(signals.size());
  for (std::size_t i = 0; i < signals.size(); ++i) {
    out.push_back(score_member(group.members[i], signals[i], mode));
  }
  return out;
}

OnlineSignals online_signals(std::span<const EmbeddingVector> e_on,
                             std::span<const EmbeddingVector> e_off,
                             std::span<const TokenDistribution> last_token) {
  if (last_token.size() != e_on.size()) {
    throw InvalidArgument("online_signals: last-token distributions misaligned with embeddings");
  }
  const SimilarityMatrix s = similarity_matrix(e_on, e_off);
  OnlineSignals out;
  for (std::size_t i = 0; i < s.n(); ++i) {
    out.sim.push_back(mean_similarity(s, i));
    out.divergence.push_back(divergence(out.sim.back()));
    out.h_last.push_back(last_token_entropy(last_token[i]));
  }
  return out;
}

std::vector<RewardBreakdown> score_group(const TrajectoryGroup& group,
                                         std::span<const EmbeddingVector> e_on,
                                         std::span<const EmbeddingVector> e_off,
                                         std::span<const TokenDistribution> last_token,
                                         std::span<const int> r_m_online,
                                         std::span<const int> r_m_offline,
                                         ExplorationMode mode) {
  if (e_on.size() != group.n() || r_m_online.size() != group.n()) {
    throw InvalidArgument("score_group: online inputs misaligned with group");
  }
  if (e_off.size() != group.m() || r_m_offline.size() != group.m()) {
    throw InvalidArgument("score_group: offline inputs misaligned with group");
  }

  std::vector<RewardBreakdown> out;
  if (group.m() == 0) {
    for (std::size_t i = 0; i < group.n(); ++i) {
      check_verdict(r_m_online[i]);
      RewardBreakdown b;
      b.id = group.online[i].id;
      b.r_m = r_m_online[i];
      b.r_total = b.r_m;
      out.push_back(std::move(b));
    }
    return out;
  }

  const OnlineSignals sig = online_signals(e_on, e_off, last_token);
  for (std::size_t i = 0; i < group.n(); ++i) {
    out.push_back(score_member(group.online[i],
                               MemberSignals{r_m_online[i], sig.sim[i], sig.h_last[i]}, mode));
  }
  for (std::size_t j = 0; j < group.m(); ++j) {
    out.push_back(score_member(group.offline[j], MemberSignals{r_m_offline[j], {}, {}}, mode));
  }
  return out;
}

}  // namespace oger
