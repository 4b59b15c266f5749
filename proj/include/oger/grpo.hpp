#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "oger/policy.hpp"
#include "oger/trajectory.hpp"

namespace oger {

inline constexpr double kAdvantageEpsilon = 1e-6;

struct AdvantageSet {
  std::vector<double> advantages;
  double group_mean = 0.0;
  double group_std = 0.0;  ///< population standard deviation
};

/// A_i = (R_i - mean) / (std + 1e-6), or all zeros when std < 1e-6.
/// Throws InvalidArgument for fewer than two rewards.
AdvantageSet group_advantages(std::span<const double> rewards);

struct OptimizerConfig {
  double clip_eps = 0.2;
  double kl_coeff = 0.0;
  double entropy_coeff = 0.01;
  double learning_rate = 25.0;
  double offpolicy_gamma = 0.1;

  void validate() const;
};

/// One member of a hybrid group as seen by the optimizer.
struct PolicyMember {
  std::size_t bucket = 0;
  std::span<const std::int32_t> tokens;
  bool online = true;
};

/// x / (x + gamma): bounded stand-in ratio for teacher tokens.
inline double shaped_ratio(double prob, double gamma) { return prob / (prob + gamma); }

/// Per-token ratios: pi_new / pi_old for online members, the shaped ratio of
/// pi_new for teacher members. Throws NumericError if pi_old assigns an
/// online token probability zero.
std::vector<double> importance_ratios(const TabularPolicy& pi_new, const TabularPolicy& pi_old,
                                      const PolicyMember& member, double gamma);

/// Trajectory form; requires token_ids.
std::vector<double> importance_ratios(const TabularPolicy& pi_new, const TabularPolicy& pi_old,
                                      const Trajectory& t, std::size_t bucket, double gamma);

struct SurrogateEval {
  double loss = 0.0;
  std::vector<double> grad;  ///< d loss / d logits, same layout as the policy
  std::vector<std::vector<double>> per_token_ratios;
};

/// Negated clipped GRPO objective for one group, with the entropy bonus over
/// online tokens and an optional KL penalty against `pi_ref`:
///
///   loss = -[ sum_i sum_t min(r A_i, clip(r, 1-eps, 1+eps) A_i) / sum_i |tau_i|
///             + entropy_coeff * mean online token entropy ]
///          + kl_coeff * mean online token KL(pi || pi_ref)
///
/// The KL term is skipped entirely when kl_coeff is 0.
SurrogateEval clipped_surrogate(std::span<const PolicyMember> members,
                                const AdvantageSet& advantages, const OptimizerConfig& cfg,
                                const TabularPolicy& pi_new, const TabularPolicy& pi_old,
                                const TabularPolicy* pi_ref = nullptr);

/// params -= learning_rate * grad. Throws NumericError (params untouched) when
/// the gradient is not finite.
void policy_update(std::span<double> params, std::span<const double> grad, double learning_rate);

}  // namespace oger
