#include "oger/grpo.hpp"

#include <algorithm>
#include <cmath>

#include "oger/error.hpp"

namespace oger {

namespace {

void check_member(const TabularPolicy& pi, const PolicyMember& m) {
  if (m.bucket >= pi.buckets()) throw InvalidArgument("policy member bucket out of range");
  if (m.tokens.size() > pi.positions()) {
    throw InvalidArgument("policy member has more tokens than the policy has positions");
  }
  for (auto tok : m.tokens) {
    if (tok < 0 || static_cast<std::size_t>(tok) >= pi.vocab()) {
      throw InvalidArgument("policy member token out of vocabulary");
    }
  }
}

// grad[row] += scale * d log pi(token) / d logits[row]
void add_log_prob_grad(std::span<double> grad, std::span<const double> probs, std::size_t token,
                       double inv_temp, double scale) {
  for (std::size_t u = 0; u < probs.size(); ++u) {
    grad[u] += scale * inv_temp * ((u == token ? 1.0 : 0.0) - probs[u]);
  }
}

}  // namespace

AdvantageSet group_advantages(std::span<const double> rewards) {
  if (rewards.size() < 2) {
    throw InvalidArgument("group_advantages: need at least 2 rewards, got " +
                          std::to_string(rewards.size()));
  }
  const double n = static_cast<double>(rewards.size());
  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= n;
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  const double std = std::sqrt(var / n);

  AdvantageSet out{std::vector<double>(rewards.size(), 0.0), mean, std};
  if (std < kAdvantageEpsilon) return out;
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    out.advantages[i] = (rewards[i] - mean) / (std + kAdvantageEpsilon);
  }
  return out;
}

void OptimizerConfig::validate() const {
  if (!(clip_eps > 0.0)) throw ConfigError("optimizer.clip_eps must be positive");
  if (!(kl_coeff >= 0.0)) throw ConfigError("optimizer.kl_coeff must be non-negative");
  if (!(entropy_coeff >= 0.0)) throw ConfigError("optimizer.entropy_coeff must be non-negative");
  if (!(learning_rate >= 0.0)) throw ConfigError("optimizer.learning_rate must be non-negative");
  if (!(offpolicy_gamma >= 0.0)) throw ConfigError("optimizer.offpolicy_gamma must be non-negative");
}

std::vector<double> importance_ratios(const TabularPolicy& pi_new, const TabularPolicy& pi_old,
                                      const PolicyMember& member, double gamma) {
  check_member(pi_new, member);
  std::vector<double> ratios;
  ratios.reserve(member.tokens.size());
  for (std::size_t t = 0; t < member.tokens.size(); ++t) {
    const auto tok = static_cast<std::size_t>(member.tokens[t]);
    const double p_new = pi_new.prob(member.bucket, t, tok);
    if (member.online) {
      const double p_old = pi_old.prob(member.bucket, t, tok);
      if (p_old == 0.0) {
        throw NumericError("importance ratio: sampled token has zero probability under pi_old");
      }
      ratios.push_back(p_new / p_old);
    } else {
      ratios.push_back(shaped_ratio(p_new, gamma));
    }
  }
  return ratios;
}

std::vector<double> importance_ratios(const TabularPolicy& pi_new, const TabularPolicy& pi_old,
                                      const Trajectory& t, std::size_t bucket, double gamma) {
  if (!t.token_ids) throw InvalidArgument("importance_ratios: trajectory " + t.id + " has no token_ids");
  return importance_ratios(pi_new, pi_old, PolicyMember{bucket, *t.token_ids, t.source.is_online()},
                           gamma);
}

SurrogateEval clipped_surrogate(std::span<const PolicyMember> members,
                                const AdvantageSet& advantages, const OptimizerConfig& cfg,
                                const TabularPolicy& pi_new, const TabularPolicy& pi_old,
                                const TabularPolicy* pi_ref) {
  cfg.validate();
  if (members.size() != advantages.advantages.size()) {
    throw InvalidArgument("clipped_surrogate: " + std::to_string(members.size()) +
                          " members but " + std::to_string(advantages.advantages.size()) +
                          " advantages");
  }
  if (cfg.kl_coeff > 0.0 && pi_ref == nullptr) {
    throw InvalidArgument("clipped_surrogate: kl_coeff > 0 requires a reference policy");
  }

  SurrogateEval out;
  out.grad.assign(pi_new.num_params(), 0.0);
  const double inv_temp = 1.0 / pi_new.temperature();
  const double lo = 1.0 - cfg.clip_eps;
  const double hi = 1.0 + cfg.clip_eps;

  std::size_t total_tokens = 0;
  std::size_t online_tokens = 0;
  for (const auto& m : members) {
    check_member(pi_new, m);
    total_tokens += m.tokens.size();
    if (m.online) online_tokens += m.tokens.size();
  }

  double surrogate = 0.0;
  double entropy = 0.0;
  double kl = 0.0;
  std::span<double> grad(out.grad);

  for (std::size_t i = 0; i < members.size(); ++i) {
    const auto& m = members[i];
    const double adv = advantages.advantages[i];
    auto& ratios = out.per_token_ratios.emplace_back();
    ratios.reserve(m.tokens.size());

    for (std::size_t t = 0; t < m.tokens.size(); ++t) {
      const auto tok = static_cast<std::size_t>(m.tokens[t]);
      const auto probs = pi_new.distribution(m.bucket, t);
      const double p = probs[tok];
      auto row_grad = grad.subspan(pi_new.index(m.bucket, t, 0), pi_new.vocab());

      // d ratio / d log p, so that d ratio / d logits = dratio * dlogp.
      double ratio;
      double dratio;
      if (m.online) {
        const double p_old = pi_old.prob(m.bucket, t, tok);
        if (p_old == 0.0) {
          throw NumericError("clipped_surrogate: sampled token has zero probability under pi_old");
        }
        ratio = p / p_old;
        dratio = ratio;
      } else {
        const double g = cfg.offpolicy_gamma;
        ratio = shaped_ratio(p, g);
        dratio = g * p / ((p + g) * (p + g));
      }
      ratios.push_back(ratio);

      const double unclipped = ratio * adv;
      const double clipped = std::clamp(ratio, lo, hi) * adv;
      surrogate += std::min(unclipped, clipped);
      if (total_tokens > 0 && unclipped <= clipped) {
        add_log_prob_grad(row_grad, probs, tok, inv_temp,
                          -adv * dratio / static_cast<double>(total_tokens));
      }

      if (!m.online) continue;

      double h = 0.0;
      for (double q : probs) {
        if (q > 0.0) h -= q * std::log(q);
      }
      entropy += h;
      if (cfg.entropy_coeff > 0.0) {
        const double scale = -cfg.entropy_coeff / static_cast<double>(online_tokens);
        for (std::size_t u = 0; u < probs.size(); ++u) {
          const double log_q = probs[u] > 0.0 ? std::log(probs[u]) : 0.0;
          row_grad[u] += scale * inv_temp * (-probs[u] * (log_q + h));
        }
      }

      if (cfg.kl_coeff > 0.0) {
        const auto ref = pi_ref->distribution(m.bucket, t);
        double row_kl = 0.0;
        std::vector<double> log_ratio(probs.size(), 0.0);
        for (std::size_t u = 0; u < probs.size(); ++u) {
          if (probs[u] > 0.0) {
            log_ratio[u] = std::log(probs[u]) - std::log(ref[u]);
            row_kl += probs[u] * log_ratio[u];
          }
        }
        kl += row_kl;
        const double scale = cfg.kl_coeff / static_cast<double>(online_tokens);
        for (std::size_t u = 0; u < probs.size(); ++u) {
          row_grad[u] += scale * inv_temp * probs[u] * (log_ratio[u] - row_kl);
        }
      }
    }
  }

  const double surrogate_mean = total_tokens > 0 ? surrogate / static_cast<double>(total_tokens) : 0.0;
  const double entropy_mean = online_tokens > 0 ? entropy / static_cast<double>(online_tokens) : 0.0;
  out.loss = -(surrogate_mean + cfg.entropy_coeff * entropy_mean);
  if (cfg.kl_coeff > 0.0 && online_tokens > 0) {
    out.loss += cfg.kl_coeff * kl / static_cast<double>(online_tokens);
  }
  if (!std::isfinite(out.loss)) throw NumericError("clipped_surrogate: loss is not finite");
  return out;
}

void policy_update(std::span<double> params, std::span<const double> grad, double learning_rate) {
  if (params.size() != grad.size()) {
    throw InvalidArgument("policy_update: " + std::to_string(grad.size()) + " gradient entries for " +
                          std::to_string(params.size()) + " parameters");
  }
  for (double g : grad) {
    if (!std::isfinite(g)) throw NumericError("policy_update: gradient is not finite");
  }
  for (std::size_t i = 0; i < params.size(); ++i) params[i] -= learning_rate * grad[i];
}

}  // namespace oger
