#include "oger/hybrid_set.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "oger/error.hpp"

namespace oger {

std::vector<std::size_t> select_replacement_victims(std::span<const double> divergences,
                                                    std::size_t k) {
  if (k > divergences.size()) {
    throw InvalidArgument("select_replacement_victims: k=" + std::to_string(k) + " exceeds N=" +
                          std::to_string(divergences.size()));
  }
  for (double d : divergences) {
    if (!std::isfinite(d)) throw InvalidArgument("select_replacement_victims: non-finite divergence");
  }
  std::vector<std::size_t> order(divergences.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return divergences[a] < divergences[b];
  });
  order.resize(k);
  std::sort(order.begin(), order.end());
  return order;
}

std::vector<Trajectory> sample_offline(std::span<const Trajectory> offline, std::size_t k,
                                       CounterRng& rng) {
  if (k > offline.size()) {
    throw InvalidArgument("sample_offline: k=" + std::to_string(k) + " exceeds M=" +
                          std::to_string(offline.size()) + "; reduce k to M for this group");
  }
  std::vector<std::size_t> idx(offline.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::vector<Trajectory> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(idx.size() - i));
    std::swap(idx[i], idx[j]);
    out.push_back(offline[idx[i]]);
  }
  return out;
}

HybridGroup build_hybrid_group(const TrajectoryGroup& group, std::span<const double> divergences,
                               const ReplacementConfig& cfg, CounterRng& rng) {
  if (divergences.size() != group.n()) {
    throw InvalidArgument("build_hybrid_group: divergences misaligned with online members");
  }
  if (cfg.k > group.n()) {
    throw InvalidArgument("build_hybrid_group: k=" + std::to_string(cfg.k) + " exceeds N=" +
                          std::to_string(group.n()));
  }
  HybridGroup out{group.query_id, group.online, {}};
  const std::size_t k = std::min(cfg.k, group.m());
  if (k == 0) return out;

  out.replaced_indices = select_replacement_victims(divergences, k);
  auto sampled = sample_offline(group.offline, k, rng);
  for (std::size_t r = 0; r < k; ++r) {
    out.members[out.replaced_indices[r]] = std::move(sampled[r]);
  }
  return out;
}

CounterRng replacement_stream(std::uint64_t master_seed, std::uint64_t step,
                              const std::string& query_id) {
  return CounterRng(master_seed).derive("replace").derive(step).derive(query_id);
}

}  // namespace oger
