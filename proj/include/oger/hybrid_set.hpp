#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "oger/rng.hpp"
#include "oger/trajectory.hpp"

namespace oger {

struct ReplacementConfig {
  std::size_t k = 1;
  std::uint64_t rng_seed = 0;
};

/// Indices of the k smallest divergences, ties to the lower index, returned in
/// ascending index order. Throws InvalidArgument if k > N or any value is not
/// finite.
std::vector<std::size_t> select_replacement_victims(std::span<const double> divergences,
                                                    std::size_t k);

/// k draws without replacement, uniform over the offline list, in draw order.
/// Throws InvalidArgument if k > M; callers clamp k to M per group.
std::vector<Trajectory> sample_offline(std::span<const Trajectory> offline, std::size_t k,
                                       CounterRng& rng);

/// Replaces the min(cfg.k, M) least-divergent online members with sampled
/// offline references. `divergences` is aligned with group.online.
HybridGroup build_hybrid_group(const TrajectoryGroup& group, std::span<const double> divergences,
                               const ReplacementConfig& cfg, CounterRng& rng);

/// Stream for one (step, query) pair, independent of every other pair.
CounterRng replacement_stream(std::uint64_t master_seed, std::uint64_t step,
                              const std::string& query_id);

}  // namespace oger
