#include "oger/sim.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <cstdio>

#include "json.hpp"
#include "oger/error.hpp"
#include "oger/hybrid_set.hpp"
#include "oger/log.hpp"
#include "oger/verifier.hpp"

namespace oger::sim {

namespace {

constexpr std::array<const char*, kReasoningSymbols> kSymbolNames = {
    "n0", "n1", "n2", "n3", "n4", "n5", "n6", "n7",
    "n8", "n9", "plus", "eq", "so", "then", "thus", "hmm"};

std::int32_t digit_token(int d) { return kDigitBase + d; }
bool is_digit_token(std::int32_t tok) { return tok >= kDigitBase && tok < kDigitBase + 10; }

// Initial logit offsets: a base model that rarely stops at position 0, stops
// often enough afterwards to finish inside max_len, and mildly prefers digits.
constexpr double kInitialTerminatorFirst = -3.0;
constexpr double kInitialTerminator = 2.0;
constexpr double kInitialDigit = 0.5;

std::size_t sample_index(std::span<const double> probs, double u) {
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    last_positive = i;
    acc += probs[i];
    if (u < acc) return i;
  }
  return last_positive;
}

double entropy_of(std::span<const double> probs) {
  double h = 0.0;
  for (double p : probs) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

std::vector<std::int32_t> teacher_tokens(std::string_view teacher, const SymbolSumTask& task) {
  const std::int32_t a = task.a;
  const std::int32_t b = task.b;
  const std::int32_t ans = digit_token(task.gold());
  if (teacher == "minimal") return {a, b, kEquals, ans, kTerminator};
  if (teacher == "padded") return {kSo, kThen, a, kPlus, b, kEquals, ans, kTerminator};
  if (teacher == "longform") {
    return {a, kPlus, b, kEquals, ans, kThus, a, kPlus, b, kEquals, ans, kTerminator};
  }
  throw InvalidArgument("unknown teacher '" + std::string(teacher) + "'");
}

}  // namespace

std::string SymbolSumTask::query_id() const {
  return std::to_string(a) + "+" + std::to_string(b);
}

SymbolSumTask SymbolSumTask::from_bucket(std::size_t bucket) {
  if (bucket >= kNumQueries) throw InvalidArgument("query bucket out of range");
  return {static_cast<int>(bucket / 10), static_cast<int>(bucket % 10)};
}

SymbolSumTask SymbolSumTask::from_query_id(std::string_view id) {
  if (id.size() != 3 || id[1] != '+' || id[0] < '0' || id[0] > '9' || id[2] < '0' || id[2] > '9') {
    throw InvalidArgument("not a symbol-sum query id: '" + std::string(id) + "'");
  }
  return {id[0] - '0', id[2] - '0'};
}

std::vector<SymbolSumTask> all_tasks() {
  std::vector<SymbolSumTask> out;
  for (std::size_t b = 0; b < kNumQueries; ++b) out.push_back(SymbolSumTask::from_bucket(b));
  return out;
}

std::string render_text(std::span<const std::int32_t> tokens) {
  std::string out;
  for (auto tok : tokens) {
    if (tok == kTerminator) break;
    if (!out.empty()) out += ' ';
    if (tok >= 0 && tok < kReasoningSymbols) {
      out += kSymbolNames[static_cast<std::size_t>(tok)];
    } else if (is_digit_token(tok)) {
      out += static_cast<char>('0' + (tok - kDigitBase));
    } else {
      throw InvalidArgument("token " + std::to_string(tok) + " outside the vocabulary");
    }
  }
  return out;
}

std::string extract_answer(std::span<const std::int32_t> tokens) {
  if (tokens.size() < 2 || tokens.back() != kTerminator) return "";
  const auto last = tokens[tokens.size() - 2];
  if (!is_digit_token(last)) return "";
  return std::string(1, static_cast<char>('0' + (last - kDigitBase)));
}

std::vector<Rollout> rollout(const TabularPolicy& policy, const SymbolSumTask& task,
                             std::size_t n, double temperature, std::size_t max_len,
                             CounterRng& rng, std::string_view id_prefix) {
  if (n < 1) throw InvalidArgument("rollout: n must be at least 1");
  if (!(temperature > 0.0)) throw InvalidArgument("rollout: temperature must be positive");
  if (max_len < 1 || max_len > policy.positions()) {
    throw InvalidArgument("rollout: max_len must be in [1, policy positions]");
  }
  std::vector<Rollout> out;
  out.reserve(n);
  for (std::size_t r = 0; r < n; ++r) {
    Rollout ro;
    std::vector<std::int32_t> tokens;
    for (std::size_t pos = 0; pos < max_len; ++pos) {
      auto probs = softmax(policy.row(task.bucket(), pos), temperature);
      const auto tok = static_cast<std::int32_t>(sample_index(probs, rng.uniform()));
      tokens.push_back(tok);
      ro.position_probs.push_back(std::move(probs));
      if (tok == kTerminator) break;
    }
    ro.last_token.probs = ro.position_probs.back();

    Trajectory& t = ro.trajectory;
    t.id = std::string(id_prefix) + "-" + std::to_string(r);
    t.query_id = task.query_id();
    t.source = Source::online();
    t.text = render_text(tokens);
    t.answer = extract_answer(tokens);
    t.gold_answer = task.gold_answer();
    t.length = static_cast<std::int64_t>(tokens.size());
    t.token_ids = std::move(tokens);
    out.push_back(std::move(ro));
  }
  return out;
}

std::vector<std::string> teacher_names() { return {"minimal", "padded", "longform"}; }

Trajectory teacher_generate(std::string_view teacher_id, const SymbolSumTask& task) {
  auto tokens = teacher_tokens(teacher_id, task);
  Trajectory t;
  t.id = std::string(teacher_id) + "-" + task.query_id();
  t.query_id = task.query_id();
  t.source = Source::teacher(std::string(teacher_id));
  t.text = render_text(tokens);
  t.answer = extract_answer(tokens);
  t.gold_answer = task.gold_answer();
  t.correct = true;
  t.length = static_cast<std::int64_t>(tokens.size());
  t.token_ids = std::move(tokens);
  return t;
}

CurationResult build_offline_corpus(std::span<const std::string> teachers, std::size_t max_len) {
  std::vector<Trajectory> raw;
  for (const auto& task : all_tasks()) {
    for (const auto& name : teachers) {
      auto t = teacher_generate(name, task);
      t.correct.reset();
      raw.push_back(std::move(t));
    }
  }
  CurationConfig cfg;
  cfg.max_tokens = static_cast<std::int64_t>(max_len);
  cfg.teachers.assign(teachers.begin(), teachers.end());
  return curate(raw, cfg);
}

Variant parse_variant(std::string_view name) {
  if (name == "oger") return Variant::kOger;
  if (name == "no-refine") return Variant::kNoRefinement;
  if (name == "no-reward") return Variant::kNoReward;
  if (name == "grpo") return Variant::kGrpo;
  throw ConfigError("unknown variant '" + std::string(name) + "' (oger|no-refine|no-reward|grpo)");
}

std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::kOger: return "oger";
    case Variant::kNoRefinement: return "no-refine";
    case Variant::kNoReward: return "no-reward";
    case Variant::kGrpo: return "grpo";
  }
  return "oger";
}

ExplorationMode exploration_mode(Variant v) {
  switch (v) {
    case Variant::kOger: return ExplorationMode::kFull;
    case Variant::kNoRefinement: return ExplorationMode::kNoRefinement;
    case Variant::kNoReward:
    case Variant::kGrpo: return ExplorationMode::kDisabled;
  }
  return ExplorationMode::kFull;
}

void SimConfig::validate() const {
  if (batch_queries < 1 || batch_queries > kNumQueries) {
    throw ConfigError("simulation.batch_queries must be in [1, 100]");
  }
  if (group_size < 2) throw ConfigError("simulation.group_size must be at least 2");
  if (!(temperature > 0.0)) throw ConfigError("simulation.temperature must be positive");
  if (max_len < 2) throw ConfigError("simulation.max_len must be at least 2");
  if (replace_k > group_size) throw ConfigError("replacement.k must not exceed simulation.group_size");
  if (!(init_scale >= 0.0)) throw ConfigError("simulation.init_scale must be non-negative");
  for (const auto& t : teachers) teacher_tokens(t, SymbolSumTask{});
  encoder.validate();
  if (encoder.kind != EncoderSpec::Kind::kReference) {
    throw ConfigError("simulation requires the reference encoder");
  }
  optimizer.validate();
}

std::string metrics_to_json(const StepMetrics& m) {
  nlohmann::ordered_json j;
  j["step"] = m.step;
  j["mean_entropy"] = m.mean_entropy;
  j["avg_score"] = m.avg_score;
  j["failed_ratio"] = m.failed_ratio;
  j["oger_mean"] = m.oger_mean;
  j["oger_max"] = m.oger_max;
  j["loss"] = m.loss;
  j["rollouts"] = m.rollouts;
  j["correct"] = m.correct;
  return j.dump();
}

TabularPolicy initial_policy(const SimConfig& cfg) {
  TabularPolicy p(kNumQueries, cfg.max_len, kVocabSize, cfg.temperature);
  CounterRng rng = CounterRng(cfg.seed).derive("init");
  for (std::size_t b = 0; b < p.buckets(); ++b) {
    for (std::size_t pos = 0; pos < p.positions(); ++pos) {
      for (std::size_t v = 0; v < p.vocab(); ++v) {
        double x = cfg.init_scale * (2.0 * rng.uniform() - 1.0);
        if (v == static_cast<std::size_t>(kTerminator)) {
          x += pos == 0 ? kInitialTerminatorFirst : kInitialTerminator;
        } else if (is_digit_token(static_cast<std::int32_t>(v))) {
          x += kInitialDigit;
        }
        p.params()[p.index(b, pos, v)] = x;
      }
    }
  }
  return p;
}

TrainState initial_state(const SimConfig& cfg) {
  cfg.validate();
  TrainState state;
  state.policy = initial_policy(cfg);
  state.reference = state.policy;
  const auto curated = build_offline_corpus(cfg.teachers, cfg.max_len);
  for (const auto& g : group_by_query(curated.curated)) {
    auto& emb = state.offline_embeddings[g.query_id];
    for (const auto& t : g.offline) emb.push_back(encode(t.text, cfg.encoder));
    state.offline.emplace(g.query_id, g);
  }
  return state;
}

std::vector<SymbolSumTask> batch_for_step(const SimConfig& cfg, std::size_t step) {
  CounterRng rng = CounterRng(cfg.seed).derive("batch").derive(static_cast<std::uint64_t>(step));
  std::vector<std::size_t> idx(kNumQueries);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::vector<SymbolSumTask> out;
  for (std::size_t i = 0; i < cfg.batch_queries; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(idx.size() - i));
    std::swap(idx[i], idx[j]);
    out.push_back(SymbolSumTask::from_bucket(idx[i]));
  }
  return out;
}

StepResult train_step(TrainState& state, const SimConfig& cfg, bool keep_trace) {
  cfg.validate();
  const TabularPolicy pi_old = state.policy;
  const CounterRng master(cfg.seed);
  const ExactMatchVerifier verifier;
  const bool uses_teachers = cfg.variant != Variant::kGrpo;
  const auto step = static_cast<std::uint64_t>(state.step);

  StepResult result;
  StepMetrics& metrics = result.metrics;
  metrics.step = state.step;
  std::vector<double> grad(state.policy.num_params(), 0.0);
  double entropy_sum = 0.0;
  std::size_t entropy_tokens = 0;
  double oger_sum = 0.0;
  double loss_sum = 0.0;

  const auto tasks = batch_for_step(cfg, state.step);
  for (const auto& task : tasks) {
    const std::string qid = task.query_id();
    CounterRng rollout_rng = master.derive("rollout").derive(step).derive(qid);
    auto rollouts = rollout(pi_old, task, cfg.group_size, cfg.temperature, cfg.max_len, rollout_rng,
                            "s" + std::to_string(step) + "-" + qid);

    TrajectoryGroup group{qid, {}, {}};
    std::vector<int> r_m;
    for (auto& ro : rollouts) {
      auto& t = ro.trajectory;
      t.correct = verifier.verify(t.answer, *t.gold_answer);
      r_m.push_back(*t.correct ? 1 : 0);
      group.online.push_back(t);
      for (const auto& probs : ro.position_probs) entropy_sum += entropy_of(probs);
      entropy_tokens += ro.position_probs.size();
    }

    const std::vector<EmbeddingVector>* e_off = nullptr;
    if (uses_teachers) {
      if (auto it = state.offline.find(qid); it != state.offline.end()) {
        group.offline = it->second.offline;
        e_off = &state.offline_embeddings.at(qid);
      }
    }

    std::vector<MemberSignals> online(group.n());
    std::vector<double> divergences(group.n(), 0.0);
    for (std::size_t i = 0; i < group.n(); ++i) online[i].r_m = r_m[i];
    ExplorationMode mode = ExplorationMode::kDisabled;
    if (group.m() > 0) {
      mode = exploration_mode(cfg.variant);
      std::vector<EmbeddingVector> e_on;
      std::vector<TokenDistribution> last;
      for (const auto& ro : rollouts) {
        e_on.push_back(encode(ro.trajectory.text, cfg.encoder));
        last.push_back(ro.last_token);
      }
      const auto sig = online_signals(e_on, *e_off, last);
      for (std::size_t i = 0; i < group.n(); ++i) {
        online[i].sim = sig.sim[i];
        online[i].h_last = sig.h_last[i];
      }
      divergences = sig.divergence;
    }

    const auto online_rewards = total_reward(HybridGroup{qid, group.online, {}}, online, mode);
    for (const auto& b : online_rewards) {
      if (b.r_m == 1 && b.r_oger) {
        oger_sum += *b.r_oger;
        metrics.oger_max = std::max(metrics.oger_max, *b.r_oger);
      }
    }

    ReplacementConfig rcfg{uses_teachers ? cfg.replace_k : 0, cfg.seed};
    CounterRng replace_rng = replacement_stream(cfg.seed, step, qid);
    HybridGroup hybrid = build_hybrid_group(group, divergences, rcfg, replace_rng);

    std::vector<MemberSignals> signals = online;
    for (auto idx : hybrid.replaced_indices) {
      const auto& t = hybrid.members[idx];
      const bool ok = t.gold_answer && verifier.verify(t.answer, *t.gold_answer);
      signals[idx] = MemberSignals{ok ? 1 : 0, {}, {}};
    }
    auto hybrid_rewards = total_reward(hybrid, signals, mode);

    std::vector<double> totals;
    for (const auto& b : hybrid_rewards) totals.push_back(b.r_total);
    auto advantages = group_advantages(totals);

    std::vector<PolicyMember> members;
    for (const auto& t : hybrid.members) {
      members.push_back(PolicyMember{task.bucket(), *t.token_ids, t.source.is_online()});
    }
    const auto eval = clipped_surrogate(members, advantages, cfg.optimizer, state.policy, pi_old,
                                        &state.reference);
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += eval.grad[i];
    loss_sum += eval.loss;

    metrics.rollouts += group.n();
    metrics.correct += static_cast<std::size_t>(std::count(r_m.begin(), r_m.end(), 1));

    if (keep_trace) {
      result.groups.push_back(GroupTrace{task, std::move(rollouts), online_rewards, std::move(hybrid),
                                         std::move(hybrid_rewards), std::move(advantages), eval.loss});
    }
  }

  // Buckets own disjoint parameters, so group gradients are summed.
  metrics.loss = loss_sum / static_cast<double>(tasks.size());
  policy_update(state.policy.params(), grad, cfg.optimizer.learning_rate);

  metrics.mean_entropy = entropy_tokens ? entropy_sum / static_cast<double>(entropy_tokens) : 0.0;
  metrics.avg_score = static_cast<double>(metrics.correct) / static_cast<double>(metrics.rollouts);
  metrics.failed_ratio =
      static_cast<double>(metrics.rollouts - metrics.correct) / static_cast<double>(metrics.rollouts);
  metrics.oger_mean = metrics.correct ? oger_sum / static_cast<double>(metrics.correct) : 0.0;

  ++state.step;
  return result;
}

namespace {

void write_snapshot(const std::filesystem::path& path, const TabularPolicy& policy) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("io", "cannot write snapshot " + path.string());
  policy.save(out);
}

std::string snapshot_name(std::size_t step) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "policy_step%05zu.json", step);
  return buf;
}

}  // namespace

RunOutputs run_training(const SimConfig& cfg, std::ostream* metrics_out,
                        const std::optional<std::filesystem::path>& snapshot_dir) {
  TrainState state = initial_state(cfg);
  if (snapshot_dir) {
    std::filesystem::create_directories(*snapshot_dir);
    write_snapshot(*snapshot_dir / snapshot_name(0), state.policy);
  }

  RunOutputs out;
  for (std::size_t s = 0; s < cfg.steps; ++s) {
    const TabularPolicy before = state.policy;
    StepResult r;
    try {
      r = train_step(state, cfg);
    } catch (const NumericError& e) {
      if (snapshot_dir) {
        nlohmann::ordered_json j;
        j["step"] = s;
        j["seed"] = cfg.seed;
        j["variant"] = variant_name(cfg.variant);
        j["error"] = e.what();
        std::ostringstream policy;
        before.save(policy);
        j["policy"] = nlohmann::ordered_json::parse(policy.str());
        std::ofstream f(*snapshot_dir / "failed_step.json", std::ios::binary);
        f << j.dump() << '\n';
      }
      throw NumericError("step " + std::to_string(s) + ": " + e.what());
    }
    log::debug("step " + std::to_string(s) + " " + metrics_to_json(r.metrics));
    if (metrics_out) *metrics_out << metrics_to_json(r.metrics) << '\n' << std::flush;
    out.metrics.push_back(r.metrics);
    if (snapshot_dir && cfg.snapshot_every > 0 && (s + 1) % cfg.snapshot_every == 0) {
      write_snapshot(*snapshot_dir / snapshot_name(s + 1), state.policy);
    }
  }
  if (snapshot_dir) write_snapshot(*snapshot_dir / "policy_final.json", state.policy);
  out.final_policy = std::move(state.policy);
  return out;
}

double pass_at_k(std::size_t n, std::size_t c, std::size_t k) {
  if (c > n) throw InvalidArgument("pass_at_k: c exceeds n");
  if (k > n) throw InvalidArgument("pass_at_k: k exceeds n");
  if (k == 0) return 0.0;
  if (n - c < k) return 1.0;
  if (n <= 62) {
    auto binom = [](std::size_t a, std::size_t b) {
      unsigned __int128 r = 1;
      for (std::size_t i = 0; i < b; ++i) r = r * (a - i) / (i + 1);
      return static_cast<std::uint64_t>(r);
    };
    const std::uint64_t total = binom(n, k);
    return static_cast<double>(total - binom(n - c, k)) / static_cast<double>(total);
  }
  double miss = 1.0;
  for (std::size_t i = n - c + 1; i <= n; ++i) {
    miss *= 1.0 - static_cast<double>(k) / static_cast<double>(i);
  }
  return 1.0 - miss;
}

PassAtKReport evaluate_pass_at_k(const TabularPolicy& policy, std::span<const SymbolSumTask> queries,
                                 std::size_t n_rollouts, std::span<const std::size_t> ks,
                                 double temperature, std::size_t max_len, std::uint64_t seed) {
  for (auto k : ks) {
    if (k > n_rollouts) throw InvalidArgument("evaluate_pass_at_k: k exceeds the rollout count");
  }
  const ExactMatchVerifier verifier;
  PassAtKReport report;
  report.ks.assign(ks.begin(), ks.end());
  report.mean.assign(ks.size(), 0.0);
  for (const auto& task : queries) {
    CounterRng rng = CounterRng(seed).derive("eval").derive(task.query_id());
    auto rollouts = rollout(policy, task, n_rollouts, temperature, max_len, rng, "eval-" + task.query_id());
    std::size_t c = 0;
    for (const auto& ro : rollouts) {
      if (verifier.verify(ro.trajectory.answer, *ro.trajectory.gold_answer)) ++c;
    }
    std::vector<double> row;
    for (std::size_t i = 0; i < ks.size(); ++i) {
      row.push_back(pass_at_k(n_rollouts, c, ks[i]));
      report.mean[i] += row.back();
    }
    report.query_ids.push_back(task.query_id());
    report.correct.push_back(c);
    report.per_query.push_back(std::move(row));
  }
  if (!queries.empty()) {
    for (double& m : report.mean) m /= static_cast<double>(queries.size());
  }
  return report;
}

}  // namespace oger::sim
