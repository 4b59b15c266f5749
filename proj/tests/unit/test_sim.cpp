#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "oger/error.hpp"
#include "oger/sim.hpp"
#include "oger/verifier.hpp"

using namespace oger;
using namespace oger::sim;

namespace {

double entropy(const std::vector<double>& p) {
  double h = 0.0;
  for (double x : p) {
    if (x > 0.0) h -= x * std::log(x);
  }
  return h;
}

}  // namespace

TEST_CASE("task identifiers") {
  SymbolSumTask t{3, 9};
  CHECK(t.gold() == 2);
  CHECK(t.query_id() == "3+9");
  CHECK(SymbolSumTask::from_query_id("3+9").bucket() == t.bucket());
  CHECK(SymbolSumTask::from_bucket(39).a == 3);
  CHECK(all_tasks().size() == kNumQueries);
  CHECK_THROWS_AS(SymbolSumTask::from_query_id("12+3"), InvalidArgument);
}

TEST_CASE("scripted teachers") {
  SymbolSumTask t{3, 4};
  auto a = teacher_generate("minimal", t);
  REQUIRE(a.token_ids);
  CHECK(a.token_ids->back() == kTerminator);
  CHECK((*a.token_ids)[a.token_ids->size() - 2] == kDigitBase + 7);
  CHECK(*a.correct);
  CHECK(a.answer == "7");

  ExactMatchVerifier v;
  for (const auto& name : teacher_names()) {
    for (const auto& task : all_tasks()) {
      auto tr = teacher_generate(name, task);
      CHECK(v.verify(tr.answer, *tr.gold_answer));
      CHECK(tr.length <= 12);
    }
  }
  CHECK_THROWS_AS(teacher_generate("oracle", t), InvalidArgument);

  EncoderSpec spec;
  const double c = cosine(encode(a.text, spec), encode(teacher_generate("longform", t).text, spec));
  CHECK(c < 0.9);
  CHECK(c == doctest::Approx(0.677447).epsilon(1e-5));
}

TEST_CASE("offline corpus") {
  auto corpus = build_offline_corpus(teacher_names(), 12);
  CHECK(corpus.curated.size() == 300);
  REQUIRE(corpus.report.rows.size() == 3);
  for (const auto& row : corpus.report.rows) CHECK(row.accuracy_pct() == 100.0);

  auto short_only = build_offline_corpus(teacher_names(), 8);
  CHECK(short_only.report.find("longform")->valid_samples == 0);
}

TEST_CASE("rollout") {
  SimConfig cfg;
  auto policy = initial_policy(cfg);
  SymbolSumTask task{2, 5};
  CounterRng r1(4), r2(4);
  auto a = rollout(policy, task, 8, 1.0, 12, r1);
  auto b = rollout(policy, task, 8, 1.0, 12, r2);
  REQUIRE(a.size() == 8);
  for (std::size_t i = 0; i < 8; ++i) {
    CHECK(a[i].trajectory == b[i].trajectory);
    CHECK(a[i].trajectory.length <= 12);
    CHECK(a[i].position_probs.size() == a[i].trajectory.token_ids->size());
    CHECK(a[i].last_token.probs == a[i].position_probs.back());
  }

  TabularPolicy peaked(kNumQueries, 12, kVocabSize);
  const std::vector<int> greedy = {kSo, 2, kPlus, 5, kEquals, kDigitBase + 7, kTerminator};
  for (std::size_t pos = 0; pos < 12; ++pos) {
    const int tok = pos < greedy.size() ? greedy[pos] : kTerminator;
    peaked.params()[peaked.index(task.bucket(), pos, static_cast<std::size_t>(tok))] = 1.0;
  }
  CounterRng r3(99);
  for (const auto& ro : rollout(peaked, task, 8, 0.01, 12, r3)) {
    CHECK(*ro.trajectory.token_ids == std::vector<std::int32_t>(greedy.begin(), greedy.end()));
    CHECK(ro.trajectory.answer == "7");
  }
  CounterRng r4(0);
  CHECK_THROWS_AS(rollout(peaked, task, 0, 1.0, 12, r4), InvalidArgument);
}

TEST_CASE("answer extraction") {
  std::vector<std::int32_t> ok = {kSo, kDigitBase + 4, kTerminator};
  CHECK(extract_answer(ok) == "4");
  std::vector<std::int32_t> unterminated = {kDigitBase + 4};
  CHECK(extract_answer(unterminated).empty());
  std::vector<std::int32_t> symbol_last = {kDigitBase + 4, kHmm, kTerminator};
  CHECK(extract_answer(symbol_last).empty());
  CHECK(render_text(ok) == "so 4");
}

TEST_CASE("pass at k") {
  CHECK(pass_at_k(4, 1, 2) == doctest::Approx(0.5));
  CHECK(pass_at_k(8, 8, 3) == 1.0);
  CHECK(pass_at_k(8, 0, 3) == 0.0);
  CHECK(pass_at_k(8, 2, 1) == doctest::Approx(0.25));
  CHECK_THROWS_AS(pass_at_k(4, 5, 1), InvalidArgument);
  CHECK_THROWS_AS(pass_at_k(4, 1, 5), InvalidArgument);
}

TEST_CASE("variants") {
  CHECK(parse_variant("no-refine") == Variant::kNoRefinement);
  CHECK(variant_name(Variant::kNoReward) == "no-reward");
  CHECK(exploration_mode(Variant::kNoReward) == ExplorationMode::kDisabled);
  CHECK_THROWS_AS(parse_variant("ppo"), ConfigError);
}

// Returns the number of correct rollouts so the caller can require coverage.
std::size_t check_hand_trace(std::uint64_t seed) {
  SimConfig cfg;
  cfg.group_size = 2;
  cfg.batch_queries = 1;
  cfg.teachers = {"minimal"};
  cfg.seed = seed;
  auto state = initial_state(cfg);
  const auto before = state.policy;
  auto result = train_step(state, cfg, true);
  REQUIRE(result.groups.size() == 1);
  const auto& g = result.groups[0];
  const auto task = batch_for_step(cfg, 0)[0];
  CHECK(g.task.bucket() == task.bucket());

  CounterRng rng = CounterRng(cfg.seed).derive("rollout").derive(std::uint64_t{0}).derive(task.query_id());
  auto ros = rollout(before, task, 2, cfg.temperature, cfg.max_len, rng, "s0-" + task.query_id());
  auto teacher = teacher_generate("minimal", task);
  const auto e_t = encode(teacher.text, cfg.encoder);

  std::vector<double> div, totals;
  for (const auto& ro : ros) {
    const bool ok = ro.trajectory.answer == task.gold_answer();
    const double d = 1.0 - std::clamp(cosine(encode(ro.trajectory.text, cfg.encoder), e_t), 0.0, 1.0);
    div.push_back(d);
    totals.push_back(ok ? 1.0 + d * std::exp(-entropy(ro.last_token.probs)) : 0.0);
  }
  const std::size_t victim = div[1] < div[0] ? 1 : 0;
  totals[victim] = 1.0;
  CHECK(g.hybrid.replaced_indices == std::vector<std::size_t>{victim});
  for (std::size_t i = 0; i < 2; ++i) CHECK(g.hybrid_rewards[i].r_total == doctest::Approx(totals[i]).epsilon(1e-14));

  const double mean = (totals[0] + totals[1]) / 2.0;
  const double sd = std::abs(totals[0] - totals[1]) / 2.0;
  std::vector<double> adv(2, 0.0);
  if (sd >= 1e-6) {
    for (int i = 0; i < 2; ++i) adv[i] = (totals[i] - mean) / (sd + 1e-6);
  }

  double obj = 0.0, ent = 0.0;
  std::size_t tokens = 0, online_tokens = 0;
  for (std::size_t i = 0; i < 2; ++i) {
    const auto& toks = i == victim ? *teacher.token_ids : *ros[i].trajectory.token_ids;
    for (std::size_t pos = 0; pos < toks.size(); ++pos) {
      const auto dist = before.distribution(task.bucket(), pos);
      double r = 1.0;
      if (i == victim) {
        const double p = dist[static_cast<std::size_t>(toks[pos])];
        r = p / (p + cfg.optimizer.offpolicy_gamma);
      } else {
        ent += entropy(dist);
        ++online_tokens;
      }
      const double clipped = std::clamp(r, 1.0 - cfg.optimizer.clip_eps, 1.0 + cfg.optimizer.clip_eps);
      obj += std::min(r * adv[i], clipped * adv[i]);
      ++tokens;
    }
  }
  const double loss = -(obj / static_cast<double>(tokens) +
                        cfg.optimizer.entropy_coeff * ent / static_cast<double>(online_tokens));
  CHECK(result.metrics.loss == doctest::Approx(loss).epsilon(1e-12));
  CHECK(result.metrics.rollouts == 2);
  CHECK(result.metrics.failed_ratio + static_cast<double>(result.metrics.correct) / 2.0 == 1.0);
  CHECK(state.step == 1);
  return result.metrics.correct;
}

TEST_CASE("single step matches a hand trace") {
  std::size_t correct = 0;
  for (std::uint64_t seed = 0; seed < 60; ++seed) correct += check_hand_trace(seed);
  CHECK(correct > 0);
}

TEST_CASE("no teachers and k = 0 reduces to plain GRPO") {
  SimConfig grpo;
  grpo.variant = Variant::kGrpo;
  grpo.steps = 5;
  SimConfig bare = grpo;
  bare.variant = Variant::kOger;
  bare.teachers = {};
  bare.replace_k = 0;
  auto a = run_training(grpo);
  auto b = run_training(bare);
  REQUIRE(a.metrics.size() == b.metrics.size());
  for (std::size_t i = 0; i < a.metrics.size(); ++i) {
    CHECK(a.metrics[i].loss == b.metrics[i].loss);
    CHECK(a.metrics[i].oger_mean == 0.0);
    CHECK(b.metrics[i].oger_mean == 0.0);
  }
  CHECK(a.final_policy == b.final_policy);
}

TEST_CASE("all-wrong batch") {
  SimConfig cfg;
  auto state = initial_state(cfg);
  for (std::size_t b = 0; b < kNumQueries; ++b) {
    state.policy.params()[state.policy.index(b, 0, kHmm)] = 60.0;
    state.policy.params()[state.policy.index(b, 1, kTerminator)] = 60.0;
  }
  auto r = train_step(state, cfg);
  CHECK(r.metrics.failed_ratio == 1.0);
  CHECK(r.metrics.correct == 0);
  CHECK(r.metrics.oger_mean == 0.0);
  CHECK(r.metrics.oger_max == 0.0);
}

TEST_CASE("run training outputs") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "oger_unit_run";
  fs::remove_all(dir);
  SimConfig cfg;
  cfg.steps = 0;
  std::ostringstream log;
  auto out = run_training(cfg, &log, dir);
  CHECK(out.metrics.empty());
  CHECK(log.str().empty());
  CHECK(std::distance(fs::directory_iterator(dir), fs::directory_iterator{}) == 2);
  std::ifstream initial(dir / "policy_step00000.json");
  CHECK(TabularPolicy::load(initial) == initial_policy(cfg));
  std::ifstream final_policy(dir / "policy_final.json");
  CHECK(TabularPolicy::load(final_policy) == initial_policy(cfg));

  cfg.steps = 4;
  cfg.snapshot_every = 2;
  std::ostringstream l1, l2;
  auto r1 = run_training(cfg, &l1, dir);
  auto r2 = run_training(cfg, &l2);
  CHECK(l1.str() == l2.str());
  CHECK(r1.final_policy == r2.final_policy);
  CHECK(fs::exists(dir / "policy_step00002.json"));
  CHECK(fs::exists(dir / "policy_step00004.json"));
  for (const auto& m : r1.metrics) {
    CHECK(m.failed_ratio >= 0.0);
    CHECK(m.failed_ratio <= 1.0);
    CHECK(m.oger_mean <= m.oger_max);
    CHECK(m.failed_ratio + static_cast<double>(m.correct) / static_cast<double>(m.rollouts) ==
          doctest::Approx(1.0).epsilon(1e-15));
  }
  fs::remove_all(dir);
}

TEST_CASE("evaluate pass at k") {
  SimConfig cfg;
  auto policy = initial_policy(cfg);
  const auto tasks = all_tasks();
  std::vector<std::size_t> ks = {1, 4};
  auto rep = evaluate_pass_at_k(policy, std::span(tasks).first(10), 4, ks, 1.0, 12, 3);
  CHECK(rep.per_query.size() == 10);
  double mean1 = 0.0;
  for (std::size_t q = 0; q < 10; ++q) {
    CHECK(rep.per_query[q][0] == doctest::Approx(static_cast<double>(rep.correct[q]) / 4.0));
    CHECK(rep.per_query[q][1] == (rep.correct[q] > 0 ? 1.0 : 0.0));
    mean1 += rep.per_query[q][0];
  }
  CHECK(rep.mean[0] == doctest::Approx(mean1 / 10.0));
  std::vector<std::size_t> too_big = {5};
  CHECK_THROWS_AS(evaluate_pass_at_k(policy, tasks, 4, too_big, 1.0, 12, 3), InvalidArgument);
}

TEST_CASE("sim config validation") {
  SimConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.replace_k = 9;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.replace_k = 1;
  cfg.encoder.kind = EncoderSpec::Kind::kExternal;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
