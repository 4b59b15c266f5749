#include "oger/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>

#include "CLI11.hpp"
#include "json.hpp"
#include "oger/config.hpp"
#include "oger/curation.hpp"
#include "oger/embedding.hpp"
#include "oger/error.hpp"
#include "oger/exploration_reward.hpp"
#include "oger/log.hpp"
#include "oger/sim.hpp"
#include "oger/trajectory.hpp"

namespace oger::cli {

namespace {

namespace fs = std::filesystem;

constexpr const char* kEffectiveConfig = "effective_config.ini";

const std::set<std::string> kSubcommands = {"curate", "score", "train-sim", "eval", "report"};

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  while (!s.empty() && s.back() == ' ') s.pop_back();
  return s;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io", "cannot read '" + path + "'");
  return in;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("io", "cannot write '" + path.string() + "'");
  return out;
}

void write_effective_config(const RunConfig& cfg, const fs::path& dir) {
  auto out = open_out(dir / kEffectiveConfig);
  out << cfg.serialize();
}

fs::path dir_of(const std::string& file) {
  fs::path p(file);
  return p.has_parent_path() ? p.parent_path() : fs::path(".");
}

// Options shared by every subcommand.
struct Common {
  std::string config_path;
  std::vector<std::string> overrides;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "Run configuration file ([section] key = value)");
    app->add_option("--set", overrides,
                    "Override one config key, e.g. --set optimizer.clip_eps=0.3 (repeatable)");
  }

  RunConfig load() const {
    RunConfig cfg;
    if (!config_path.empty()) cfg.merge_file(config_path);
    for (const auto& o : overrides) {
      const auto eq = o.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects section.key=value, got '" + o + "'");
      cfg.set(o.substr(0, eq), o.substr(eq + 1));
    }
    return cfg;
  }
};

// curate ---------------------------------------------------------------------

struct CurateArgs {
  Common common;
  std::vector<std::string> inputs;
  std::optional<std::int64_t> max_len;
  std::optional<std::string> teachers;
  std::optional<std::string> verifier;
  std::string out;
  std::string report;
};

void run_curate(const CurateArgs& a, std::ostream& out) {
  RunConfig cfg = a.common.load();
  if (a.max_len) cfg.set("curation.max_tokens", std::to_string(*a.max_len));
  if (a.teachers) cfg.set("curation.teachers", *a.teachers);
  if (a.verifier) cfg.set("curation.verifier", *a.verifier);
  cfg.validate();

  std::vector<Trajectory> corpus;
  std::set<std::string> ids;
  for (const auto& path : a.inputs) {
    auto in = open_in(path);
    for (auto& t : read_corpus(in)) {
      if (!ids.insert(t.id).second) throw ParseError(path + ": duplicate id '" + t.id + "'");
      corpus.push_back(std::move(t));
    }
  }
  const auto result = curate(corpus, cfg.curation);

  auto corpus_out = open_out(a.out);
  write_corpus(corpus_out, result.curated);
  auto report_out = open_out(a.report);
  report_out << report_to_jsonl(result.report);
  write_effective_config(cfg, dir_of(a.out));

  out << format_report_table(result.report);
  if (result.report.skipped_records > 0) {
    out << "skipped (verification errors): " << result.report.skipped_records << '\n';
  }
  log::info("curated " + std::to_string(result.curated.size()) + " of " +
            std::to_string(corpus.size()) + " records");
}

// score ----------------------------------------------------------------------

struct ScoreArgs {
  Common common;
  std::string input;
  std::string out;
  std::optional<std::string> embeddings;
};

int verdict(const Trajectory& t, const Verifier& verifier) {
  if (t.correct) return *t.correct ? 1 : 0;
  if (!t.gold_answer) return 0;
  return verifier.verify(t.answer, *t.gold_answer) ? 1 : 0;
}

TokenDistribution last_token_of(const Trajectory& t) {
  auto it = t.extras.find("last_token_probs");
  if (it == t.extras.end()) {
    throw InvalidArgument("online record '" + t.id + "' has no last_token_probs");
  }
  TokenDistribution d;
  try {
    d.probs = it->get<std::vector<double>>();
  } catch (const nlohmann::json::exception&) {
    throw ParseError("record '" + t.id + "': last_token_probs must be an array of numbers");
  }
  d.validate();
  return d;
}

void run_score(const ScoreArgs& a) {
  RunConfig cfg = a.common.load();
  if (a.embeddings) cfg.set("encoder.cache", *a.embeddings);
  cfg.validate();
  const auto verifier = make_verifier(cfg.curation.verifier);

  std::optional<EmbeddingCache> cache;
  if (!cfg.encoder_cache.empty()) {
    auto in = open_in(cfg.encoder_cache);
    cache = EmbeddingCache::read(in);
  } else if (cfg.encoder.kind == EncoderSpec::Kind::kExternal) {
    throw ConfigError("encoder.kind=external requires encoder.cache or --embeddings");
  }
  auto embed = [&](const Trajectory& t) {
    if (cache) {
      const auto* v = cache->find(t.id);
      if (!v) throw InvalidArgument("no cached embedding for '" + t.id + "'");
      return *v;
    }
    return encode(t.text, cfg.encoder);
  };

  auto in = open_in(a.input);
  const auto records = read_corpus(in);
  auto out = open_out(a.out);
  for (const auto& g : group_by_query(records)) {
    std::vector<EmbeddingVector> e_on, e_off;
    std::vector<TokenDistribution> last;
    std::vector<int> r_on, r_off;
    for (const auto& t : g.online) {
      r_on.push_back(verdict(t, *verifier));
      if (g.m() > 0) {
        e_on.push_back(embed(t));
        last.push_back(last_token_of(t));
      } else {
        e_on.emplace_back();
      }
    }
    for (const auto& t : g.offline) {
      r_off.push_back(verdict(t, *verifier));
      e_off.push_back(embed(t));
    }
    const auto breakdowns = score_group(g, e_on, e_off, last, r_on, r_off);

    std::vector<const Trajectory*> members;
    for (const auto& t : g.online) members.push_back(&t);
    for (const auto& t : g.offline) members.push_back(&t);
    for (std::size_t i = 0; i < breakdowns.size(); ++i) {
      const auto& b = breakdowns[i];
      nlohmann::ordered_json j;
      j["id"] = b.id;
      j["query_id"] = g.query_id;
      j["source"] = members[i]->source.to_string();
      j["r_m"] = b.r_m;
      if (b.sim) j["sim"] = *b.sim;
      if (b.divergence) j["divergence"] = *b.divergence;
      if (b.h_last) j["h_last"] = *b.h_last;
      if (b.r_oger) j["r_oger"] = *b.r_oger;
      j["r_total"] = b.r_total;
      out << j.dump() << '\n';
    }
  }
  write_effective_config(cfg, dir_of(a.out));
}

// train-sim ------------------------------------------------------------------

struct TrainArgs {
  Common common;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> steps;
  std::optional<std::string> variant;
  std::optional<std::size_t> replace_k;
  std::string metrics_out;
  std::optional<std::string> snapshot_dir;
};

void run_train(const TrainArgs& a, std::ostream& out) {
  RunConfig cfg = a.common.load();
  if (a.seed) cfg.set("simulation.seed", std::to_string(*a.seed));
  if (a.steps) cfg.set("simulation.steps", std::to_string(*a.steps));
  if (a.variant) cfg.set("simulation.variant", *a.variant);
  if (a.replace_k) cfg.set("replacement.k", std::to_string(*a.replace_k));
  cfg.validate();
  const auto sim_cfg = cfg.sim_config();
  sim_cfg.validate();

  const fs::path run_dir = a.snapshot_dir ? fs::path(*a.snapshot_dir) : dir_of(a.metrics_out);
  std::optional<fs::path> snapshots;
  if (a.snapshot_dir) snapshots = *a.snapshot_dir;
  write_effective_config(cfg, run_dir);

  auto metrics = open_out(a.metrics_out);
  const auto result = sim::run_training(sim_cfg, &metrics, snapshots);
  if (!result.metrics.empty()) {
    const auto& last = result.metrics.back();
    out << "steps=" << result.metrics.size() << " avg_score=" << last.avg_score
        << " mean_entropy=" << last.mean_entropy << '\n';
  } else {
    out << "steps=0\n";
  }
}

// eval -----------------------------------------------------------------------

struct EvalArgs {
  Common common;
  std::string snapshot;
  std::optional<std::size_t> rollouts;
  std::optional<std::string> k;
  std::optional<double> temperature;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
};

void run_eval(const EvalArgs& a, std::ostream& out) {
  RunConfig cfg = a.common.load();
  if (a.rollouts) cfg.set("evaluation.rollouts", std::to_string(*a.rollouts));
  if (a.k) cfg.set("evaluation.k", *a.k);
  if (a.temperature) {
    cfg.evaluation.temperature = *a.temperature;
  }
  if (a.seed) cfg.set("simulation.seed", std::to_string(*a.seed));
  cfg.validate();

  auto in = open_in(a.snapshot);
  const auto policy = TabularPolicy::load(in);
  if (policy.buckets() != sim::kNumQueries || policy.vocab() != static_cast<std::size_t>(sim::kVocabSize)) {
    throw InvalidArgument("snapshot is not a symbol-sum policy");
  }
  const auto tasks = sim::all_tasks();
  const auto report =
      sim::evaluate_pass_at_k(policy, tasks, cfg.evaluation.rollouts, cfg.evaluation.k,
                              cfg.evaluation.temperature, policy.positions(), cfg.simulation.seed);

  nlohmann::ordered_json j;
  j["snapshot"] = a.snapshot;
  j["rollouts"] = cfg.evaluation.rollouts;
  j["temperature"] = cfg.evaluation.temperature;
  j["k"] = report.ks;
  j["mean"] = report.mean;
  auto& rows = j["per_query"] = nlohmann::ordered_json::array();
  for (std::size_t q = 0; q < report.query_ids.size(); ++q) {
    nlohmann::ordered_json row;
    row["query_id"] = report.query_ids[q];
    row["correct"] = report.correct[q];
    row["pass_at_k"] = report.per_query[q];
    rows.push_back(std::move(row));
  }
  if (a.out) {
    auto f = open_out(*a.out);
    f << j.dump() << '\n';
    write_effective_config(cfg, dir_of(*a.out));
  } else {
    out << j.dump() << '\n';
  }
}

// report ---------------------------------------------------------------------

struct ReportArgs {
  Common common;
  std::string metrics;
  std::string out_dir;
};

void run_report(const ReportArgs& a, std::ostream& out) {
  RunConfig cfg = a.common.load();
  static const std::vector<std::string> series = {"mean_entropy", "avg_score", "failed_ratio",
                                                  "oger_mean", "oger_max", "loss"};
  std::map<std::string, std::string> files;
  auto in = open_in(a.metrics);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
      const auto step = j.at("step").get<std::size_t>();
      for (const auto& name : series) {
        files[name] += std::to_string(step) + '\t' + j.at(name).dump() + '\n';
      }
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(a.metrics + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  fs::create_directories(a.out_dir);
  for (const auto& name : series) {
    auto f = open_out(fs::path(a.out_dir) / (name + ".tsv"));
    f << "step\t" << name << '\n' << files[name];
  }
  write_effective_config(cfg, a.out_dir);
  out << "wrote " << series.size() << " series to " << a.out_dir << '\n';
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  auto fail = [&](const std::string& code, const std::string& message, int status) {
    err << "oger: error: " << code << ": " << one_line(message) << '\n';
    return status;
  };

  if (!args.empty() && !args[0].empty() && args[0][0] != '-' && !kSubcommands.contains(args[0])) {
    return fail("usage", "unknown subcommand '" + args[0] + "'", kExitUsage);
  }

  CLI::App app{"OGER reward pipeline: curation, scoring, simulated training and evaluation", "oger"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  CurateArgs curate_args;
  auto* curate_cmd = app.add_subcommand("curate", "Filter teacher trajectories and report statistics");
  curate_args.common.attach(curate_cmd);
  curate_cmd->add_option("--input", curate_args.inputs, "Trajectory record files (JSON lines)")
      ->required()
      ->expected(1, -1);
  curate_cmd->add_option("--max-len", curate_args.max_len, "Inclusive token-length bound");
  curate_cmd->add_option("--teachers", curate_args.teachers, "Comma-separated teacher names to admit");
  curate_cmd->add_option("--verifier", curate_args.verifier, "Answer verifier (exact | exact-raw)");
  curate_cmd->add_option("--out", curate_args.out, "Curated corpus output file")->required();
  curate_cmd->add_option("--report", curate_args.report, "Per-teacher statistics output file")->required();

  ScoreArgs score_args;
  auto* score_cmd = app.add_subcommand("score", "Compute reward breakdowns for a group file");
  score_args.common.attach(score_cmd);
  score_cmd->add_option("--input", score_args.input,
                        "Group file: trajectory records; online records carry last_token_probs")
      ->required();
  score_cmd->add_option("--out", score_args.out, "Reward breakdown output file")->required();
  score_cmd->add_option("--embeddings", score_args.embeddings, "Embedding cache to replay instead of encoding");

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train-sim", "Run the simulated training loop");
  train_args.common.attach(train_cmd);
  train_cmd->add_option("--seed", train_args.seed, "Master seed");
  train_cmd->add_option("--steps", train_args.steps, "Number of training steps");
  train_cmd->add_option("--variant", train_args.variant, "oger | no-refine | no-reward | grpo")
      ->check(CLI::IsMember({"oger", "no-refine", "no-reward", "grpo"}));
  train_cmd->add_option("--replace-k", train_args.replace_k, "Teacher replacements per group");
  train_cmd->add_option("--metrics-out", train_args.metrics_out, "Per-step metrics file")->required();
  train_cmd->add_option("--snapshot-dir", train_args.snapshot_dir, "Directory for policy snapshots");

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "Estimate pass@k of a policy snapshot");
  eval_args.common.attach(eval_cmd);
  eval_cmd->add_option("--snapshot", eval_args.snapshot, "Policy snapshot file")->required();
  eval_cmd->add_option("--rollouts", eval_args.rollouts, "Rollouts per query");
  eval_cmd->add_option("--k", eval_args.k, "Comma-separated k values");
  eval_cmd->add_option("--temperature", eval_args.temperature, "Sampling temperature")
      ->check(CLI::PositiveNumber);
  eval_cmd->add_option("--seed", eval_args.seed, "Evaluation seed");
  eval_cmd->add_option("--out", eval_args.out, "Write the JSON report here instead of stdout");

  ReportArgs report_args;
  auto* report_cmd = app.add_subcommand("report", "Split a metrics file into per-metric series");
  report_args.common.attach(report_cmd);
  report_cmd->add_option("--metrics", report_args.metrics, "Metrics file from train-sim")->required();
  report_cmd->add_option("--out-dir", report_args.out_dir, "Output directory for series files")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), kExitUsage);
  }

  try {
    if (curate_cmd->parsed()) {
      run_curate(curate_args, out);
    } else if (score_cmd->parsed()) {
      run_score(score_args);
    } else if (train_cmd->parsed()) {
      run_train(train_args, out);
    } else if (eval_cmd->parsed()) {
      run_eval(eval_args, out);
    } else if (report_cmd->parsed()) {
      run_report(report_args, out);
    }
  } catch (const ConfigError& e) {
    return fail(e.code(), e.what(), kExitUsage);
  } catch (const Error& e) {
    return fail(e.code(), e.what(), kExitFailure);
  } catch (const std::exception& e) {
    return fail("internal", e.what(), kExitFailure);
  }
  return kExitOk;
}

}  // namespace oger::cli
