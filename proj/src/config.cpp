#include "oger/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

#include "oger/error.hpp"

namespace oger {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string format_double(double x) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, end);
}

double parse_double(std::string_view v, std::string_view key) {
  double x = 0.0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) {
    throw ConfigError("invalid value '" + std::string(v) + "' for " + std::string(key));
  }
  return x;
}

std::uint64_t parse_u64(std::string_view v, std::string_view key) {
  std::uint64_t x = 0;
  int base = 10;
  if (v.size() > 2 && v[0] == '0' && (v[1] == 'x' || v[1] == 'X')) {
    v.remove_prefix(2);
    base = 16;
  }
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x, base);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) {
    throw ConfigError("invalid value '" + std::string(v) + "' for " + std::string(key));
  }
  return x;
}

std::size_t parse_size(std::string_view v, std::string_view key) {
  const auto x = parse_u64(v, key);
  if (x > std::numeric_limits<std::size_t>::max()) throw ConfigError(std::string(key) + " out of range");
  return static_cast<std::size_t>(x);
}

std::string join(const std::vector<std::string>& xs) {
  std::string out;
  for (const auto& x : xs) out += (out.empty() ? "" : ",") + x;
  return out;
}

std::string join(const std::vector<std::size_t>& xs) {
  std::string out;
  for (auto x : xs) out += (out.empty() ? "" : ",") + std::to_string(x);
  return out;
}

struct Entry {
  std::string key;
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename Field>
Entry size_entry(std::string key, Field field) {
  return {key,
          [field, key](RunConfig& c, std::string_view v) { field(c) = parse_size(v, key); },
          [field](const RunConfig& c) { return std::to_string(field(c)); }};
}

template <typename Field>
Entry double_entry(std::string key, Field field) {
  return {key,
          [field, key](RunConfig& c, std::string_view v) { field(c) = parse_double(v, key); },
          [field](const RunConfig& c) { return format_double(field(c)); }};
}

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table = [] {
    std::vector<Entry> t;
    t.push_back({"curation.max_tokens",
                 [](RunConfig& c, std::string_view v) {
                   c.curation.max_tokens = static_cast<std::int64_t>(parse_u64(v, "curation.max_tokens"));
                 },
                 [](const RunConfig& c) { return std::to_string(c.curation.max_tokens); }});
    t.push_back({"curation.verifier",
                 [](RunConfig& c, std::string_view v) { c.curation.verifier = std::string(v); },
                 [](const RunConfig& c) { return c.curation.verifier; }});
    t.push_back({"curation.teachers",
                 [](RunConfig& c, std::string_view v) { c.curation.teachers = split_csv(v); },
                 [](const RunConfig& c) { return join(c.curation.teachers); }});

    t.push_back({"encoder.kind",
                 [](RunConfig& c, std::string_view v) {
                   if (v == "reference") {
                     c.encoder.kind = EncoderSpec::Kind::kReference;
                   } else if (v == "external") {
                     c.encoder.kind = EncoderSpec::Kind::kExternal;
                   } else {
                     throw ConfigError("invalid value '" + std::string(v) + "' for encoder.kind");
                   }
                 },
                 [](const RunConfig& c) {
                   return std::string(c.encoder.kind == EncoderSpec::Kind::kReference ? "reference"
                                                                                      : "external");
                 }});
    t.push_back(size_entry("encoder.d", [](auto& c) -> auto& { return c.encoder.d; }));
    t.push_back({"encoder.ngram_orders",
                 [](RunConfig& c, std::string_view v) {
                   c.encoder.ngram_orders = parse_size_list(v, "encoder.ngram_orders");
                 },
                 [](const RunConfig& c) { return join(c.encoder.ngram_orders); }});
    t.push_back({"encoder.seed",
                 [](RunConfig& c, std::string_view v) { c.encoder.seed = parse_u64(v, "encoder.seed"); },
                 [](const RunConfig& c) { return std::to_string(c.encoder.seed); }});
    t.push_back({"encoder.cache",
                 [](RunConfig& c, std::string_view v) { c.encoder_cache = std::string(v); },
                 [](const RunConfig& c) { return c.encoder_cache; }});

    t.push_back(size_entry("replacement.k", [](auto& c) -> auto& { return c.replace_k; }));

    t.push_back(double_entry("optimizer.clip_eps",
                             [](auto& c) -> auto& { return c.optimizer.clip_eps; }));
    t.push_back(double_entry("optimizer.kl_coeff",
                             [](auto& c) -> auto& { return c.optimizer.kl_coeff; }));
    t.push_back(double_entry("optimizer.entropy_coeff",
                             [](auto& c) -> auto& { return c.optimizer.entropy_coeff; }));
    t.push_back(double_entry("optimizer.learning_rate",
                             [](auto& c) -> auto& { return c.optimizer.learning_rate; }));
    t.push_back(double_entry("optimizer.offpolicy_gamma",
                             [](auto& c) -> auto& { return c.optimizer.offpolicy_gamma; }));

    t.push_back(size_entry("simulation.steps",
                           [](auto& c) -> auto& { return c.simulation.steps; }));
    t.push_back(size_entry("simulation.batch_queries",
                           [](auto& c) -> auto& { return c.simulation.batch_queries; }));
    t.push_back(size_entry("simulation.group_size",
                           [](auto& c) -> auto& { return c.simulation.group_size; }));
    t.push_back(double_entry("simulation.temperature",
                             [](auto& c) -> auto& { return c.simulation.temperature; }));
    t.push_back(size_entry("simulation.max_len",
                           [](auto& c) -> auto& { return c.simulation.max_len; }));
    t.push_back({"simulation.variant",
                 [](RunConfig& c, std::string_view v) { c.simulation.variant = sim::parse_variant(v); },
                 [](const RunConfig& c) { return std::string(sim::variant_name(c.simulation.variant)); }});
    t.push_back({"simulation.seed",
                 [](RunConfig& c, std::string_view v) { c.simulation.seed = parse_u64(v, "simulation.seed"); },
                 [](const RunConfig& c) { return std::to_string(c.simulation.seed); }});
    t.push_back(size_entry("simulation.snapshot_every",
                           [](auto& c) -> auto& { return c.simulation.snapshot_every; }));
    t.push_back({"simulation.teachers",
                 [](RunConfig& c, std::string_view v) { c.simulation.teachers = split_csv(v); },
                 [](const RunConfig& c) { return join(c.simulation.teachers); }});
    t.push_back(double_entry("simulation.init_scale",
                             [](auto& c) -> auto& { return c.simulation.init_scale; }));

    t.push_back(size_entry("evaluation.rollouts",
                           [](auto& c) -> auto& { return c.evaluation.rollouts; }));
    t.push_back({"evaluation.k",
                 [](RunConfig& c, std::string_view v) { c.evaluation.k = parse_size_list(v, "evaluation.k"); },
                 [](const RunConfig& c) { return join(c.evaluation.k); }});
    t.push_back(double_entry("evaluation.temperature",
                             [](auto& c) -> auto& { return c.evaluation.temperature; }));
    return t;
  }();
  return table;
}

const Entry& find_entry(std::string_view key) {
  for (const auto& e : entries()) {
    if (e.key == key) return e;
  }
  throw ConfigError("unknown config key '" + std::string(key) + "'");
}

}  // namespace

std::vector<std::string> split_csv(std::string_view csv) {
  std::vector<std::string> out;
  csv = trim(csv);
  if (csv.empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto comma = csv.find(',', start);
    out.emplace_back(trim(csv.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::vector<std::size_t> parse_size_list(std::string_view csv, std::string_view key) {
  std::vector<std::size_t> out;
  for (const auto& item : split_csv(csv)) out.push_back(parse_size(item, key));
  if (out.empty()) throw ConfigError(std::string(key) + " must list at least one value");
  return out;
}

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& e : entries()) out.push_back(e.key);
    return out;
  }();
  return names;
}

void RunConfig::set(std::string_view key, std::string_view value) {
  find_entry(key).set(*this, trim(value));
}

std::string RunConfig::get(std::string_view key) const { return find_entry(key).get(*this); }

void RunConfig::merge_file(std::istream& in, std::string_view origin) {
  std::string line;
  std::string section;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto text = trim(line);
    if (text.empty() || text.front() == '#' || text.front() == ';') continue;
    const std::string where = std::string(origin) + ":" + std::to_string(line_no) + ": ";
    if (text.front() == '[') {
      if (text.back() != ']') throw ConfigError(where + "unterminated section header");
      section = std::string(trim(text.substr(1, text.size() - 2)));
      continue;
    }
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where + "expected 'key = value'");
    if (section.empty()) throw ConfigError(where + "key outside of a [section]");
    const std::string key = section + "." + std::string(trim(text.substr(0, eq)));
    try {
      set(key, text.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
}

void RunConfig::merge_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  merge_file(in, path);
}

std::string RunConfig::serialize() const {
  std::ostringstream out;
  std::string section;
  for (const auto& e : entries()) {
    const auto dot = e.key.find('.');
    const auto sec = e.key.substr(0, dot);
    if (sec != section) {
      if (!section.empty()) out << '\n';
      out << '[' << sec << "]\n";
      section = sec;
    }
    out << e.key.substr(dot + 1) << " = " << e.get(*this) << '\n';
  }
  return out.str();
}

sim::SimConfig RunConfig::sim_config() const {
  sim::SimConfig s = simulation;
  s.replace_k = replace_k;
  s.optimizer = optimizer;
  s.encoder = encoder;
  return s;
}

void RunConfig::validate() const {
  if (curation.max_tokens <= 0) throw ConfigError("curation.max_tokens must be positive");
  make_verifier(curation.verifier);
  encoder.validate();
  optimizer.validate();
  for (auto k : evaluation.k) {
    if (k > evaluation.rollouts) throw ConfigError("evaluation.k entries must not exceed evaluation.rollouts");
  }
  if (!(evaluation.temperature > 0.0)) throw ConfigError("evaluation.temperature must be positive");
}

}  // namespace oger
