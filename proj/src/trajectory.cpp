#include "oger/trajectory.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <unordered_set>

#include "oger/error.hpp"

namespace oger {

namespace {

using nlohmann::json;

bool valid_teacher_name(std::string_view name) {
  if (name.empty()) return false;
  return std::all_of(name.begin(), name.end(), [](char c) {
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') ||
           (c >= '0' && c <= '9') || c == '_' || c == '-';
  });
}

const json& require(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(std::string("missing field '") + key + "'");
  return *it;
}

std::string require_string(const json& obj, const char* key) {
  const json& v = require(obj, key);
  if (!v.is_string()) throw ParseError(std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

std::int64_t require_count(const json& v, const char* key) {
  if (!v.is_number_integer()) {
    throw ParseError(std::string("field '") + key + "' must be an integer");
  }
  if (v.is_number_unsigned()) {
    auto u = v.get<std::uint64_t>();
    if (u > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
      throw ParseError(std::string("field '") + key + "' out of range");
    }
    return static_cast<std::int64_t>(u);
  }
  auto x = v.get<std::int64_t>();
  if (x < 0) throw ParseError(std::string("field '") + key + "' must be non-negative");
  return x;
}

const std::unordered_set<std::string>& known_keys() {
  static const std::unordered_set<std::string> keys = {
      "id", "query_id", "source", "text", "token_ids",
      "answer", "gold_answer", "correct", "length"};
  return keys;
}

}  // namespace

Source Source::teacher(std::string name) {
  if (!valid_teacher_name(name)) {
    throw ParseError("field 'source': invalid teacher name '" + name + "'");
  }
  return Source(Kind::kTeacher, std::move(name));
}

Source Source::parse(std::string_view text) {
  if (text == "online") return online();
  constexpr std::string_view prefix = "teacher:";
  if (text.substr(0, prefix.size()) == prefix) {
    return teacher(std::string(text.substr(prefix.size())));
  }
  throw ParseError("field 'source': expected 'online' or 'teacher:<name>', got '" +
                   std::string(text) + "'");
}

std::string Source::to_string() const {
  return is_online() ? std::string("online") : "teacher:" + teacher_;
}

void validate(const Trajectory& t) {
  if (t.id.empty()) throw InvalidArgument("trajectory id must be non-empty");
  if (t.length < 0) throw InvalidArgument("trajectory " + t.id + ": negative length");
  if (t.token_ids && static_cast<std::int64_t>(t.token_ids->size()) != t.length) {
    throw InvalidArgument("trajectory " + t.id + ": length " + std::to_string(t.length) +
                          " disagrees with " + std::to_string(t.token_ids->size()) +
                          " token_ids");
  }
  if (!t.extras.is_object()) throw InvalidArgument("trajectory " + t.id + ": extras must be an object");
}

Trajectory parse_trajectory_record(std::string_view line) {
  std::string dup;
  json::parser_callback_t detect_duplicates =
      [&dup, seen = std::vector<std::unordered_set<std::string>>{}](
          int /*depth*/, json::parse_event_t event, json& parsed) mutable {
        switch (event) {
          case json::parse_event_t::object_start:
            seen.emplace_back();
            break;
          case json::parse_event_t::object_end:
            if (!seen.empty()) seen.pop_back();
            break;
          case json::parse_event_t::key: {
            auto key = parsed.get<std::string>();
            if (!seen.empty() && !seen.back().insert(key).second && dup.empty()) {
              dup = key;
            }
            break;
          }
          default:
            break;
        }
        return true;
      };

  json obj;
  try {
    obj = json::parse(line.begin(), line.end(), detect_duplicates);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed record: ") + e.what());
  }
  if (!dup.empty()) throw ParseError("duplicate field '" + dup + "'");
  if (!obj.is_object()) throw ParseError("record must be an object");

  Trajectory t;
  t.id = require_string(obj, "id");
  if (t.id.empty()) throw ParseError("field 'id' must be non-empty");
  t.query_id = require_string(obj, "query_id");
  t.source = Source::parse(require_string(obj, "source"));
  t.text = require_string(obj, "text");
  t.answer = require_string(obj, "answer");
  t.length = require_count(require(obj, "length"), "length");

  if (auto it = obj.find("token_ids"); it != obj.end()) {
    if (!it->is_array()) throw ParseError("field 'token_ids' must be an array");
    std::vector<std::int32_t> ids;
    ids.reserve(it->size());
    for (const auto& v : *it) {
      auto x = require_count(v, "token_ids");
      if (x > std::numeric_limits<std::int32_t>::max()) {
        throw ParseError("field 'token_ids' entry out of range");
      }
      ids.push_back(static_cast<std::int32_t>(x));
    }
    if (static_cast<std::int64_t>(ids.size()) != t.length) {
      throw ParseError("field 'length' (" + std::to_string(t.length) +
                       ") disagrees with token_ids count (" + std::to_string(ids.size()) + ")");
    }
    t.token_ids = std::move(ids);
  }
  if (auto it = obj.find("gold_answer"); it != obj.end()) {
    if (!it->is_string()) throw ParseError("field 'gold_answer' must be a string");
    t.gold_answer = it->get<std::string>();
  }
  if (auto it = obj.find("correct"); it != obj.end()) {
    if (!it->is_boolean()) throw ParseError("field 'correct' must be a boolean");
    t.correct = it->get<bool>();
  }

  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!known_keys().contains(it.key())) t.extras[it.key()] = it.value();
  }
  return t;
}

std::string serialize_trajectory(const Trajectory& t) {
  // ordered_json keeps the canonical field order stable for diffs.
  nlohmann::ordered_json obj;
  obj["id"] = t.id;
  obj["query_id"] = t.query_id;
  obj["source"] = t.source.to_string();
  obj["text"] = t.text;
  if (t.token_ids) obj["token_ids"] = *t.token_ids;
  obj["answer"] = t.answer;
  if (t.gold_answer) obj["gold_answer"] = *t.gold_answer;
  if (t.correct) obj["correct"] = *t.correct;
  obj["length"] = t.length;
  for (const auto& [key, value] : t.extras.items()) {
    obj[key] = nlohmann::ordered_json::parse(value.dump());
  }
  return obj.dump();
}

std::vector<Trajectory> read_corpus(std::istream& in) {
  std::vector<Trajectory> out;
  std::unordered_set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Trajectory t;
    try {
      t = parse_trajectory_record(line);
    } catch (const ParseError& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!ids.insert(t.id).second) {
      throw ParseError("line " + std::to_string(line_no) + ": duplicate id '" + t.id + "'");
    }
    out.push_back(std::move(t));
  }
  return out;
}

void write_corpus(std::ostream& out, std::span<const Trajectory> corpus) {
  for (const auto& t : corpus) out << serialize_trajectory(t) << '\n';
}

std::vector<TrajectoryGroup> group_by_query(std::span<const Trajectory> records) {
  std::vector<TrajectoryGroup> groups;
  std::map<std::string, std::size_t> index;
  for (const auto& t : records) {
    auto [it, inserted] = index.try_emplace(t.query_id, groups.size());
    if (inserted) groups.push_back(TrajectoryGroup{t.query_id, {}, {}});
    auto& g = groups[it->second];
    (t.source.is_online() ? g.online : g.offline).push_back(t);
  }
  return groups;
}

}  // namespace oger
