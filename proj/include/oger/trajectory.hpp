#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace oger {

/// Provenance of a trajectory: sampled from the online policy or taken from a
/// named teacher model.
class Source {
 public:
  enum class Kind { kOnline, kTeacher };

  static Source online() { return Source(Kind::kOnline, {}); }
  /// Throws ParseError unless `name` matches [A-Za-z0-9_-]+.
  static Source teacher(std::string name);
  /// Accepts `online` or `teacher:<name>`.
  static Source parse(std::string_view text);

  Kind kind() const { return kind_; }
  bool is_online() const { return kind_ == Kind::kOnline; }
  bool is_teacher() const { return kind_ == Kind::kTeacher; }
  const std::string& teacher_name() const { return teacher_; }
  std::string to_string() const;

  friend bool operator==(const Source&, const Source&) = default;

 private:
  Source(Kind kind, std::string teacher)
      : kind_(kind), teacher_(std::move(teacher)) {}

  Kind kind_;
  std::string teacher_;
};

struct Trajectory {
  std::string id;
  std::string query_id;
  Source source = Source::online();
  std::string text;
  std::optional<std::vector<std::int32_t>> token_ids;
  std::string answer;
  std::optional<std::string> gold_answer;
  std::optional<bool> correct;
  std::int64_t length = 0;
  /// Fields not known to this version, carried through round-trips untouched.
  nlohmann::json extras = nlohmann::json::object();

  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

/// Throws InvalidArgument when `t` breaks a record invariant.
void validate(const Trajectory& t);

Trajectory parse_trajectory_record(std::string_view line);
std::string serialize_trajectory(const Trajectory& t);

/// Reads one record per non-blank line. Ids must be unique across the stream.
std::vector<Trajectory> read_corpus(std::istream& in);
void write_corpus(std::ostream& out, std::span<const Trajectory> corpus);

struct TrajectoryGroup {
  std::string query_id;
  std::vector<Trajectory> online;
  std::vector<Trajectory> offline;

  std::size_t n() const { return online.size(); }
  std::size_t m() const { return offline.size(); }
};

/// One group per distinct query_id, in order of first appearance. Members keep
/// their input order within the online and offline partitions.
std::vector<TrajectoryGroup> group_by_query(std::span<const Trajectory> records);

struct HybridGroup {
  std::string query_id;
  std::vector<Trajectory> members;
  std::vector<std::size_t> replaced_indices;

  std::size_t k() const { return replaced_indices.size(); }
};

}  // namespace oger
