#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "oger/trajectory.hpp"
#include "oger/verifier.hpp"

namespace oger {

struct CurationConfig {
  std::int64_t max_tokens = 8192;
  std::string verifier = "exact";
  /// Teachers admitted to the curated corpus. Empty admits every teacher.
  std::vector<std::string> teachers;
};

struct TeacherStats {
  std::string teacher;
  std::size_t raw_samples = 0;  ///< verified records seen for this teacher
  std::size_t correct_samples = 0;
  std::size_t valid_samples = 0;  ///< passed both filters
  std::size_t skipped = 0;        ///< verification errors
  double total_valid_length = 0.0;

  double avg_length() const;
  double accuracy_pct() const;
};

struct CurationReport {
  std::vector<TeacherStats> rows;  ///< sorted by teacher name
  std::size_t skipped_records = 0;

  const TeacherStats* find(const std::string& teacher) const;
};

bool length_filter(const Trajectory& t, std::int64_t max_tokens);

/// Returns a copy of `t` with `correct` set from the verifier. Throws
/// VerificationError when the record has no gold answer.
Trajectory correctness_filter(const Trajectory& t, const Verifier& verifier);

struct CurationResult {
  std::vector<Trajectory> curated;  ///< sorted by id
  CurationReport report;
};

CurationResult curate(const std::vector<Trajectory>& corpus, const CurationConfig& cfg);

/// Human-readable table in the layout of the usual teacher statistics table:
/// Model | Valid Samples | Avg. Length | Accuracy (%).
std::string format_report_table(const CurationReport& report);

/// One JSON object per teacher row, newline-terminated.
std::string report_to_jsonl(const CurationReport& report);

/// Groups digits in threes: 45462 -> "45,462".
std::string with_thousands(std::uint64_t value);
/// Fixed two decimals with thousands separators: 4021.14 -> "4,021.14".
std::string format_fixed2(double value);

}  // namespace oger
