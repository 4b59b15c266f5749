#include "oger/curation.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>

#include "oger/error.hpp"

namespace oger {

double TeacherStats::avg_length() const {
  return valid_samples == 0 ? 0.0 : total_valid_length / static_cast<double>(valid_samples);
}

double TeacherStats::accuracy_pct() const {
  return raw_samples == 0 ? 0.0
                          : 100.0 * static_cast<double>(correct_samples) /
                                static_cast<double>(raw_samples);
}

const TeacherStats* CurationReport::find(const std::string& teacher) const {
  for (const auto& row : rows) {
    if (row.teacher == teacher) return &row;
  }
  return nullptr;
}

bool length_filter(const Trajectory& t, std::int64_t max_tokens) {
  return t.length <= max_tokens;
}

Trajectory correctness_filter(const Trajectory& t, const Verifier& verifier) {
  if (!t.gold_answer) {
    throw VerificationError("trajectory " + t.id + ": no gold answer");
  }
  Trajectory out = t;
  out.correct = verifier.verify(t.answer, *t.gold_answer);
  return out;
}

CurationResult curate(const std::vector<Trajectory>& corpus, const CurationConfig& cfg) {
  if (cfg.max_tokens <= 0) throw ConfigError("curation.max_tokens must be positive");
  auto verifier = make_verifier(cfg.verifier);

  std::map<std::string, TeacherStats> stats;
  for (const auto& name : cfg.teachers) stats[name].teacher = name;
  auto admitted = [&](const std::string& name) {
    return cfg.teachers.empty() ||
           std::find(cfg.teachers.begin(), cfg.teachers.end(), name) != cfg.teachers.end();
  };

  CurationResult result;
  for (const auto& t : corpus) {
    if (!t.source.is_teacher() || !admitted(t.source.teacher_name())) continue;
    auto& row = stats[t.source.teacher_name()];
    row.teacher = t.source.teacher_name();

    Trajectory verified;
    try {
      verified = correctness_filter(t, *verifier);
    } catch (const VerificationError&) {
      ++row.skipped;
      ++result.report.skipped_records;
      continue;
    }
    ++row.raw_samples;
    if (*verified.correct) ++row.correct_samples;
    if (*verified.correct && length_filter(verified, cfg.max_tokens)) {
      ++row.valid_samples;
      row.total_valid_length += static_cast<double>(verified.length);
      result.curated.push_back(std::move(verified));
    }
  }

  std::sort(result.curated.begin(), result.curated.end(),
            [](const Trajectory& a, const Trajectory& b) { return a.id < b.id; });
  for (auto& [name, row] : stats) result.report.rows.push_back(std::move(row));
  return result;
}

std::string with_thousands(std::uint64_t value) {
  std::string digits = std::to_string(value);
  std::string out;
  for (std::size_t i = 0; i < digits.size(); ++i) {
    if (i > 0 && (digits.size() - i) % 3 == 0) out += ',';
    out += digits[i];
  }
  return out;
}

std::string format_fixed2(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", value < 0 ? -value : value);
  std::string s(buf);
  auto dot = s.find('.');
  auto whole = std::stoull(s.substr(0, dot));
  return (value < 0 ? "-" : "") + with_thousands(whole) + s.substr(dot);
}

std::string format_report_table(const CurationReport& report) {
  std::ostringstream out;
  out << "Model | Valid Samples | Avg. Length | Accuracy (%)\n";
  for (const auto& row : report.rows) {
    out << row.teacher << " | " << with_thousands(row.valid_samples) << " | "
        << format_fixed2(row.avg_length()) << " | " << format_fixed2(row.accuracy_pct()) << '\n';
  }
  return out.str();
}

std::string report_to_jsonl(const CurationReport& report) {
  std::string out;
  for (const auto& row : report.rows) {
    nlohmann::ordered_json j;
    j["model"] = row.teacher;
    j["valid_samples"] = row.valid_samples;
    j["avg_length"] = row.avg_length();
    j["accuracy_pct"] = row.accuracy_pct();
    j["raw_samples"] = row.raw_samples;
    j["skipped"] = row.skipped;
    out += j.dump() + '\n';
  }
  return out;
}

}  // namespace oger
