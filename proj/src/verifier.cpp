#include "oger/verifier.hpp"

#include <cctype>

#include "oger/error.hpp"

namespace oger {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool all_digits(std::string_view s) {
  for (char c : s) {
    if (c < '0' || c > '9') return false;
  }
  return true;
}

// Canonical decimal: optional sign, no leading zeros, no trailing fractional
// zeros, "-0" folded to "0". Returns the input unchanged if not a decimal.
std::string canonical_decimal(std::string_view s) {
  std::string_view body = s;
  bool negative = false;
  if (!body.empty() && (body.front() == '+' || body.front() == '-')) {
    negative = body.front() == '-';
    body.remove_prefix(1);
  }
  auto dot = body.find('.');
  std::string_view whole = body.substr(0, dot);
  std::string_view frac = dot == std::string_view::npos ? std::string_view{} : body.substr(dot + 1);
  if (whole.empty() && frac.empty()) return std::string(s);
  if (!all_digits(whole) || !all_digits(frac)) return std::string(s);
  if (dot != std::string_view::npos && frac.empty() && whole.empty()) return std::string(s);

  while (!whole.empty() && whole.front() == '0') whole.remove_prefix(1);
  while (!frac.empty() && frac.back() == '0') frac.remove_suffix(1);

  std::string out(whole.empty() ? "0" : whole);
  if (!frac.empty()) out += "." + std::string(frac);
  if (negative && out != "0") out.insert(out.begin(), '-');
  return out;
}

}  // namespace

std::string normalize_answer(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.back() == '.') s = trim(s.substr(0, s.size() - 1));
  return canonical_decimal(s);
}

bool ExactMatchVerifier::verify(std::string_view answer, std::string_view gold) const {
  if (!normalize_) return answer == gold;
  return normalize_answer(answer) == normalize_answer(gold);
}

std::unique_ptr<Verifier> make_verifier(std::string_view name) {
  if (name == "exact") return std::make_unique<ExactMatchVerifier>();
  if (name == "exact-raw") return std::make_unique<ExactMatchVerifier>(false);
  throw ConfigError("unknown verifier '" + std::string(name) + "'");
}

}  // namespace oger
