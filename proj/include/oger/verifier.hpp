#pragma once

#include <memory>
#include <string>
#include <string_view>

namespace oger {

/// Judges a final answer against a gold answer.
class Verifier {
 public:
  virtual ~Verifier() = default;
  virtual std::string name() const = 0;
  virtual bool verify(std::string_view answer, std::string_view gold) const = 0;
};

/// Exact match after trimming whitespace and one trailing period. When both
/// sides parse as decimal numbers they are compared in canonical form, so
/// "7.0", "07" and "+7" all equal "7".
class ExactMatchVerifier final : public Verifier {
 public:
  explicit ExactMatchVerifier(bool normalize = true) : normalize_(normalize) {}

  std::string name() const override { return "exact"; }
  bool verify(std::string_view answer, std::string_view gold) const override;

 private:
  bool normalize_;
};

/// Trimmed, trailing-period-stripped, decimal-canonicalized form of `s`.
std::string normalize_answer(std::string_view s);

/// "exact" or "exact-raw" (byte comparison). Throws ConfigError otherwise.
std::unique_ptr<Verifier> make_verifier(std::string_view name);

}  // namespace oger
