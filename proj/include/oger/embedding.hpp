#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace oger {

struct EmbeddingVector {
  std::vector<double> values;

  std::size_t d() const { return values.size(); }
  double norm() const;
  bool is_zero() const;

  friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;
};

inline constexpr std::uint64_t kDefaultEncoderSeed = 0x4F47455252454631ull;

struct EncoderSpec {
  enum class Kind { kReference, kExternal };

  Kind kind = Kind::kReference;
  std::size_t d = 256;
  std::vector<std::size_t> ngram_orders = {2, 3};
  std::uint64_t seed = kDefaultEncoderSeed;

  void validate() const;
};

/// Bucket of one character n-gram under the reference hashing scheme.
std::size_t ngram_bucket(std::string_view gram, const EncoderSpec& spec);

/// Reference embedder: hashed character n-gram counts, L2-normalized. Empty
/// text (or text shorter than every order) encodes to the zero vector.
EmbeddingVector encode(std::string_view text, const EncoderSpec& spec);

/// Cosine similarity clamped to [-1, 1]; 0 when either vector has zero norm.
/// Throws InvalidArgument on dimension mismatch.
double cosine(const EmbeddingVector& u, const EmbeddingVector& v);

/// Replay store for externally computed embeddings, keyed by trajectory id.
/// File format: one `{"id": ..., "vector": [...]}` object per line.
class EmbeddingCache {
 public:
  static EmbeddingCache read(std::istream& in);
  void write(std::ostream& out) const;

  void put(std::string id, EmbeddingVector v);
  const EmbeddingVector* find(const std::string& id) const;
  std::size_t size() const { return entries_.size(); }
  /// Dimensionality shared by all entries, 0 when empty.
  std::size_t d() const { return d_; }

 private:
  std::map<std::string, EmbeddingVector> entries_;
  std::size_t d_ = 0;
};

}  // namespace oger
