#include <cmath>
#include <set>
#include <sstream>

#include "doctest.h"
#include "oger/embedding.hpp"
#include "oger/error.hpp"

using namespace oger;

TEST_CASE("encode basics") {
  EncoderSpec spec;
  const auto a = encode("so then 3 plus 4 eq 7", spec);
  CHECK(a == encode("so then 3 plus 4 eq 7", spec));
  CHECK(a.d() == spec.d);
  CHECK(a.norm() == doctest::Approx(1.0).epsilon(1e-12));

  const auto z = encode("", spec);
  CHECK(z.d() == spec.d);
  CHECK(z.is_zero());
  CHECK(encode("a", spec).is_zero());  // shorter than every n-gram order
}

TEST_CASE("encode matches a hand-built count vector") {
  EncoderSpec spec;
  spec.d = 64;
  spec.ngram_orders = {2, 3};
  const std::string text = "abcab";
  std::vector<double> counts(spec.d, 0.0);
  for (std::size_t n : spec.ngram_orders) {
    for (std::size_t i = 0; i + n <= text.size(); ++i) counts[ngram_bucket(text.substr(i, n), spec)] += 1.0;
  }
  double norm = 0.0;
  for (double c : counts) norm += c * c;
  norm = std::sqrt(norm);
  const auto e = encode(text, spec);
  for (std::size_t i = 0; i < spec.d; ++i) CHECK(e.values[i] == doctest::Approx(counts[i] / norm).epsilon(1e-14));
}

TEST_CASE("disjoint trigrams give zero cosine") {
  EncoderSpec spec;
  spec.d = 4096;
  spec.ngram_orders = {3};
  const std::string u = "abcabcabc";
  const std::string v = "xyzxyzxyz";
  std::set<std::size_t> bu, bv;
  for (std::size_t i = 0; i + 3 <= u.size(); ++i) bu.insert(ngram_bucket(u.substr(i, 3), spec));
  for (std::size_t i = 0; i + 3 <= v.size(); ++i) bv.insert(ngram_bucket(v.substr(i, 3), spec));
  CHECK(bu.size() == 3);
  CHECK(bv.size() == 3);
  for (auto b : bu) CHECK(bv.count(b) == 0);
  CHECK(cosine(encode(u, spec), encode(v, spec)) == 0.0);
}

TEST_CASE("cosine") {
  CHECK(cosine({{3, 4}}, {{3, 4}}) == doctest::Approx(1.0));
  CHECK(cosine({{1, 0}}, {{0, 1}}) == 0.0);
  CHECK(std::abs(cosine({{1, 1}}, {{1, 0}}) - 0.70710678) < 1e-8);
  CHECK(cosine({{0, 0}}, {{1, 0}}) == 0.0);
  CHECK(cosine({{1, 0}}, {{-1, 0}}) == doctest::Approx(-1.0));
  CHECK_THROWS_AS(cosine({{1, 0}}, {{1, 0, 0}}), InvalidArgument);
}

TEST_CASE("encoder spec validation") {
  EncoderSpec spec;
  spec.d = 0;
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  spec.d = 8;
  spec.ngram_orders = {};
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  spec.ngram_orders = {2};
  spec.kind = EncoderSpec::Kind::kExternal;
  CHECK_THROWS_AS(encode("abc", spec), InvalidArgument);
}

TEST_CASE("embedding cache round trip") {
  EmbeddingCache cache;
  cache.put("a", {{0.5, 0.25, -1.0}});
  cache.put("b", {{0.0, 1.0, 0.0}});
  CHECK_THROWS_AS(cache.put("c", {{1.0}}), InvalidArgument);
  std::stringstream ss;
  cache.write(ss);
  auto back = EmbeddingCache::read(ss);
  CHECK(back.size() == 2);
  CHECK(back.d() == 3);
  REQUIRE(back.find("a"));
  CHECK(*back.find("a") == EmbeddingVector{{0.5, 0.25, -1.0}});
  CHECK(back.find("zzz") == nullptr);

  std::stringstream bad("{\"id\":\"a\"}\n");
  CHECK_THROWS_AS(EmbeddingCache::read(bad), ParseError);
}
