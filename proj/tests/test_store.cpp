#include <doctest.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <limits>

#include "specs/embedding_store.hpp"
#include "specs/error.hpp"
#include "specs/rng.hpp"
#include "support.hpp"

using namespace specs;

namespace {

EmbeddingTable random_table(std::size_t n, std::uint32_t dim, std::uint64_t seed) {
  Rng rng(seed);
  EmbeddingTable t(dim);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<float> v(dim);
    for (auto& x : v) x = static_cast<float>(rng.normal());
    t.add("id-" + std::to_string(i), std::move(v));
  }
  return t;
}

void append_raw(std::string& out, const void* p, std::size_t n) { out.append(static_cast<const char*>(p), n); }

}  // namespace

TEST_CASE("byte layout matches a hand-assembled file") {
  static_assert(std::endian::native == std::endian::little);
  EmbeddingTable t(2);
  t.add("ab", {1.5f, -2.0f});

  std::string expect = "SPECEMB1";
  const std::uint32_t version = 1, dim = 2;
  const std::uint64_t count = 1;
  const std::uint16_t len = 2;
  const float v[2] = {1.5f, -2.0f};
  append_raw(expect, &version, 4);
  append_raw(expect, &dim, 4);
  append_raw(expect, &count, 8);
  append_raw(expect, &len, 2);
  expect += "ab";
  append_raw(expect, v, 8);
  CHECK(encode_binary(t) == expect);
}

TEST_CASE("empty table round-trips") {
  EmbeddingTable t(7);
  const auto back = decode_binary(encode_binary(t));
  CHECK(back.empty());
  CHECK(back.dim() == 7);
  CHECK(encode_binary(t).size() == 24);
}

TEST_CASE("32-dim tables round-trip bit for bit") {
  const auto t = random_table(100, 32, 1);
  const auto back = decode_binary(encode_binary(t));
  CHECK(back == t);
  CHECK(back.id(17) == "id-17");
  CHECK(std::memcmp(back.vector(3).data(), t.vector(3).data(), 32 * sizeof(float)) == 0);
}

TEST_CASE("jsonl round-trips and keeps order") {
  const auto t = random_table(50, 5, 2);
  const auto back = decode_jsonl(encode_jsonl(t));
  CHECK(back == t);
  CHECK(decode_jsonl("{\"id\":\"a\",\"vec\":[1,2]}\n\n{\"id\":\"b\",\"vec\":[3,4]}\n").size() == 2);
}

TEST_CASE("files are chosen by extension") {
  testing::TempDir dir("store");
  const auto t = random_table(10, 4, 3);
  save_table(dir.file("t.bin"), t);
  save_table(dir.file("t.jsonl"), t);
  CHECK(testing::slurp(dir.file("t.bin")).substr(0, 8) == "SPECEMB1");
  CHECK(testing::slurp(dir.file("t.jsonl")).front() == '{');
  CHECK(load_table(dir.file("t.bin")) == t);
  CHECK(load_table(dir.file("t.jsonl")) == t);
  CHECK(testing::error_of([&] { load_table(dir.file("missing.bin")); }) == ErrorCode::Io);
}

TEST_CASE("insertion errors") {
  EmbeddingTable t(2);
  t.add("a", {1, 2});
  CHECK(testing::error_of([&] { t.add("a", {3, 4}); }) == ErrorCode::DuplicateId);
  CHECK(testing::error_of([&] { t.add("b", {1, 2, 3}); }) == ErrorCode::DimMismatch);
  CHECK(testing::error_of([&] { t.add("c", {1, std::numeric_limits<float>::quiet_NaN()}); }) == ErrorCode::NonFinite);
  CHECK(testing::error_of([&] { t.add("d", {std::numeric_limits<float>::infinity(), 0}); }) == ErrorCode::NonFinite);
  CHECK(testing::error_of([&] { (void)t.at("zzz"); }) == ErrorCode::DataMissing);
  CHECK(t.find("zzz") == nullptr);
  CHECK(t.size() == 1);
}

TEST_CASE("malformed files") {
  const std::string good = encode_binary(random_table(3, 4, 4));
  std::string bad = good;
  bad[0] = 'X';
  CHECK(testing::error_of([&] { decode_binary(bad); }) == ErrorCode::BadMagic);
  bad = good;
  bad[8] = 2;
  CHECK(testing::error_of([&] { decode_binary(bad); }) == ErrorCode::BadVersion);
  for (std::size_t cut = 8; cut < good.size(); ++cut) {
    CAPTURE(cut);
    const auto c = testing::error_of([&] { decode_binary(std::string_view(good).substr(0, cut)); });
    CHECK(c == ErrorCode::TruncatedFile);
  }
  CHECK(testing::error_of([&] { decode_binary(good + "x"); }) == ErrorCode::TruncatedFile);
  CHECK(testing::error_of([&] { decode_binary("SPEC"); }) == ErrorCode::BadMagic);

  std::string dup;
  {
    EmbeddingTable t(1);
    t.add("a", {1});
    dup = encode_binary(t);
    dup[16] = 2;  // count
    dup += dup.substr(24);
  }
  CHECK(testing::error_of([&] { decode_binary(dup); }) == ErrorCode::DuplicateId);
  CHECK(testing::error_of([&] { decode_jsonl("{\"id\":\"a\"}"); }) == ErrorCode::DataMissing);
}

TEST_CASE("cosine examples") {
  const std::vector<float> a = {1, 0}, b = {0, 1}, c = {1, 1}, d = {-2, 0}, z = {0, 0};
  CHECK(cosine(std::span<const float>(a), std::span<const float>(a)) == doctest::Approx(1.0));
  CHECK(cosine(std::span<const float>(a), std::span<const float>(b)) == doctest::Approx(0.0));
  CHECK(cosine(std::span<const float>(a), std::span<const float>(c)) == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(cosine(std::span<const float>(a), std::span<const float>(d)) == doctest::Approx(-1.0));
  CHECK(testing::error_of([&] { cosine(std::span<const float>(a), std::span<const float>(z)); }) == ErrorCode::ZeroVector);
  const std::vector<float> three = {1, 2, 3};
  CHECK(testing::error_of([&] { cosine(std::span<const float>(a), std::span<const float>(three)); }) == ErrorCode::DimMismatch);

  Rng rng(8);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> x(16), y(16);
    for (auto& v : x) v = rng.normal();
    for (auto& v : y) v = rng.normal();
    const double cxy = cosine(std::span<const double>(x), std::span<const double>(y));
    CHECK(cxy >= -1.0);
    CHECK(cxy <= 1.0);
    CHECK(cosine(std::span<const double>(x), std::span<const double>(x)) <= 1.0);
  }
}
