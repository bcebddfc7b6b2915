#include <gtest/gtest.h>

#include <random>

#include "s3dc/container.hpp"
#include "s3dc/error.hpp"

namespace s3dc {
namespace {

CompressedContainer semantic(std::string text) {
  CompressedContainer c;
  c.descriptor = {std::move(text), 0};
  c.descriptor.char_budget = c.descriptor.text.size();
  return c;
}

ErrorKind unpack_error(std::span<const std::uint8_t> bytes) {
  try {
    unpack(bytes);
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "unpack accepted malformed bytes";
  return ErrorKind::kUsage;
}

TEST(Pack, SemanticFiftyCharsIsFiftyEightBytes) {
  const std::string text = "a red ceramic cup with a curved handle and a white";
  ASSERT_EQ(text.size(), 50u);
  auto bytes = pack(semantic(text));
  ASSERT_EQ(bytes.size(), 58u);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "S3DC");
  EXPECT_EQ(bytes[4], 1);     // version
  EXPECT_EQ(bytes[5], 0);     // flags
  EXPECT_EQ(bytes[6], 50);    // desc_len, little-endian
  EXPECT_EQ(bytes[7], 0);
  EXPECT_EQ(std::string(bytes.begin() + 8, bytes.end()), text);
}

TEST(Pack, StructuredEmptyCoo) {
  auto c = semantic("cup");
  c.mode = CompressionMode::kStructured;
  c.edges = encode_edges(EdgeMap(256, 300));
  c.edge_threshold = 300;
  auto bytes = pack(c);
  EXPECT_EQ(bytes.size(), kHeaderBytes + 3 + kEdgeHeaderBytes);
  EXPECT_EQ(bytes[5], 0x03);  // has_edges | coo
  // resolution 256, threshold 300, nnz 0
  EXPECT_EQ(std::vector<std::uint8_t>(bytes.begin() + 11, bytes.end()),
            (std::vector<std::uint8_t>{0x00, 0x01, 0x2c, 0x01, 0, 0, 0, 0}));
  EXPECT_EQ(unpack(bytes), c);
}

TEST(Pack, RejectsBadDescriptors) {
  for (const char* bad : {"Red cup", "cup!", "", "caf\xc3\xa9"}) {
    try {
      pack(semantic(bad));
      ADD_FAILURE() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::kFormat) << bad;
    }
  }
}

TEST(Pack, RejectsModeEdgeMismatch) {
  auto c = semantic("cup");
  c.edges = encode_edges(EdgeMap(256, 1));
  EXPECT_THROW(pack(c), Error);
  c.mode = CompressionMode::kStructured;
  EXPECT_THROW(pack(c), Error);  // threshold missing
  c.edge_threshold = 2;
  EXPECT_THROW(pack(c), Error);  // threshold disagrees with edges
}

CompressedContainer random_container(std::mt19937& rng) {
  std::uniform_int_distribution<int> len(1, 300), letter(0, 26);
  std::string text;
  const int n = len(rng);
  for (int i = 0; i < n; ++i) {
    int k = letter(rng);
    text.push_back(k == 26 ? ' ' : static_cast<char>('a' + k));
  }
  auto c = semantic(text);
  if (rng() % 2) {
    const int d = std::array<int, 4>{64, 100, 256, 512}[rng() % 4];
    const auto t = static_cast<std::uint16_t>(rng() % 65536);
    EdgeMap m(d, t);
    const double density = std::uniform_real_distribution<double>(0.0, 0.5)(rng);
    std::uniform_real_distribution<double> u(0, 1);
    for (auto& g : m.grid) g = u(rng) < density;
    c.mode = CompressionMode::kStructured;
    c.edges = encode_edges(m);
    c.edge_threshold = t;
  }
  return c;
}

TEST(Unpack, RoundTripProperty) {
  std::mt19937 rng(31337);
  for (int i = 0; i < 200; ++i) {
    auto c = random_container(rng);
    auto bytes = pack(c);
    auto back = unpack(bytes);
    EXPECT_EQ(back, c);
    EXPECT_EQ(pack(back), bytes);
    if (c.mode == CompressionMode::kSemantic) EXPECT_EQ(bytes.size(), 8 + c.descriptor.text.size());
  }
}

TEST(Unpack, DistinctCorruptionErrors) {
  auto bytes = pack(semantic("a small wooden chair"));
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_EQ(unpack_error(bad_magic), ErrorKind::kBadMagic);
  auto bad_version = bytes;
  bad_version[4] = 255;
  EXPECT_EQ(unpack_error(bad_version), ErrorKind::kUnknownVersion);
  auto truncated = bytes;
  truncated.resize(bytes.size() - 3);
  EXPECT_EQ(unpack_error(truncated), ErrorKind::kTruncated);
  EXPECT_EQ(unpack_error(std::span(bytes.data(), 2)), ErrorKind::kBadMagic);
  EXPECT_EQ(unpack_error(std::span(bytes.data(), 6)), ErrorKind::kTruncated);
}

TEST(Unpack, OtherMalformedInputs) {
  auto bytes = pack(semantic("chair"));
  auto trailing = bytes;
  trailing.push_back(0);
  EXPECT_EQ(unpack_error(trailing), ErrorKind::kFormat);
  auto flags = bytes;
  flags[5] = 0x80;
  EXPECT_EQ(unpack_error(flags), ErrorKind::kFormat);
  auto upper = bytes;
  upper[8] = 'C';
  EXPECT_EQ(unpack_error(upper), ErrorKind::kFormat);

  auto c = semantic("chair");
  c.mode = CompressionMode::kStructured;
  EdgeMap m(256, 100);
  m.set(1, 2);
  c.edges = encode_edges(m);
  c.edge_threshold = 100;
  auto structured = pack(c);
  auto truncated_payload = structured;
  truncated_payload.pop_back();
  EXPECT_EQ(unpack_error(truncated_payload), ErrorKind::kTruncated);
  auto resolution = structured;
  resolution[13] = 0;  // resolution 256 -> 0
  resolution[14] = 0;
  EXPECT_EQ(unpack_error(resolution), ErrorKind::kFormat);
  auto coordinate = structured;
  coordinate[13] = 2;  // resolution 256 -> 2: column 2 is out of range
  coordinate[14] = 0;
  EXPECT_EQ(unpack_error(coordinate), ErrorKind::kFormat);
}

TEST(CompressionStats, Ratios) {
  std::vector<std::uint8_t> container(58, 0);
  auto s = compression_stats(SizeBreakdown{900000, 100000, 1000000}, container);
  EXPECT_EQ(s.compressed_bytes, 58u);
  EXPECT_NEAR(s.ratio, 17241.379310, 1e-5);
  EXPECT_GE(s.ratio, 1.7e4);

  std::vector<std::uint8_t> same(1000, 0);
  EXPECT_DOUBLE_EQ(compression_stats(SizeBreakdown{1000, 0, 1000}, same).ratio, 1.0);

  // 40 MB object against a 74-byte container lands near 5.4e5.
  std::vector<std::uint8_t> cup(74, 0);
  auto cup_stats = compression_stats(SizeBreakdown{0, 0, 40000000}, cup);
  EXPECT_GT(cup_stats.ratio, 5.0e5);
  EXPECT_LT(cup_stats.ratio, 6.0e5);

  double previous = 1e300;
  for (std::size_t n = 1; n < 100; ++n) {
    std::vector<std::uint8_t> bytes(n);
    double r = compression_stats(SizeBreakdown{0, 0, 12345}, bytes).ratio;
    EXPECT_LT(r, previous);
    previous = r;
  }
  EXPECT_THROW(compression_stats(SizeBreakdown{}, std::span<const std::uint8_t>{}), Error);
}

}  // namespace
}  // namespace s3dc
