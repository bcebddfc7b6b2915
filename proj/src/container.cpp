#include "s3dc/container.hpp"

#include <cmath>
#include <cstring>

#include "s3dc/error.hpp"

namespace s3dc {

namespace {

constexpr std::uint8_t kMagic[4] = {'S', '3', 'D', 'C'};
constexpr std::uint8_t kFlagHasEdges = 0x01;
constexpr std::uint8_t kFlagCoo = 0x02;

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::span<const std::uint8_t> take(std::size_t n, const char* what) {
    if (bytes_.size() - pos_ < n) fail(ErrorKind::kTruncated, std::string("S3DC truncated in ") + what);
    auto out = bytes_.subspan(pos_, n);
    pos_ += n;
    return out;
  }
  std::uint8_t u8(const char* what) { return take(1, what)[0]; }
  std::uint16_t u16(const char* what) {
    auto b = take(2, what);
    return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
  }
  std::uint32_t u32(const char* what) {
    auto b = take(4, what);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

bool operator==(const CompressedContainer& a, const CompressedContainer& b) {
  return a.mode == b.mode && a.descriptor.text == b.descriptor.text && a.edges == b.edges &&
         a.edge_threshold == b.edge_threshold && a.source_front_view == b.source_front_view &&
         a.format_version == b.format_version;
}

std::vector<std::uint8_t> pack(const CompressedContainer& c) {
  const std::string& text = c.descriptor.text;
  require(!text.empty(), ErrorKind::kFormat, "S3DC: descriptor is empty");
  require(is_descriptor_charset(text), ErrorKind::kFormat,
          "S3DC: descriptor may only contain lowercase a-z and space");
  require(text.size() <= 0xffff, ErrorKind::kFormat, "S3DC: descriptor longer than 65535 bytes");
  require(c.format_version == kFormatVersion, ErrorKind::kUnknownVersion, "S3DC: unsupported version");
  const bool structured = c.mode == CompressionMode::kStructured;
  require(structured == c.edges.has_value() && structured == c.edge_threshold.has_value(),
          ErrorKind::kFormat, "S3DC: structured mode requires edges and a threshold, semantic forbids them");

  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  out.push_back(c.format_version);
  std::uint8_t flags = 0;
  if (structured) {
    flags |= kFlagHasEdges;
    if (c.edges->encoding == EdgeEncoding::kCoo) flags |= kFlagCoo;
  }
  out.push_back(flags);
  put_u16(out, static_cast<std::uint16_t>(text.size()));
  out.insert(out.end(), text.begin(), text.end());

  if (structured) {
    const EncodedEdges& e = *c.edges;
    require(e.resolution > 0 && e.resolution <= 0xffff, ErrorKind::kFormat,
            "S3DC: edge resolution must be in 1..65535");
    require(e.threshold == static_cast<double>(*c.edge_threshold), ErrorKind::kFormat,
            "S3DC: edge threshold metadata disagrees with the encoded edges");
    require(e.payload.size() == expected_payload_size(e.encoding, static_cast<std::uint32_t>(e.resolution), e.nnz),
            ErrorKind::kFormat, "S3DC: edge payload size disagrees with its header");
    put_u16(out, static_cast<std::uint16_t>(e.resolution));
    put_u16(out, *c.edge_threshold);
    put_u32(out, e.nnz);
    out.insert(out.end(), e.payload.begin(), e.payload.end());
  }
  return out;
}

CompressedContainer unpack(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    fail(ErrorKind::kBadMagic, "S3DC: bad magic");
  }
  Reader in(bytes);
  in.take(4, "magic");
  CompressedContainer c;
  c.format_version = in.u8("header");
  if (c.format_version != kFormatVersion) {
    fail(ErrorKind::kUnknownVersion, "S3DC: unknown version " + std::to_string(c.format_version));
  }
  const std::uint8_t flags = in.u8("header");
  require((flags & ~(kFlagHasEdges | kFlagCoo)) == 0, ErrorKind::kFormat, "S3DC: unknown flag bits");
  require((flags & kFlagHasEdges) || !(flags & kFlagCoo), ErrorKind::kFormat,
          "S3DC: coo flag set without edges");
  const std::uint16_t desc_len = in.u16("header");
  auto desc = in.take(desc_len, "descriptor");
  c.descriptor.text.assign(desc.begin(), desc.end());
  c.descriptor.char_budget = desc_len;
  require(desc_len > 0, ErrorKind::kFormat, "S3DC: descriptor is empty");
  require(is_descriptor_charset(c.descriptor.text), ErrorKind::kFormat,
          "S3DC: descriptor contains characters outside a-z and space");

  if (flags & kFlagHasEdges) {
    c.mode = CompressionMode::kStructured;
    EncodedEdges e;
    e.encoding = (flags & kFlagCoo) ? EdgeEncoding::kCoo : EdgeEncoding::kDenseBitmap;
    e.resolution = in.u16("edge header");
    const std::uint16_t threshold = in.u16("edge header");
    e.nnz = in.u32("edge header");
    e.threshold = threshold;
    require(e.resolution > 0, ErrorKind::kFormat, "S3DC: zero edge resolution");
    const auto d = static_cast<std::uint32_t>(e.resolution);
    require(e.nnz <= static_cast<std::uint64_t>(d) * d, ErrorKind::kFormat, "S3DC: nnz exceeds grid size");
    auto payload = in.take(expected_payload_size(e.encoding, d, e.nnz), "edge payload");
    e.payload.assign(payload.begin(), payload.end());
    decode_edges(e);  // full payload validation
    c.edges = std::move(e);
    c.edge_threshold = threshold;
  }
  require(in.remaining() == 0, ErrorKind::kFormat, "S3DC: trailing bytes after container");
  return c;
}

ContainerStats compression_stats(const SizeBreakdown& original, std::span<const std::uint8_t> packed) {
  require(!packed.empty(), ErrorKind::kDomain, "compression_stats: empty container");
  ContainerStats s;
  s.original_bytes = original.total_bytes;
  s.compressed_bytes = packed.size();
  s.ratio = static_cast<double>(s.original_bytes) / static_cast<double>(s.compressed_bytes);
  return s;
}

}  // namespace s3dc
