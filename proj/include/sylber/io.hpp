#pragma once

// Interchange formats.
//
//   SYLF frames:   "SYLF" | u32 version=1 | u32 dim | u32 n_frames | f32 frame_rate | f32 payload[n_frames*dim]
//   SYLC codebook: "SYLC" | u32 version=1 | u32 k | u32 dim | f32 payload[k*dim]
//   Alignment:     text, "start_sec<TAB>end_sec<TAB>label" per line, '#' comments
//   Segmentation:  text, "utterance_id<TAB>n_frames<TAB>frame_rate<TAB>start:end[:token];..." per utterance
//
// Binary formats are little-endian regardless of host byte order.

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "sylber/error.hpp"
#include "sylber/types.hpp"

namespace sylber::io {

inline constexpr std::uint32_t kFormatVersion = 1;

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int shift = 0; shift < 32; shift += 8) out.push_back(static_cast<char>((v >> shift) & 0xFFu));
}

inline void put_f32(std::string& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }

class ByteReader {
 public:
  ByteReader(std::string_view bytes, std::string context) : bytes_(bytes), context_(std::move(context)) {}

  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

  std::uint32_t u32(ErrorCode short_read) {
    if (remaining() < 4) fail(short_read, context_ + ": unexpected end of data at byte " + std::to_string(pos_));
    std::uint32_t v = 0;
    for (int b = 0; b < 4; ++b) {
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + b])) << (8 * b);
    }
    pos_ += 4;
    return v;
  }

  float f32(ErrorCode short_read) { return std::bit_cast<float>(u32(short_read)); }

  std::string_view take(std::size_t n, ErrorCode short_read) {
    if (remaining() < n) fail(short_read, context_ + ": unexpected end of data at byte " + std::to_string(pos_));
    auto out = bytes_.substr(pos_, n);
    pos_ += n;
    return out;
  }

 private:
  std::string_view bytes_;
  std::string context_;
  std::size_t pos_ = 0;
};

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::IoError, "write failed for " + path.string());
}

inline void check_magic(ByteReader& r, std::string_view magic, const std::string& context) {
  auto got = r.take(4, ErrorCode::MalformedHeader);
  if (got != magic) fail(ErrorCode::MalformedHeader, context + ": bad magic, expected " + std::string(magic));
  const auto version = r.u32(ErrorCode::MalformedHeader);
  if (version != kFormatVersion) {
    fail(ErrorCode::MalformedHeader, context + ": unsupported version " + std::to_string(version));
  }
}

inline std::vector<float> read_payload(ByteReader& r, std::size_t count, const std::string& context) {
  const std::size_t bytes = count * 4;
  if (r.remaining() < bytes) {
    fail(ErrorCode::TruncatedData, context + ": payload has " + std::to_string(r.remaining()) + " bytes, expected " +
                                       std::to_string(bytes));
  }
  std::vector<float> values(count);
  for (std::size_t i = 0; i < count; ++i) {
    values[i] = r.f32(ErrorCode::TruncatedData);
    if (!std::isfinite(values[i])) {
      fail(ErrorCode::NonFiniteValue, context + ": payload value " + std::to_string(i) + " is not finite");
    }
  }
  if (r.remaining() != 0) {
    fail(ErrorCode::MalformedHeader, context + ": " + std::to_string(r.remaining()) + " trailing bytes after payload");
  }
  return values;
}

inline std::uint32_t checked_u32(std::size_t v, const char* what) {
  if (v > 0xFFFFFFFFu) fail(ErrorCode::InvalidArgument, std::string(what) + " does not fit in 32 bits");
  return static_cast<std::uint32_t>(v);
}

template <typename T>
std::string format_number(T v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

template <typename T>
T parse_number(std::string_view text, const std::string& context) {
  T v{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last) {
    fail(ErrorCode::ParseError, context + ": cannot parse number '" + std::string(text) + "'");
  }
  return v;
}

inline std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    if (pos == std::string_view::npos) {
      parts.push_back(text.substr(start));
      return parts;
    }
    parts.push_back(text.substr(start, pos - start));
    start = pos + 1;
  }
}

inline std::string_view strip_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

}  // namespace detail

// ---- SYLF ----------------------------------------------------------------

inline std::string encode_frames(const FrameSequence& seq) {
  std::string out;
  out.reserve(20 + seq.frames().size() * 4);
  out.append("SYLF");
  detail::put_u32(out, kFormatVersion);
  detail::put_u32(out, detail::checked_u32(seq.dim(), "dim"));
  detail::put_u32(out, detail::checked_u32(seq.n_frames(), "n_frames"));
  detail::put_f32(out, seq.frame_rate_hz());
  for (float v : seq.frames().flat()) detail::put_f32(out, v);
  return out;
}

inline FrameSequence decode_frames(std::string_view bytes, std::string utterance_id = {},
                                   const std::string& context = "SYLF") {
  detail::ByteReader r(bytes, context);
  detail::check_magic(r, "SYLF", context);
  const std::uint32_t dim = r.u32(ErrorCode::MalformedHeader);
  const std::uint32_t n_frames = r.u32(ErrorCode::MalformedHeader);
  const float rate = r.f32(ErrorCode::MalformedHeader);
  if (dim == 0) fail(ErrorCode::MalformedHeader, context + ": dim must be positive");
  if (!(rate > 0.0f) || !std::isfinite(rate)) fail(ErrorCode::MalformedHeader, context + ": frame rate must be positive");
  auto values = detail::read_payload(r, static_cast<std::size_t>(dim) * n_frames, context);
  return FrameSequence(Matrix<float>(n_frames, dim, std::move(values)), rate, std::move(utterance_id));
}

/// The utterance id of the result is the file stem.
inline FrameSequence read_frames(const std::filesystem::path& path) {
  return decode_frames(detail::read_file(path), path.stem().string(), path.string());
}

inline void write_frames(const FrameSequence& seq, const std::filesystem::path& path) {
  detail::write_file(path, encode_frames(seq));
}

// ---- SYLC ----------------------------------------------------------------

inline std::string encode_codebook(const Codebook& book) {
  std::string out;
  out.append("SYLC");
  detail::put_u32(out, kFormatVersion);
  detail::put_u32(out, detail::checked_u32(book.k(), "k"));
  detail::put_u32(out, detail::checked_u32(book.dim(), "dim"));
  for (float v : book.centroids().flat()) detail::put_f32(out, v);
  return out;
}

inline Codebook decode_codebook(std::string_view bytes, const std::string& context = "SYLC") {
  detail::ByteReader r(bytes, context);
  detail::check_magic(r, "SYLC", context);
  const std::uint32_t k = r.u32(ErrorCode::MalformedHeader);
  const std::uint32_t dim = r.u32(ErrorCode::MalformedHeader);
  if (k == 0 || dim == 0) fail(ErrorCode::MalformedHeader, context + ": k and dim must be positive");
  auto values = detail::read_payload(r, static_cast<std::size_t>(k) * dim, context);
  return Codebook(Matrix<float>(k, dim, std::move(values)));
}

inline Codebook read_codebook(const std::filesystem::path& path) {
  return decode_codebook(detail::read_file(path), path.string());
}

inline void write_codebook(const Codebook& book, const std::filesystem::path& path) {
  detail::write_file(path, encode_codebook(book));
}

// ---- Alignment -----------------------------------------------------------

/// Fields are tab separated; lines without a tab fall back to whitespace
/// separation (label then cannot contain spaces).
inline Alignment parse_alignment(std::string_view text, const std::string& context = "alignment") {
  std::vector<AlignmentEntry> entries;
  std::size_t line_no = 0;
  for (auto raw : detail::split(text, '\n')) {
    ++line_no;
    auto line = detail::strip_cr(raw);
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string_view::npos || line[first] == '#') continue;
    const std::string where = context + ":" + std::to_string(line_no);
    std::vector<std::string_view> fields;
    if (line.find('\t') != std::string_view::npos) {
      fields = detail::split(line, '\t');
    } else {
      std::istringstream ss{std::string(line)};
      std::string tok;
      std::vector<std::string> owned;
      while (ss >> tok) owned.push_back(tok);
      if (owned.size() != 3) fail(ErrorCode::ParseError, where + ": expected 3 fields");
      entries.push_back({detail::parse_number<double>(owned[0], where), detail::parse_number<double>(owned[1], where),
                         owned[2]});
      continue;
    }
    if (fields.size() != 3) fail(ErrorCode::ParseError, where + ": expected 3 tab-separated fields");
    entries.push_back({detail::parse_number<double>(fields[0], where), detail::parse_number<double>(fields[1], where),
                       std::string(fields[2])});
  }
  return Alignment(std::move(entries));
}

inline std::string format_alignment(const Alignment& alignment) {
  std::string out;
  for (const auto& e : alignment.entries()) {
    out += detail::format_number(e.start_sec);
    out += '\t';
    out += detail::format_number(e.end_sec);
    out += '\t';
    out += e.label;
    out += '\n';
  }
  return out;
}

inline Alignment read_alignment(const std::filesystem::path& path) {
  return parse_alignment(detail::read_file(path), path.string());
}

inline void write_alignment(const Alignment& alignment, const std::filesystem::path& path) {
  detail::write_file(path, format_alignment(alignment));
}

// ---- Segmentation --------------------------------------------------------

inline std::string format_segmentation_line(const Segmentation& seg) {
  if (seg.utterance_id().find_first_of("\t\n") != std::string::npos) {
    fail(ErrorCode::InvalidArgument, "utterance id contains a tab or newline");
  }
  std::string out = seg.utterance_id();
  out += '\t';
  out += std::to_string(seg.n_frames());
  out += '\t';
  out += detail::format_number(seg.frame_rate_hz());
  out += '\t';
  for (std::size_t j = 0; j < seg.size(); ++j) {
    if (j > 0) out += ';';
    out += std::to_string(seg[j].start_frame);
    out += ':';
    out += std::to_string(seg[j].end_frame);
    if (seg[j].token_id) {
      out += ':';
      out += std::to_string(*seg[j].token_id);
    }
  }
  return out;
}

inline Segmentation parse_segmentation_line(std::string_view line, const std::string& context = "segmentation") {
  line = detail::strip_cr(line);
  const auto fields = detail::split(line, '\t');
  if (fields.size() != 4) fail(ErrorCode::ParseError, context + ": expected 4 tab-separated fields");
  const auto n_frames = detail::parse_number<std::size_t>(fields[1], context);
  const auto rate = detail::parse_number<float>(fields[2], context);
  std::vector<Segment> segments;
  if (!fields[3].empty()) {
    for (auto triple : detail::split(fields[3], ';')) {
      const auto parts = detail::split(triple, ':');
      if (parts.size() != 2 && parts.size() != 3) {
        fail(ErrorCode::ParseError, context + ": malformed span '" + std::string(triple) + "'");
      }
      Segment s;
      s.start_frame = detail::parse_number<std::size_t>(parts[0], context);
      s.end_frame = detail::parse_number<std::size_t>(parts[1], context);
      if (parts.size() == 3) s.token_id = detail::parse_number<std::uint32_t>(parts[2], context);
      segments.push_back(std::move(s));
    }
  }
  return Segmentation(std::move(segments), n_frames, rate, std::string(fields[0]));
}

inline std::string format_segmentations(std::span<const Segmentation> segs) {
  std::string out;
  for (const auto& s : segs) {
    out += format_segmentation_line(s);
    out += '\n';
  }
  return out;
}

inline std::vector<Segmentation> parse_segmentations(std::string_view text, const std::string& context = "segmentation") {
  std::vector<Segmentation> out;
  std::size_t line_no = 0;
  for (auto line : detail::split(text, '\n')) {
    ++line_no;
    if (detail::strip_cr(line).empty()) continue;
    out.push_back(parse_segmentation_line(line, context + ":" + std::to_string(line_no)));
  }
  return out;
}

inline std::vector<Segmentation> read_segmentations(const std::filesystem::path& path) {
  return parse_segmentations(detail::read_file(path), path.string());
}

/// Reads a file that must hold exactly one utterance.
inline Segmentation read_segmentation(const std::filesystem::path& path) {
  auto all = read_segmentations(path);
  if (all.size() != 1) {
    fail(ErrorCode::ParseError, path.string() + ": expected one utterance, found " + std::to_string(all.size()));
  }
  return std::move(all.front());
}

inline void write_segmentations(std::span<const Segmentation> segs, const std::filesystem::path& path) {
  detail::write_file(path, format_segmentations(segs));
}

inline void write_segmentation(const Segmentation& seg, const std::filesystem::path& path) {
  write_segmentations(std::span<const Segmentation>(&seg, 1), path);
}

// ---- Segment embeddings companion file -----------------------------------

/// Stacks every segment embedding, in file order, into one SYLF matrix.
/// empty_dim is the width written when there are no segments at all.
inline FrameSequence stack_segment_embeddings(std::span<const Segmentation> segs, std::size_t empty_dim = 1,
                                              float frame_rate_hz = 50.0f) {
  Matrix<float> rows;
  for (const auto& seg : segs) {
    for (std::size_t j = 0; j < seg.size(); ++j) {
      if (!seg[j].embedding) {
        fail(ErrorCode::MissingEmbedding, seg.utterance_id() + ": segment " + std::to_string(j) + " has no embedding");
      }
      rows.append_row(*seg[j].embedding);
    }
  }
  if (rows.cols() == 0) rows = Matrix<float>(0, empty_dim);
  return FrameSequence(std::move(rows), frame_rate_hz, "segments");
}

/// Inverse of stack_segment_embeddings: the i-th row goes to the i-th segment.
inline std::vector<Segmentation> attach_segment_embeddings(std::span<const Segmentation> segs,
                                                           const FrameSequence& stacked) {
  std::size_t total = 0;
  for (const auto& s : segs) total += s.size();
  if (total != stacked.n_frames()) {
    fail(ErrorCode::LengthMismatch, "embedding file has " + std::to_string(stacked.n_frames()) + " rows but " +
                                        std::to_string(total) + " segments are listed");
  }
  std::vector<Segmentation> out;
  out.reserve(segs.size());
  std::size_t row = 0;
  for (const auto& s : segs) {
    std::vector<Segment> segments = s.segments();
    for (auto& seg : segments) {
      auto r = stacked.frame(row++);
      seg.embedding = std::vector<float>(r.begin(), r.end());
    }
    out.emplace_back(std::move(segments), s.n_frames(), s.frame_rate_hz(), s.utterance_id());
  }
  return out;
}

}  // namespace sylber::io
