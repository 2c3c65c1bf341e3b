#pragma once

// Duration-informed token bitstream (SYLB).
//
// Header, little-endian:
//   "SYLB" | u32 version=1 | u32 vocab V | f32 frame_rate | u32 record_count | u32 total_frames
// followed by the packed payload, most significant bit first, zero-padded to
// a byte boundary. Each record is
//   token    ceil(log2(V+1)) bits, ids 0..V-1, V is the silence token
//   duration 4 bits, stored as d-1 for d in 1..16
//   gap      3 bits, silence frames following the record (0..7)
//
// Speech runs longer than 16 frames split into consecutive records of the
// same token. A silence run of at most 7 frames after a speech record rides
// in its gap field; longer runs, and any leading silence, become silence
// token records of at most 16 frames each.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sylber/error.hpp"
#include "sylber/io.hpp"
#include "sylber/types.hpp"

namespace sylber::codec {

inline constexpr std::int32_t kSilence = -1;
inline constexpr unsigned kDurationBits = 4;
inline constexpr unsigned kGapBits = 3;
inline constexpr std::uint32_t kMaxDuration = 1u << kDurationBits;  // 16
inline constexpr std::uint32_t kMaxGap = (1u << kGapBits) - 1;      // 7

/// Token id per frame, kSilence for non-speech.
struct FrameTokenSequence {
  std::vector<std::int32_t> symbols;
  float frame_rate_hz = 50.0f;
  std::uint32_t vocab_size = 1;

  void validate() const {
    if (vocab_size == 0) fail(ErrorCode::InvalidArgument, "vocabulary size must be positive");
    if (!(frame_rate_hz > 0.0f)) fail(ErrorCode::InvalidArgument, "frame rate must be positive");
    for (std::size_t i = 0; i < symbols.size(); ++i) {
      if (symbols[i] < kSilence || (symbols[i] >= 0 && static_cast<std::uint32_t>(symbols[i]) >= vocab_size)) {
        fail(ErrorCode::TokenOutOfRange, "frame " + std::to_string(i) + " has symbol " + std::to_string(symbols[i]));
      }
    }
  }

  friend bool operator==(const FrameTokenSequence&, const FrameTokenSequence&) = default;
};

struct Record {
  std::uint32_t token = 0;  // vocab_size means silence
  std::uint32_t duration = 1;
  std::uint32_t gap = 0;

  friend bool operator==(const Record&, const Record&) = default;
};

struct TokenBitstream {
  std::uint32_t vocab_size = 1;
  float frame_rate_hz = 50.0f;
  std::uint32_t record_count = 0;
  std::uint32_t total_frames = 0;
  std::vector<std::uint8_t> payload;

  friend bool operator==(const TokenBitstream&, const TokenBitstream&) = default;
};

/// Physical width of the token field: ceil(log2(V + 1)).
constexpr unsigned token_field_bits(std::uint32_t vocab_size) noexcept {
  return static_cast<unsigned>(std::bit_width(vocab_size));
}

constexpr std::size_t record_bits(std::uint32_t vocab_size) noexcept {
  return token_field_bits(vocab_size) + kDurationBits + kGapBits;
}

namespace detail {

class BitWriter {
 public:
  void put(std::uint32_t value, unsigned width) {
    for (unsigned b = width; b-- > 0;) {
      if (bit_count_ % 8 == 0) bytes_.push_back(0);
      if ((value >> b) & 1u) bytes_.back() |= static_cast<std::uint8_t>(0x80u >> (bit_count_ % 8));
      ++bit_count_;
    }
  }
  std::size_t bit_count() const noexcept { return bit_count_; }
  std::vector<std::uint8_t> take() && { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
  std::size_t bit_count_ = 0;
};

class BitReader {
 public:
  explicit BitReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint32_t get(unsigned width) {
    if (pos_ + width > bytes_.size() * 8) fail(ErrorCode::TruncatedData, "bit payload ends mid-record");
    std::uint32_t v = 0;
    for (unsigned b = 0; b < width; ++b, ++pos_) {
      v = (v << 1) | ((bytes_[pos_ / 8] >> (7 - pos_ % 8)) & 1u);
    }
    return v;
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

inline void emit_silence(std::vector<Record>& out, std::uint32_t silence_token, std::size_t frames) {
  while (frames > 0) {
    const auto d = static_cast<std::uint32_t>(std::min<std::size_t>(frames, kMaxDuration));
    out.push_back({silence_token, d, 0});
    frames -= d;
  }
}

}  // namespace detail

/// Run-length records for a frame sequence, before bit packing.
inline std::vector<Record> to_records(const FrameTokenSequence& seq) {
  seq.validate();
  const std::uint32_t silence = seq.vocab_size;
  const auto& s = seq.symbols;
  std::vector<Record> out;
  std::size_t i = 0;
  while (i < s.size()) {
    std::size_t j = i;
    while (j < s.size() && s[j] == s[i]) ++j;
    const std::size_t run = j - i;
    if (s[i] == kSilence) {
      // Reached only for leading silence or silence too long for a gap field.
      detail::emit_silence(out, silence, run);
    } else {
      std::size_t left = run;
      while (left > 0) {
        const auto d = static_cast<std::uint32_t>(std::min<std::size_t>(left, kMaxDuration));
        out.push_back({static_cast<std::uint32_t>(s[i]), d, 0});
        left -= d;
      }
      if (j < s.size() && s[j] == kSilence) {
        std::size_t k = j;
        while (k < s.size() && s[k] == kSilence) ++k;
        const std::size_t gap = k - j;
        if (gap <= kMaxGap) {
          out.back().gap = static_cast<std::uint32_t>(gap);
        } else {
          detail::emit_silence(out, silence, gap);
        }
        j = k;
      }
    }
    i = j;
  }
  return out;
}

inline FrameTokenSequence from_records(std::span<const Record> records, std::uint32_t vocab_size, float frame_rate_hz) {
  FrameTokenSequence out{{}, frame_rate_hz, vocab_size};
  for (const auto& r : records) {
    if (r.token > vocab_size) {
      fail(ErrorCode::TokenOutOfRange, "record token " + std::to_string(r.token) + " exceeds vocabulary " +
                                           std::to_string(vocab_size));
    }
    const std::int32_t sym = r.token == vocab_size ? kSilence : static_cast<std::int32_t>(r.token);
    out.symbols.insert(out.symbols.end(), r.duration, sym);
    out.symbols.insert(out.symbols.end(), r.gap, kSilence);
  }
  return out;
}

inline TokenBitstream encode(const FrameTokenSequence& seq) {
  const auto records = to_records(seq);
  const unsigned width = token_field_bits(seq.vocab_size);
  detail::BitWriter w;
  for (const auto& r : records) {
    w.put(r.token, width);
    w.put(r.duration - 1, kDurationBits);
    w.put(r.gap, kGapBits);
  }
  TokenBitstream bs;
  bs.vocab_size = seq.vocab_size;
  bs.frame_rate_hz = seq.frame_rate_hz;
  bs.record_count = io::detail::checked_u32(records.size(), "record count");
  bs.total_frames = io::detail::checked_u32(seq.symbols.size(), "frame count");
  bs.payload = std::move(w).take();
  return bs;
}

inline std::vector<Record> decode_records(const TokenBitstream& bs) {
  if (bs.vocab_size == 0) fail(ErrorCode::MalformedHeader, "vocabulary size must be positive");
  const unsigned width = token_field_bits(bs.vocab_size);
  const std::size_t needed_bits = static_cast<std::size_t>(bs.record_count) * record_bits(bs.vocab_size);
  if ((needed_bits + 7) / 8 != bs.payload.size()) {
    fail(ErrorCode::FrameCountMismatch,
         "payload of " + std::to_string(bs.payload.size()) + " bytes does not hold " +
             std::to_string(bs.record_count) + " records");
  }
  detail::BitReader r(bs.payload);
  std::vector<Record> out(bs.record_count);
  for (auto& rec : out) {
    rec.token = r.get(width);
    rec.duration = r.get(kDurationBits) + 1;
    rec.gap = r.get(kGapBits);
    if (rec.token > bs.vocab_size) {
      fail(ErrorCode::TokenOutOfRange, "record token " + std::to_string(rec.token) + " exceeds vocabulary " +
                                           std::to_string(bs.vocab_size));
    }
  }
  return out;
}

inline FrameTokenSequence decode(const TokenBitstream& bs) {
  const auto records = decode_records(bs);
  auto out = from_records(records, bs.vocab_size, bs.frame_rate_hz);
  if (out.symbols.size() != bs.total_frames) {
    fail(ErrorCode::FrameCountMismatch, "stream decodes to " + std::to_string(out.symbols.size()) +
                                            " frames, header states " + std::to_string(bs.total_frames));
  }
  return out;
}

// ---- Serialization --------------------------------------------------------

inline std::string serialize(const TokenBitstream& bs) {
  std::string out;
  out.append("SYLB");
  io::detail::put_u32(out, io::kFormatVersion);
  io::detail::put_u32(out, bs.vocab_size);
  io::detail::put_f32(out, bs.frame_rate_hz);
  io::detail::put_u32(out, bs.record_count);
  io::detail::put_u32(out, bs.total_frames);
  out.append(reinterpret_cast<const char*>(bs.payload.data()), bs.payload.size());
  return out;
}

inline TokenBitstream deserialize(std::string_view bytes, const std::string& context = "SYLB") {
  io::detail::ByteReader r(bytes, context);
  if (r.take(4, ErrorCode::BadMagic) != "SYLB") fail(ErrorCode::BadMagic, context + ": not a SYLB stream");
  if (r.u32(ErrorCode::MalformedHeader) != io::kFormatVersion) {
    fail(ErrorCode::MalformedHeader, context + ": unsupported version");
  }
  TokenBitstream bs;
  bs.vocab_size = r.u32(ErrorCode::MalformedHeader);
  bs.frame_rate_hz = r.f32(ErrorCode::MalformedHeader);
  bs.record_count = r.u32(ErrorCode::MalformedHeader);
  bs.total_frames = r.u32(ErrorCode::MalformedHeader);
  if (bs.vocab_size == 0) fail(ErrorCode::MalformedHeader, context + ": vocabulary size must be positive");
  if (!(bs.frame_rate_hz > 0.0f) || !std::isfinite(bs.frame_rate_hz)) {
    fail(ErrorCode::MalformedHeader, context + ": frame rate must be positive");
  }
  auto rest = r.take(r.remaining(), ErrorCode::TruncatedData);
  bs.payload.assign(rest.begin(), rest.end());
  return bs;
}

inline TokenBitstream read_stream(const std::filesystem::path& path) {
  return deserialize(io::detail::read_file(path), path.string());
}

inline void write_stream(const TokenBitstream& bs, const std::filesystem::path& path) {
  io::detail::write_file(path, serialize(bs));
}

// ---- Segmentation bridge ---------------------------------------------------

/// Expands a tokenized segmentation to frame resolution.
inline FrameTokenSequence to_frame_tokens(const Segmentation& seg, std::uint32_t vocab_size) {
  FrameTokenSequence out{std::vector<std::int32_t>(seg.n_frames(), kSilence), seg.frame_rate_hz(), vocab_size};
  for (std::size_t j = 0; j < seg.size(); ++j) {
    const auto& s = seg[j];
    if (!s.token_id) fail(ErrorCode::MissingToken, seg.utterance_id() + ": segment " + std::to_string(j) + " has no token");
    if (*s.token_id >= vocab_size) {
      fail(ErrorCode::TokenOutOfRange, seg.utterance_id() + ": token " + std::to_string(*s.token_id) +
                                           " exceeds vocabulary " + std::to_string(vocab_size));
    }
    std::fill(out.symbols.begin() + static_cast<std::ptrdiff_t>(s.start_frame),
              out.symbols.begin() + static_cast<std::ptrdiff_t>(s.end_frame), static_cast<std::int32_t>(*s.token_id));
  }
  return out;
}

/// One segment per maximal run of equal speech tokens.
inline Segmentation to_segmentation(const FrameTokenSequence& seq, std::string utterance_id = {}) {
  std::vector<Segment> segments;
  const auto& s = seq.symbols;
  for (std::size_t i = 0; i < s.size();) {
    std::size_t j = i;
    while (j < s.size() && s[j] == s[i]) ++j;
    if (s[i] != kSilence) segments.push_back({i, j, std::nullopt, static_cast<std::uint32_t>(s[i])});
    i = j;
  }
  return Segmentation(std::move(segments), s.size(), seq.frame_rate_hz, std::move(utterance_id));
}

// ---- Coding efficiency ------------------------------------------------------

inline double tokens_per_second(const Segmentation& seg) {
  if (seg.n_frames() == 0) return 0.0;
  return static_cast<double>(seg.size()) / seg.duration_sec();
}

/// Records per second of audio. Silence records count only when requested.
inline double tokens_per_second(const TokenBitstream& bs, bool include_silence_tokens) {
  if (bs.total_frames == 0) return 0.0;
  std::size_t count = 0;
  for (const auto& r : decode_records(bs)) {
    if (r.token != bs.vocab_size || include_silence_tokens) ++count;
  }
  return static_cast<double>(count) * static_cast<double>(bs.frame_rate_hz) / static_cast<double>(bs.total_frames);
}

/// Information-theoretic bitrate: log2(V) bits per token.
inline double bitrate_metric(double vocab_size, double tokens_per_sec) {
  if (!(vocab_size >= 1.0)) fail(ErrorCode::InvalidArgument, "vocabulary size must be at least 1");
  return std::log2(vocab_size) * tokens_per_sec;
}

/// Bitrate with the 4-bit duration and 3-bit gap fields added to every token.
inline double duration_informed_bitrate(double vocab_size, double tokens_per_sec) {
  if (!(vocab_size >= 1.0)) fail(ErrorCode::InvalidArgument, "vocabulary size must be at least 1");
  return (std::log2(vocab_size) + kDurationBits + kGapBits) * tokens_per_sec;
}

/// Correctly transmitted words per bit: (1 - WER/100) * words / bits.
inline double coding_rate(double wer_percent, double total_words, double total_bits) {
  if (!(wer_percent >= 0.0 && wer_percent <= 100.0)) fail(ErrorCode::InvalidArgument, "WER must lie in [0, 100]");
  if (!(total_bits > 0.0)) fail(ErrorCode::InvalidArgument, "total bits must be positive");
  if (!(total_words >= 0.0)) fail(ErrorCode::InvalidArgument, "total words must be non-negative");
  return (1.0 - wer_percent / 100.0) * total_words / total_bits;
}

}  // namespace sylber::codec
