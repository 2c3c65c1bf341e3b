// sylber: batch command-line front end over SYLF / SYLC / SYLB corpora.
//
// Reports are emitted as records. With --format kv each record is one line
// of space-separated key=value pairs; with --format jsonl each record is one
// JSON object per line. Both formats carry the same keys in the same order.
//
// Exit status: 0 success, 1 usage or configuration error, 2 when some input
// files failed (the rest are still processed; failures go to stderr).

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "sylber/sylber.hpp"

namespace fs = std::filesystem;
using namespace sylber;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitPartial = 2;

/// Raised for problems that stop a command before any data is processed.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---- report records ---------------------------------------------------------

using Value = std::variant<std::string, double, std::uint64_t, bool>;
using Record = std::vector<std::pair<std::string, Value>>;

std::string kv_value(const Value& v) {
  if (const auto* s = std::get_if<std::string>(&v)) return *s;
  if (const auto* d = std::get_if<double>(&v)) return io::detail::format_number(*d);
  if (const auto* u = std::get_if<std::uint64_t>(&v)) return std::to_string(*u);
  return std::get<bool>(v) ? "true" : "false";
}

void emit(const Record& rec, const std::string& format) {
  if (format == "jsonl") {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto& [k, v] : rec) std::visit([&, key = k](const auto& x) { j[key] = x; }, v);
    std::cout << j.dump() << '\n';
    return;
  }
  for (std::size_t i = 0; i < rec.size(); ++i) {
    if (i > 0) std::cout << ' ';
    std::cout << rec[i].first << '=' << kv_value(rec[i].second);
  }
  std::cout << '\n';
}

// ---- input collection -------------------------------------------------------

std::vector<fs::path> read_manifest(const fs::path& manifest) {
  std::string text;
  try {
    text = io::detail::read_file(manifest);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  std::vector<fs::path> out;
  const fs::path base = manifest.parent_path();
  for (auto raw : io::detail::split(text, '\n')) {
    std::string line(io::detail::strip_cr(raw));
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    line = line.substr(first, line.find_last_not_of(" \t") - first + 1);
    fs::path p(line);
    out.push_back(p.is_relative() ? base / p : p);
  }
  return out;
}

std::vector<fs::path> list_dir(const fs::path& dir, const std::string& extension) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw UsageError(dir.string() + ": not a directory");
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == extension) out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

struct InputSet {
  std::vector<std::string> files;
  std::string manifest;
  std::string dir;

  void add_to(CLI::App* cmd, const std::string& what) {
    cmd->add_option("inputs", files, what + " files");
    cmd->add_option("--manifest", manifest, "Text file listing one path per line (relative to the manifest)");
    cmd->add_option("--input-dir", dir, "Directory scanned for input files (sorted by name)");
  }

  std::vector<fs::path> collect(const std::string& extension) const {
    if (files.empty() && manifest.empty() && dir.empty()) {
      throw UsageError("no inputs: give files, --manifest or --input-dir");
    }
    std::vector<fs::path> out(files.begin(), files.end());
    if (!manifest.empty()) {
      auto m = read_manifest(manifest);
      out.insert(out.end(), m.begin(), m.end());
    }
    if (!dir.empty()) {
      auto d = list_dir(dir, extension);
      out.insert(out.end(), d.begin(), d.end());
    }
    return out;
  }
};

void report_failure(const fs::path& path, const std::string& what) {
  std::cerr << "sylber: " << path.string() << ": " << what << '\n';
}

template <typename Fn>
auto load_required(const std::string& path, Fn&& fn) -> decltype(fn(fs::path(path))) {
  try {
    return fn(fs::path(path));
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

/// Runs fn(i) for i in [0, n) on up to `jobs` threads.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t jobs, Fn&& fn) {
  jobs = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(n, 1));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < jobs; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

void write_text_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    io::detail::write_file(path, text);
  }
}

std::uint32_t resolve_vocab(const std::string& codebook_path, std::uint32_t vocab, std::optional<Codebook>& book) {
  if (!codebook_path.empty()) {
    book = load_required(codebook_path, [](const fs::path& p) { return io::read_codebook(p); });
    if (vocab != 0 && vocab != book->k()) {
      throw UsageError("--vocab " + std::to_string(vocab) + " disagrees with codebook size " +
                       std::to_string(book->k()));
    }
    return static_cast<std::uint32_t>(book->k());
  }
  if (vocab == 0) throw UsageError("give --codebook or --vocab");
  return vocab;
}

std::map<std::string, Alignment> load_references(const std::vector<Segmentation>& hyps, const std::string& ref_dir,
                                                 int& status) {
  std::error_code ec;
  if (!fs::is_directory(ref_dir, ec)) throw UsageError(ref_dir + ": not a directory");
  std::map<std::string, Alignment> refs;
  for (const auto& h : hyps) {
    const fs::path p = fs::path(ref_dir) / (h.utterance_id() + ".align");
    try {
      refs.emplace(h.utterance_id(), io::read_alignment(p));
    } catch (const Error& e) {
      report_failure(p, e.what());
      status = kExitPartial;
    }
  }
  return refs;
}

// ---- segment ------------------------------------------------------------------

struct SegmentArgs {
  InputSet inputs;
  std::string output;
  std::string embeddings;
  double norm_threshold = 3.09;
  double merge_threshold = 0.8;
  std::size_t jobs = 1;
};

int cmd_segment(const SegmentArgs& a) {
  const SegmenterConfig cfg{a.norm_threshold, a.merge_threshold};
  try {
    cfg.validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  const auto paths = a.inputs.collect(".sylf");

  struct Outcome {
    std::optional<Segmentation> seg;
    std::size_t dim = 0;
    std::string error;
  };
  std::vector<Outcome> results(paths.size());
  const bool want_embeddings = !a.embeddings.empty();
  parallel_for(paths.size(), a.jobs, [&](std::size_t i) {
    try {
      const auto bytes = io::detail::read_file(paths[i]);
      const auto seq = io::decode_frames(bytes, paths[i].stem().string(), paths[i].string());
      auto seg = segment(seq, cfg);
      if (want_embeddings) seg = with_segment_embeddings(seq, seg);
      results[i].dim = seq.dim();
      results[i].seg = std::move(seg);
    } catch (const std::exception& e) {
      results[i].error = e.what();
    }
  });

  int status = kExitOk;
  std::vector<Segmentation> segs;
  std::size_t dim = 0;
  float rate = 50.0f;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    if (!results[i].seg) {
      report_failure(paths[i], results[i].error);
      status = kExitPartial;
      continue;
    }
    if (dim == 0) {
      dim = results[i].dim;
      rate = results[i].seg->frame_rate_hz();
    }
    segs.push_back(std::move(*results[i].seg));
  }
  write_text_output(a.output, io::format_segmentations(segs));
  if (want_embeddings) io::write_frames(io::stack_segment_embeddings(segs, std::max<std::size_t>(dim, 1), rate), a.embeddings);
  return status;
}

// ---- train-kmeans ---------------------------------------------------------------

struct TrainArgs {
  InputSet inputs;
  std::string output;
  std::size_t k = 0;
  std::uint64_t seed = 0;
  std::size_t max_iters = 100;
  double tol = 1e-6;
  std::size_t restarts = 1;
  std::string format = "kv";
};

int cmd_train_kmeans(const TrainArgs& a) {
  if (a.k == 0) throw UsageError("--k must be positive");
  if (a.restarts == 0) throw UsageError("--restarts must be positive");
  if (!(a.tol >= 0.0)) throw UsageError("--tol must be non-negative");
  const auto paths = a.inputs.collect(".sylf");
  int status = kExitOk;
  Matrix<float> points;
  for (const auto& p : paths) {
    try {
      const auto seq = io::read_frames(p);
      if (seq.n_frames() == 0) continue;
      if (points.rows() > 0 && seq.dim() != points.cols()) {
        fail(ErrorCode::DimMismatch, "dimension " + std::to_string(seq.dim()) + " differs from " +
                                         std::to_string(points.cols()));
      }
      for (std::size_t i = 0; i < seq.n_frames(); ++i) points.append_row(seq.frame(i));
    } catch (const Error& e) {
      report_failure(p, e.what());
      status = kExitPartial;
    }
  }
  KMeansResult res;
  try {
    res = kmeans_train(points, {a.k, a.seed, a.max_iters, a.tol, a.restarts});
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  if (res.degenerate) std::cerr << "sylber: warning: fewer distinct points than k; duplicate centroids\n";
  io::write_codebook(res.codebook, a.output);
  emit({{"k", std::uint64_t{res.codebook.k()}},
        {"dim", std::uint64_t{res.codebook.dim()}},
        {"points", std::uint64_t{points.rows()}},
        {"iterations", std::uint64_t{res.inertia_history.size()}},
        {"inertia", res.inertia},
        {"degenerate", res.degenerate}},
       a.format);
  return status;
}

// ---- tokenize / encode / decode -------------------------------------------------

struct TokenizeArgs {
  std::string segments;
  std::string embeddings;
  std::string codebook;
  std::string output;
};

int cmd_tokenize(const TokenizeArgs& a) {
  const auto book = load_required(a.codebook, [](const fs::path& p) { return io::read_codebook(p); });
  const auto segs = load_required(a.segments, [](const fs::path& p) { return io::read_segmentations(p); });
  const auto stacked = load_required(a.embeddings, [](const fs::path& p) { return io::read_frames(p); });
  std::vector<Segmentation> with_emb;
  try {
    with_emb = io::attach_segment_embeddings(segs, stacked);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  if (stacked.n_frames() > 0 && stacked.dim() != book.dim()) {
    throw UsageError("embedding dimension " + std::to_string(stacked.dim()) + " differs from codebook dimension " +
                     std::to_string(book.dim()));
  }
  std::vector<Segmentation> out;
  out.reserve(with_emb.size());
  for (const auto& s : with_emb) {
    const auto tok = assign_tokens(s, book);
    std::vector<Segment> bare = tok.segments();
    for (auto& b : bare) b.embedding.reset();
    out.emplace_back(std::move(bare), tok.n_frames(), tok.frame_rate_hz(), tok.utterance_id());
  }
  write_text_output(a.output, io::format_segmentations(out));
  return kExitOk;
}

struct EncodeArgs {
  std::string segments;
  std::string codebook;
  std::uint32_t vocab = 0;
  std::string output_dir;
};

bool safe_stem(const std::string& id) {
  return !id.empty() && id != "." && id != ".." && id.find_first_of("/\\") == std::string::npos;
}

int cmd_encode(const EncodeArgs& a) {
  std::optional<Codebook> book;
  const std::uint32_t vocab = resolve_vocab(a.codebook, a.vocab, book);
  const auto segs = load_required(a.segments, [](const fs::path& p) { return io::read_segmentations(p); });
  std::error_code ec;
  fs::create_directories(a.output_dir, ec);
  if (ec) throw UsageError(a.output_dir + ": " + ec.message());
  int status = kExitOk;
  for (const auto& s : segs) {
    const fs::path out = fs::path(a.output_dir) / (s.utterance_id() + ".sylb");
    try {
      if (!safe_stem(s.utterance_id())) fail(ErrorCode::InvalidArgument, "utterance id is not a usable file name");
      codec::write_stream(codec::encode(codec::to_frame_tokens(s, vocab)), out);
    } catch (const Error& e) {
      report_failure(s.utterance_id().empty() ? fs::path(a.segments) : out, e.what());
      status = kExitPartial;
    }
  }
  return status;
}

struct DecodeArgs {
  InputSet inputs;
  std::string codebook;
  std::uint32_t vocab = 0;
  std::string output;
  std::string embeddings;
};

int cmd_decode(const DecodeArgs& a) {
  std::optional<Codebook> book;
  const std::uint32_t vocab = resolve_vocab(a.codebook, a.vocab, book);
  if (!a.embeddings.empty() && !book) throw UsageError("--embeddings needs --codebook");
  const auto paths = a.inputs.collect(".sylb");
  int status = kExitOk;
  std::vector<Segmentation> segs;
  for (const auto& p : paths) {
    codec::TokenBitstream bs;
    try {
      bs = codec::read_stream(p);
    } catch (const Error& e) {
      report_failure(p, e.what());
      status = kExitPartial;
      continue;
    }
    if (bs.vocab_size != vocab) {
      throw UsageError(p.string() + ": stream vocabulary " + std::to_string(bs.vocab_size) +
                       " does not match expected " + std::to_string(vocab));
    }
    try {
      segs.push_back(codec::to_segmentation(codec::decode(bs), p.stem().string()));
    } catch (const Error& e) {
      report_failure(p, e.what());
      status = kExitPartial;
    }
  }
  write_text_output(a.output, io::format_segmentations(segs));
  if (!a.embeddings.empty()) {
    Matrix<float> rows(0, book->dim());
    for (const auto& s : segs) {
      std::vector<std::uint32_t> tokens;
      for (const auto& seg : s.segments()) tokens.push_back(*seg.token_id);
      const auto restored = restore_embeddings(tokens, *book);
      for (std::size_t r = 0; r < restored.rows(); ++r) rows.append_row(restored.row(r));
    }
    const float rate = segs.empty() ? 50.0f : segs.front().frame_rate_hz();
    io::write_frames(FrameSequence(std::move(rows), rate, "segments"), a.embeddings);
  }
  return status;
}

// ---- eval -----------------------------------------------------------------------

struct EvalArgs {
  std::string hyp;
  std::string ref_dir;
  double tolerance = metrics::kDefaultToleranceSec;
  double mi_base = 2.0;
  std::string format = "kv";
  // coding
  std::uint32_t vocab = 0;
  std::optional<double> toks;
  std::vector<std::string> streams;
  std::optional<double> wer;
  std::optional<double> total_words;
  // di
  std::vector<std::string> curve_files;
  std::vector<std::string> curves;
  std::string left;
  std::string right;
  std::string continuum;
  std::string mode = "syllable";
  double norm_threshold = 3.09;
};

int cmd_eval_boundaries(const EvalArgs& a) {
  if (!(a.tolerance >= 0.0)) throw UsageError("--tolerance must be non-negative");
  const auto hyps = load_required(a.hyp, [](const fs::path& p) { return io::read_segmentations(p); });
  int status = kExitOk;
  const auto refs = load_references(hyps, a.ref_dir, status);
  metrics::BoundaryCounts total;
  std::uint64_t n_utts = 0;
  for (const auto& h : hyps) {
    const auto it = refs.find(h.utterance_id());
    if (it == refs.end()) continue;
    try {
      total += metrics::match_boundaries(metrics::boundaries_of(it->second, h.duration_sec()),
                                         metrics::boundaries_of(h), a.tolerance);
      ++n_utts;
    } catch (const Error& e) {
      report_failure(h.utterance_id(), e.what());
      status = kExitPartial;
    }
  }
  const auto r = metrics::score_boundaries(total);
  const double os = r.n_ref > 0 ? static_cast<double>(r.n_hyp) / static_cast<double>(r.n_ref) - 1.0 : 0.0;
  emit({{"metric", std::string("boundaries")},
        {"utterances", n_utts},
        {"tolerance", a.tolerance},
        {"n_ref", std::uint64_t{r.n_ref}},
        {"n_hyp", std::uint64_t{r.n_hyp}},
        {"n_matched", std::uint64_t{r.n_matched}},
        {"precision", r.precision},
        {"recall", r.recall},
        {"f1", r.f1},
        {"os", os},
        {"r_value", r.r_value},
        {"degenerate", r.degenerate},
        {"edge_boundaries", std::string("excluded")}},
       a.format);
  return status;
}

int cmd_eval_discovery(const EvalArgs& a) {
  if (!(a.mi_base > 0.0) || a.mi_base == 1.0) throw UsageError("--mi-base must be positive and not 1");
  const auto hyps = load_required(a.hyp, [](const fs::path& p) { return io::read_segmentations(p); });
  int status = kExitOk;
  const auto refs = load_references(hyps, a.ref_dir, status);
  std::vector<metrics::DiscoveryInput> inputs;
  for (const auto& h : hyps) {
    const auto it = refs.find(h.utterance_id());
    if (it != refs.end()) inputs.push_back({&h, &it->second});
  }
  metrics::DiscoveryResult r;
  try {
    r = metrics::discovery_metrics(inputs, a.mi_base);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  emit({{"metric", std::string("discovery")},
        {"utterances", std::uint64_t{inputs.size()}},
        {"n_pairs", std::uint64_t{r.n_pairs}},
        {"n_dropped", std::uint64_t{r.n_dropped}},
        {"n_clusters", std::uint64_t{r.n_clusters}},
        {"n_labels", std::uint64_t{r.n_labels}},
        {"syllable_purity", r.syllable_purity},
        {"cluster_purity", r.cluster_purity},
        {"mutual_information", r.mutual_information},
        {"mi_base", a.mi_base}},
       a.format);
  return status;
}

int cmd_eval_coding(const EvalArgs& a) {
  int status = kExitOk;
  std::uint32_t vocab = a.vocab;
  double seconds = 0.0;
  std::uint64_t records = 0, speech_records = 0, payload_bits = 0;
  for (const auto& s : a.streams) {
    try {
      const auto bs = codec::read_stream(s);
      if (vocab == 0) vocab = bs.vocab_size;
      if (bs.vocab_size != vocab) {
        throw UsageError(s + ": stream vocabulary " + std::to_string(bs.vocab_size) + " does not match " +
                         std::to_string(vocab));
      }
      for (const auto& r : codec::decode_records(bs)) {
        ++records;
        if (r.token != bs.vocab_size) ++speech_records;
      }
      payload_bits += static_cast<std::uint64_t>(bs.record_count) * (codec::token_field_bits(vocab) + 7);
      seconds += static_cast<double>(bs.total_frames) / bs.frame_rate_hz;
    } catch (const Error& e) {
      report_failure(s, e.what());
      status = kExitPartial;
    }
  }
  if (vocab == 0) throw UsageError("give --vocab or --streams");
  double toks = 0.0;
  if (a.toks) {
    toks = *a.toks;
  } else if (seconds > 0.0) {
    toks = static_cast<double>(speech_records) / seconds;
  } else {
    throw UsageError("give --toks or non-empty --streams");
  }
  if (!(toks >= 0.0)) throw UsageError("--toks must be non-negative");
  Record rec{{"metric", std::string("coding")},
             {"vocab", std::uint64_t{vocab}},
             {"tokens_per_sec", toks},
             {"bitrate", codec::bitrate_metric(vocab, toks)},
             {"duration_informed_bitrate", codec::duration_informed_bitrate(vocab, toks)}};
  if (!a.streams.empty()) {
    rec.emplace_back("seconds", seconds);
    rec.emplace_back("records", records);
    rec.emplace_back("payload_bits", payload_bits);
    rec.emplace_back("payload_bits_per_sec", seconds > 0.0 ? static_cast<double>(payload_bits) / seconds : 0.0);
  }
  if (a.wer || a.total_words) {
    if (!a.wer || !a.total_words) throw UsageError("--wer and --total-words go together");
    if (payload_bits == 0) throw UsageError("coding rate needs --streams to count bits");
    try {
      rec.emplace_back("coding_rate", codec::coding_rate(*a.wer, *a.total_words, static_cast<double>(payload_bits)));
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
  }
  emit(rec, a.format);
  return status;
}

int cmd_eval_di(const EvalArgs& a) {
  int status = kExitOk;
  std::vector<Record> rows;
  std::vector<metrics::SimilarityCurvePair> pairs;
  auto score = [&](const std::string& name, const metrics::SimilarityCurvePair& p) {
    const auto r = metrics::discriminability(p);
    pairs.push_back(p);
    rows.push_back({{"metric", std::string("di")},
                    {"source", name},
                    {"points", std::uint64_t{p.size()}},
                    {"di", r.di},
                    {"alpha_star", r.alpha_star}});
  };
  std::vector<std::string> curve_paths = a.curve_files;
  curve_paths.insert(curve_paths.end(), a.curves.begin(), a.curves.end());
  for (const auto& c : curve_paths) {
    try {
      score(c, metrics::read_curve_pair(c));
    } catch (const Error& e) {
      report_failure(c, e.what());
      status = kExitPartial;
    }
  }
  if (!a.left.empty() || !a.right.empty() || !a.continuum.empty()) {
    if (a.left.empty() || a.right.empty() || a.continuum.empty()) {
      throw UsageError("--left, --right and --continuum go together");
    }
    if (a.mode != "syllable" && a.mode != "frame") throw UsageError("--mode is syllable or frame");
    const auto left = load_required(a.left, [](const fs::path& p) { return io::read_frames(p); });
    const auto right = load_required(a.right, [](const fs::path& p) { return io::read_frames(p); });
    std::vector<FrameSequence> samples;
    for (const auto& p : read_manifest(a.continuum)) {
      samples.push_back(load_required(p.string(), [](const fs::path& q) { return io::read_frames(q); }));
    }
    try {
      score(a.continuum, metrics::build_curve_pair(left, right, samples, metrics::alpha_grid(samples.size()),
                                                   a.mode == "frame" ? metrics::CurveMode::FrameWise
                                                                     : metrics::CurveMode::SyllableWise,
                                                   {a.norm_threshold, 0.8}));
    } catch (const Error& e) {
      report_failure(a.continuum, e.what());
      status = kExitPartial;
    }
  }
  if (curve_paths.empty() && a.left.empty()) throw UsageError("give curve files or --left/--right/--continuum");
  for (const auto& r : rows) emit(r, a.format);
  if (!pairs.empty()) {
    emit({{"metric", std::string("di_aggregate")},
          {"pairs", std::uint64_t{pairs.size()}},
          {"di", metrics::di_aggregate(pairs)}},
         a.format);
  }
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Syllabic segmentation, tokenization, coding and evaluation over embedding corpora"};
  app.require_subcommand(1);
  int status = kExitOk;

  SegmentArgs seg;
  auto* c_seg = app.add_subcommand("segment", "Segment SYLF frame files into syllable spans");
  seg.inputs.add_to(c_seg, "SYLF");
  c_seg->add_option("-o,--output", seg.output, "Segmentation file (stdout if omitted)");
  c_seg->add_option("--embeddings", seg.embeddings, "Also write stacked segment embeddings (SYLF)");
  c_seg->add_option("--norm-threshold", seg.norm_threshold, "Speech gate on frame norm")->capture_default_str();
  c_seg->add_option("--merge-threshold", seg.merge_threshold, "Cosine threshold for merging")->capture_default_str();
  c_seg->add_option("-j,--jobs", seg.jobs, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  c_seg->callback([&] { status = cmd_segment(seg); });

  TrainArgs train;
  auto* c_train = app.add_subcommand("train-kmeans", "Train a codebook on segment embeddings");
  train.inputs.add_to(c_train, "SYLF segment-embedding");
  c_train->add_option("-o,--output", train.output, "Codebook file (SYLC)")->required();
  c_train->add_option("-k,--k", train.k, "Number of clusters")->required();
  c_train->add_option("--seed", train.seed, "Random seed")->capture_default_str();
  c_train->add_option("--max-iters", train.max_iters, "Lloyd iteration cap")->capture_default_str();
  c_train->add_option("--tol", train.tol, "Relative inertia tolerance")->capture_default_str();
  c_train->add_option("--restarts", train.restarts, "Independent restarts")->capture_default_str();
  c_train->add_option("--format", train.format, "kv or jsonl")->check(CLI::IsMember({"kv", "jsonl"}));
  c_train->callback([&] { status = cmd_train_kmeans(train); });

  TokenizeArgs tok;
  auto* c_tok = app.add_subcommand("tokenize", "Assign codebook tokens to segments");
  c_tok->add_option("--segments", tok.segments, "Segmentation file")->required();
  c_tok->add_option("--embeddings", tok.embeddings, "Stacked segment embeddings (SYLF)")->required();
  c_tok->add_option("--codebook", tok.codebook, "Codebook (SYLC)")->required();
  c_tok->add_option("-o,--output", tok.output, "Tokenized segmentation file (stdout if omitted)");
  c_tok->callback([&] { status = cmd_tokenize(tok); });

  EncodeArgs enc;
  auto* c_enc = app.add_subcommand("encode", "Pack tokenized segmentations into SYLB streams");
  c_enc->add_option("--segments", enc.segments, "Tokenized segmentation file")->required();
  c_enc->add_option("--codebook", enc.codebook, "Codebook giving the vocabulary size");
  c_enc->add_option("--vocab", enc.vocab, "Vocabulary size when no codebook is given");
  c_enc->add_option("--output-dir", enc.output_dir, "Directory receiving <utterance>.sylb")->required();
  c_enc->callback([&] { status = cmd_encode(enc); });

  DecodeArgs dec;
  auto* c_dec = app.add_subcommand("decode", "Unpack SYLB streams into tokenized segmentations");
  dec.inputs.add_to(c_dec, "SYLB");
  c_dec->add_option("--codebook", dec.codebook, "Codebook the streams must match");
  c_dec->add_option("--vocab", dec.vocab, "Expected vocabulary size when no codebook is given");
  c_dec->add_option("-o,--output", dec.output, "Segmentation file (stdout if omitted)");
  c_dec->add_option("--embeddings", dec.embeddings, "Write centroid embeddings per segment (SYLF)");
  c_dec->callback([&] { status = cmd_decode(dec); });

  EvalArgs ev;
  auto* c_eval = app.add_subcommand("eval", "Evaluation reports");
  c_eval->require_subcommand(1);
  auto add_format = [&](CLI::App* c) {
    c->add_option("--format", ev.format, "kv or jsonl")->check(CLI::IsMember({"kv", "jsonl"}));
  };
  auto* e_bnd = c_eval->add_subcommand("boundaries", "Precision, recall, F1 and R-value of boundaries");
  e_bnd->add_option("--hyp", ev.hyp, "Segmentation file")->required();
  e_bnd->add_option("--ref-dir", ev.ref_dir, "Directory of <utterance>.align files")->required();
  e_bnd->add_option("--tolerance", ev.tolerance, "Match tolerance in seconds")->capture_default_str();
  add_format(e_bnd);
  e_bnd->callback([&] { status = cmd_eval_boundaries(ev); });

  auto* e_disc = c_eval->add_subcommand("discovery", "Purity and mutual information of tokens");
  e_disc->add_option("--hyp", ev.hyp, "Tokenized segmentation file")->required();
  e_disc->add_option("--ref-dir", ev.ref_dir, "Directory of <utterance>.align files")->required();
  e_disc->add_option("--mi-base", ev.mi_base, "Logarithm base for MI")->capture_default_str();
  add_format(e_disc);
  e_disc->callback([&] { status = cmd_eval_discovery(ev); });

  auto* e_code = c_eval->add_subcommand("coding", "Bitrate and coding-rate arithmetic");
  e_code->add_option("--vocab", ev.vocab, "Vocabulary size");
  e_code->add_option("--toks", ev.toks, "Tokens per second");
  e_code->add_option("--streams", ev.streams, "SYLB streams to measure");
  e_code->add_option("--wer", ev.wer, "Word error rate in percent");
  e_code->add_option("--total-words", ev.total_words, "Words in the evaluated set");
  add_format(e_code);
  e_code->callback([&] { status = cmd_eval_coding(ev); });

  auto* e_di = c_eval->add_subcommand("di", "Discriminability index of similarity curves");
  e_di->add_option("files", ev.curve_files, "Curve files (alpha, sim_left, sim_right per line)");
  e_di->add_option("--curves", ev.curves, "Curve files");
  e_di->add_option("--left", ev.left, "Left endpoint embeddings (SYLF)");
  e_di->add_option("--right", ev.right, "Right endpoint embeddings (SYLF)");
  e_di->add_option("--continuum", ev.continuum, "Manifest of continuum SYLF files ordered by alpha");
  e_di->add_option("--mode", ev.mode, "syllable or frame")->capture_default_str();
  e_di->add_option("--norm-threshold", ev.norm_threshold, "Speech gate for pooling")->capture_default_str();
  add_format(e_di);
  e_di->callback([&] { status = cmd_eval_di(ev); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << "sylber: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "sylber: " << e.what() << '\n';
    return kExitUsage;
  }
  std::cout.flush();
  return status;
}
