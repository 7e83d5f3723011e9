#include "tripnet/data.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "tripnet/binary_io.hpp"

namespace tripnet::data {

namespace {

constexpr char kFeatureMagic[8] = {'T', 'R', 'I', 'P', 'F', 'E', 'A', 'T'};
constexpr std::uint32_t kFeatureFormat = 1;
constexpr const char* kAnnotationMagic = "# tripnet-annotations v1";
constexpr const char* kVocabMagic = "# tripnet-vocab v1";

double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::int64_t uniform_int(std::mt19937_64& rng, std::int64_t lo, std::int64_t hi) {
  const auto span = static_cast<std::uint64_t>(hi - lo + 1);
  return lo + static_cast<std::int64_t>(rng() % span);
}

// Box-Muller; spelled out so the stream is identical across standard libraries.
double gaussian(std::mt19937_64& rng) {
  double u1 = unit_uniform(rng);
  while (u1 <= 0.0) u1 = unit_uniform(rng);
  const double u2 = unit_uniform(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string format_seconds(double s) {
  std::ostringstream os;
  os << std::setprecision(17) << s;
  return os.str();
}

}  // namespace

void FeatureVideo::validate() const {
  if (n_frames < 1) throw DataError("video '" + id + "': no frames");
  if (!(fps > 0.0) || !std::isfinite(fps)) {
    throw DataError("video '" + id + "': fps must be positive");
  }
  if (unit_len < 1) throw DataError("video '" + id + "': unit_len must be >= 1");
  if (dim < 1) throw DataError("video '" + id + "': feature dimension must be >= 1");
  const std::int64_t expected = (n_frames + unit_len - 1) / unit_len;
  if (static_cast<std::int64_t>(features.size()) != expected * dim) {
    throw DataError("video '" + id + "': expected " + std::to_string(expected) +
                    " units of dimension " + std::to_string(dim) + ", payload has " +
                    std::to_string(features.size()) + " values");
  }
  for (float v : features) {
    if (!std::isfinite(v)) throw DataError("video '" + id + "': non-finite feature");
  }
}

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

Vocabulary Vocabulary::build(std::span<const Annotation> train) {
  std::set<std::string> seen;
  for (const auto& a : train) seen.insert(a.tokens.begin(), a.tokens.end());
  return from_tokens({seen.begin(), seen.end()});
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
  std::sort(tokens.begin(), tokens.end());
  tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
  Vocabulary v;
  v.tokens_ = std::move(tokens);
  for (std::size_t i = 0; i < v.tokens_.size(); ++i) {
    v.ids_[v.tokens_[i]] = static_cast<std::int64_t>(i) + 1;
  }
  return v;
}

std::int64_t Vocabulary::id(const std::string& token) const {
  auto it = ids_.find(token);
  return it == ids_.end() ? kUnk : it->second;
}

std::vector<std::int64_t> Vocabulary::encode(std::span<const std::string> tokens) const {
  std::vector<std::int64_t> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(id(t));
  return out;
}

void Vocabulary::save_file(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("vocab: cannot open " + path.string());
  out << kVocabMagic << '\n';
  for (const auto& t : tokens_) out << t << '\n';
}

Vocabulary Vocabulary::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("vocab: cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kVocabMagic) {
    throw DataError(path.string() + ": missing vocabulary header");
  }
  std::vector<std::string> tokens;
  while (std::getline(in, line)) {
    if (!line.empty()) tokens.push_back(line);
  }
  return from_tokens(std::move(tokens));
}

void write_features(std::ostream& out, const FeatureVideo& v) {
  v.validate();
  out.write(kFeatureMagic, sizeof(kFeatureMagic));
  io::write_le<std::uint32_t>(out, kFeatureFormat);
  io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(v.id.size()));
  io::write_bytes(out, v.id);
  io::write_le<std::int64_t>(out, v.n_frames);
  io::write_le<double>(out, v.fps);
  io::write_le<std::int64_t>(out, v.unit_len);
  io::write_le<std::int64_t>(out, v.units());
  io::write_le<std::int64_t>(out, v.dim);
  for (float f : v.features) io::write_le<float>(out, f);
  if (!out) throw DataError("features: write failed for '" + v.id + "'");
}

FeatureVideo read_features(std::istream& in) {
  const std::string magic = io::read_bytes(in, sizeof(kFeatureMagic), "magic");
  if (magic != std::string(kFeatureMagic, sizeof(kFeatureMagic))) {
    throw DataError("features: bad magic");
  }
  const auto format = io::read_le<std::uint32_t>(in, "format version");
  if (format != kFeatureFormat) {
    throw DataError("features: unsupported format version " + std::to_string(format));
  }
  FeatureVideo v;
  const auto id_len = io::read_le<std::uint32_t>(in, "id length");
  if (id_len > 4096) throw DataError("features: implausible id length");
  v.id = io::read_bytes(in, id_len, "id");
  v.n_frames = io::read_le<std::int64_t>(in, "frame count");
  v.fps = io::read_le<double>(in, "fps");
  v.unit_len = io::read_le<std::int64_t>(in, "unit length");
  const auto units = io::read_le<std::int64_t>(in, "unit count");
  v.dim = io::read_le<std::int64_t>(in, "dimension");
  if (units < 0 || v.dim < 1 || units > (std::int64_t{1} << 40) / v.dim) {
    throw DataError("features: implausible size for '" + v.id + "'");
  }
  v.features.resize(static_cast<std::size_t>(units * v.dim));
  for (float& f : v.features) f = io::read_le<float>(in, "feature payload");
  if (in.peek() != std::char_traits<char>::eof()) {
    throw DataError("features: trailing bytes after payload for '" + v.id + "'");
  }
  v.validate();
  return v;
}

void write_features_file(const std::filesystem::path& path, const FeatureVideo& v) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("features: cannot open " + path.string());
  write_features(out, v);
}

FeatureVideo read_features_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("features: cannot open " + path.string());
  try {
    return read_features(in);
  } catch (const io::FormatError& e) {
    throw DataError(path.string() + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

VideoMap load_feature_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw DataError("feature directory not found: " + dir.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".feat") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  VideoMap out;
  for (const auto& f : files) {
    FeatureVideo v = read_features_file(f);
    std::string id = v.id;
    if (!out.emplace(id, std::move(v)).second) {
      throw DataError("duplicate video id '" + id + "' in " + dir.string());
    }
  }
  return out;
}

std::vector<Annotation> parse_annotations(std::istream& in, const VideoMap& videos) {
  std::vector<Annotation> out;
  std::string line;
  std::size_t lineno = 0;
  auto fail = [&](const std::string& why) {
    throw DataError("annotations line " + std::to_string(lineno) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line.rfind("# tripnet-annotations", 0) == 0 && line != kAnnotationMagic) {
        fail("unsupported header '" + line + "'");
      }
      continue;
    }
    const auto tab = line.find('\t');
    if (tab == std::string::npos) fail("expected '<video> <start> <end>\\t<query>'");
    std::istringstream head(line.substr(0, tab));
    Annotation a;
    std::string extra;
    if (!(head >> a.video_id >> a.start_sec >> a.end_sec) || (head >> extra)) {
      fail("expected '<video> <start> <end>' before the tab");
    }
    a.text = line.substr(tab + 1);
    a.tokens = tokenize(a.text);
    if (a.tokens.empty()) fail("empty query");
    if (!(a.end_sec > a.start_sec)) {
      fail("end time " + format_seconds(a.end_sec) + " is not after start time " +
           format_seconds(a.start_sec));
    }
    if (a.start_sec < 0.0) fail("negative start time");
    auto it = videos.find(a.video_id);
    if (it == videos.end()) fail("unknown video '" + a.video_id + "'");
    const FeatureVideo& v = it->second;
    a.gt_start = static_cast<std::int64_t>(std::llround(a.start_sec * v.fps));
    a.gt_end = std::min<std::int64_t>(std::llround(a.end_sec * v.fps), v.n_frames);
    if (a.gt_end <= a.gt_start) {
      fail("interval is empty after conversion to frames (video has " +
           std::to_string(v.n_frames) + " frames)");
    }
    out.push_back(std::move(a));
  }
  return out;
}

std::vector<Annotation> load_annotations(const std::filesystem::path& path,
                                         const VideoMap& videos) {
  std::ifstream in(path);
  if (!in) throw DataError("annotations: cannot open " + path.string());
  try {
    return parse_annotations(in, videos);
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_annotations(std::ostream& out, std::span<const Annotation> annotations) {
  out << kAnnotationMagic << '\n';
  for (const auto& a : annotations) {
    out << a.video_id << ' ' << format_seconds(a.start_sec) << ' '
        << format_seconds(a.end_sec) << '\t' << a.text << '\n';
  }
}

void save_annotations(const std::filesystem::path& path,
                      std::span<const Annotation> annotations) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("annotations: cannot open " + path.string());
  write_annotations(out, annotations);
}

std::int64_t mean_clip_length(std::span<const Annotation> train) {
  if (train.empty()) throw DataError("mean_clip_length: no annotations");
  double acc = 0.0;
  for (const auto& a : train) acc += static_cast<double>(a.length());
  const auto x = static_cast<std::int64_t>(
      std::llround(acc / static_cast<double>(train.size())));
  return std::max<std::int64_t>(1, x);
}

Split split_fractional(std::span<const Annotation> annotations,
                       std::array<double, 3> fractions, std::uint64_t seed) {
  double total = 0.0;
  for (double f : fractions) {
    if (f < 0.0) throw std::invalid_argument("split: negative fraction");
    total += f;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw std::invalid_argument("split: fractions must sum to 1");
  }
  std::set<std::string> id_set;
  for (const auto& a : annotations) id_set.insert(a.video_id);
  std::vector<std::string> ids(id_set.begin(), id_set.end());
  const auto wanted = std::count_if(fractions.begin(), fractions.end(),
                                    [](double f) { return f > 0.0; });
  if (static_cast<std::ptrdiff_t>(ids.size()) < wanted) {
    throw std::invalid_argument("split: " + std::to_string(ids.size()) +
                                " videos cannot fill " + std::to_string(wanted) +
                                " splits");
  }
  std::mt19937_64 rng(seed);
  for (std::size_t i = ids.size(); i > 1; --i) {
    std::swap(ids[i - 1], ids[rng() % i]);
  }
  const auto n = static_cast<double>(ids.size());
  const auto n_train = static_cast<std::size_t>(std::llround(fractions[0] * n));
  const auto n_val = std::min(ids.size() - n_train,
                              static_cast<std::size_t>(std::llround(fractions[1] * n)));
  std::map<std::string, int> which;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    which[ids[i]] = i < n_train ? 0 : (i < n_train + n_val ? 1 : 2);
  }
  Split out;
  for (const auto& a : annotations) {
    switch (which[a.video_id]) {
      case 0: out.train.push_back(a); break;
      case 1: out.val.push_back(a); break;
      default: out.test.push_back(a); break;
    }
  }
  return out;
}

void SyntheticSpec::validate() const {
  auto need = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("synthetic spec: ") + what);
  };
  need(num_videos >= 1, "num_videos must be >= 1");
  need(n_frames >= 1, "n_frames must be >= 1");
  need(fps > 0.0, "fps must be positive");
  need(dim >= 1, "dim must be >= 1");
  need(vocab_size >= 1, "vocab_size must be >= 1");
  need(clip_mean >= 1 && clip_mean < n_frames, "clip_mean must be in [1, n_frames)");
  need(clip_jitter >= 0 && clip_jitter < clip_mean, "clip_jitter must be in [0, clip_mean)");
  need(clips_per_video >= 1, "clips_per_video must be >= 1");
  need(clips_per_video * (clip_mean + clip_jitter) <= n_frames,
       "planted clips do not fit in the video");
  need(min_query_tokens >= 1 && max_query_tokens >= min_query_tokens,
       "query token bounds invalid");
  need(clips_per_video * max_query_tokens <= std::min(dim, vocab_size),
       "not enough channels for disjoint queries");
  need(signal_strength >= 0.0, "signal_strength must be >= 0");
  need(noise_scale >= 0.0, "noise_scale must be >= 0");
}

std::string synthetic_token(std::int64_t i) {
  std::ostringstream os;
  os << 'w' << std::setw(2) << std::setfill('0') << i;
  return os.str();
}

std::int64_t token_channel(const std::string& token, std::int64_t dim) {
  return static_cast<std::int64_t>(fnv1a(token) % static_cast<std::uint64_t>(dim));
}

std::vector<double> query_direction(std::span<const std::string> tokens,
                                    std::int64_t dim) {
  std::vector<double> d(static_cast<std::size_t>(dim), 0.0);
  for (const auto& t : tokens) d[static_cast<std::size_t>(token_channel(t, dim))] += 1.0;
  double norm = 0.0;
  for (double x : d) norm += x * x;
  norm = std::sqrt(norm);
  if (norm > 0.0) {
    for (double& x : d) x /= norm;
  }
  return d;
}

SyntheticDataset generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);

  std::map<std::int64_t, std::vector<std::string>> by_channel;
  for (std::int64_t i = 0; i < spec.vocab_size; ++i) {
    const std::string tok = synthetic_token(i);
    by_channel[token_channel(tok, spec.dim)].push_back(tok);
  }
  std::vector<std::int64_t> channels;
  for (const auto& [c, _] : by_channel) channels.push_back(c);
  if (static_cast<std::int64_t>(channels.size()) <
      spec.clips_per_video * spec.max_query_tokens) {
    throw std::invalid_argument("synthetic spec: vocabulary covers too few channels");
  }

  SyntheticDataset out;
  const auto D = static_cast<std::size_t>(spec.dim);
  for (std::int64_t vi = 0; vi < spec.num_videos; ++vi) {
    FeatureVideo v;
    std::ostringstream id;
    id << "syn" << std::setw(4) << std::setfill('0') << vi;
    v.id = id.str();
    v.n_frames = spec.n_frames;
    v.fps = spec.fps;
    v.unit_len = 1;
    v.dim = spec.dim;

    std::vector<double> feats(static_cast<std::size_t>(spec.n_frames) * D);
    for (double& f : feats) f = spec.noise_scale * gaussian(rng);

    std::vector<std::pair<std::int64_t, std::int64_t>> placed;
    std::vector<std::int64_t> free_channels = channels;
    for (std::int64_t c = 0; c < spec.clips_per_video; ++c) {
      const std::int64_t len = spec.clip_mean +
                               uniform_int(rng, -spec.clip_jitter, spec.clip_jitter);
      std::int64_t start = 0;
      for (int attempt = 0;; ++attempt) {
        if (attempt > 10000) {
          throw std::runtime_error("synthetic: could not place clip in " + v.id);
        }
        start = uniform_int(rng, 0, spec.n_frames - len);
        const bool clash = std::any_of(placed.begin(), placed.end(), [&](auto p) {
          return start < p.second && p.first < start + len;
        });
        if (!clash) break;
      }
      placed.emplace_back(start, start + len);

      const std::int64_t n_tok =
          uniform_int(rng, spec.min_query_tokens, spec.max_query_tokens);
      std::vector<std::string> tokens;
      for (std::int64_t k = 0; k < n_tok; ++k) {
        const auto pick = static_cast<std::size_t>(
            uniform_int(rng, 0, static_cast<std::int64_t>(free_channels.size()) - 1));
        const auto& toks = by_channel[free_channels[pick]];
        tokens.push_back(toks[static_cast<std::size_t>(
            uniform_int(rng, 0, static_cast<std::int64_t>(toks.size()) - 1))]);
        free_channels.erase(free_channels.begin() + static_cast<std::ptrdiff_t>(pick));
      }
      const auto dir = query_direction(tokens, spec.dim);
      for (std::int64_t f = start; f < start + len; ++f) {
        for (std::size_t d = 0; d < D; ++d) {
          feats[static_cast<std::size_t>(f) * D + d] += spec.signal_strength * dir[d];
        }
      }

      Annotation a;
      a.video_id = v.id;
      a.tokens = tokens;
      for (std::size_t k = 0; k < tokens.size(); ++k) {
        a.text += (k ? " " : "") + tokens[k];
      }
      a.gt_start = start;
      a.gt_end = start + len;
      a.start_sec = static_cast<double>(start) / spec.fps;
      a.end_sec = static_cast<double>(start + len) / spec.fps;
      out.annotations.push_back(std::move(a));
    }

    v.features.assign(feats.begin(), feats.end());
    out.videos.emplace(v.id, std::move(v));
  }
  return out;
}

void save_dataset(const std::filesystem::path& dir, const VideoMap& videos,
                  std::span<const Annotation> annotations) {
  std::filesystem::create_directories(dir / "features");
  for (const auto& [id, v] : videos) {
    write_features_file(dir / "features" / (id + ".feat"), v);
  }
  save_annotations(dir / "annotations.txt", annotations);
}

SyntheticDataset load_dataset(const std::filesystem::path& dir) {
  SyntheticDataset out;
  out.videos = load_feature_dir(dir / "features");
  out.annotations = load_annotations(dir / "annotations.txt", out.videos);
  return out;
}

}  // namespace tripnet::data
