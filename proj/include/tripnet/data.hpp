#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tripnet::data {

/// Error in an input file or dataset reference; carries a location when known.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A video as a timeline of per-unit feature vectors.
///
/// Unit u covers frames [u * unit_len, min((u + 1) * unit_len, n_frames)).
/// Features are stored as float32 because that is the on-disk precision.
struct FeatureVideo {
  std::string id;
  std::int64_t n_frames = 0;
  double fps = 0.0;
  std::int64_t unit_len = 1;
  std::int64_t dim = 0;
  std::vector<float> features;  // units() x dim, row-major

  std::int64_t units() const {
    return dim == 0 ? 0 : static_cast<std::int64_t>(features.size()) / dim;
  }
  std::span<const float> unit(std::int64_t u) const {
    return {features.data() + u * dim, static_cast<std::size_t>(dim)};
  }
  /// Throws DataError when the header and payload disagree or any value is
  /// not finite.
  void validate() const;
};

struct Annotation {
  std::string video_id;
  std::string text;
  std::vector<std::string> tokens;
  std::int64_t gt_start = 0;  // frames, inclusive
  std::int64_t gt_end = 0;    // frames, exclusive
  double start_sec = 0.0;
  double end_sec = 0.0;

  std::int64_t length() const { return gt_end - gt_start; }
};

using VideoMap = std::map<std::string, FeatureVideo>;

/// Lowercases and splits on every non-alphanumeric character.
std::vector<std::string> tokenize(const std::string& text);

/// Token -> id map. Id 0 is reserved for unknown tokens; known tokens get
/// ids 1..n in lexicographic order, so ids depend only on the token set.
class Vocabulary {
 public:
  static constexpr std::int64_t kUnk = 0;
  static constexpr const char* kUnkToken = "<unk>";

  Vocabulary() = default;
  static Vocabulary build(std::span<const Annotation> train);
  static Vocabulary from_tokens(std::vector<std::string> tokens);

  std::int64_t id(const std::string& token) const;
  std::vector<std::int64_t> encode(std::span<const std::string> tokens) const;
  std::size_t size() const { return tokens_.size() + 1; }
  const std::vector<std::string>& tokens() const { return tokens_; }

  void save_file(const std::filesystem::path& path) const;
  static Vocabulary load_file(const std::filesystem::path& path);

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, std::int64_t> ids_;
};

// Feature binary: see docs/FORMATS.md.
void write_features(std::ostream& out, const FeatureVideo& video);
FeatureVideo read_features(std::istream& in);
void write_features_file(const std::filesystem::path& path, const FeatureVideo& video);
FeatureVideo read_features_file(const std::filesystem::path& path);
/// Loads every *.feat file in a directory, keyed by video id.
VideoMap load_feature_dir(const std::filesystem::path& dir);

// Annotation text: see docs/FORMATS.md.
std::vector<Annotation> parse_annotations(std::istream& in, const VideoMap& videos);
std::vector<Annotation> load_annotations(const std::filesystem::path& path,
                                         const VideoMap& videos);
void write_annotations(std::ostream& out, std::span<const Annotation> annotations);
void save_annotations(const std::filesystem::path& path,
                      std::span<const Annotation> annotations);

/// round(mean(gt_end - gt_start)), at least 1 frame.
std::int64_t mean_clip_length(std::span<const Annotation> train);

struct Split {
  std::vector<Annotation> train, val, test;
};

/// Seeded shuffle of the distinct video ids, cut by `fractions`; every
/// annotation follows its video.
Split split_fractional(std::span<const Annotation> annotations,
                       std::array<double, 3> fractions, std::uint64_t seed);

struct SyntheticSpec {
  std::int64_t num_videos = 200;
  std::int64_t n_frames = 200;
  double fps = 24.0;
  std::int64_t dim = 16;
  std::int64_t vocab_size = 32;
  std::int64_t clip_mean = 40;
  std::int64_t clip_jitter = 8;
  std::int64_t clips_per_video = 2;
  std::int64_t min_query_tokens = 2;
  std::int64_t max_query_tokens = 3;
  double signal_strength = 1.0;
  double noise_scale = 0.5;
  std::uint64_t seed = 7;

  void validate() const;
};

struct SyntheticDataset {
  VideoMap videos;
  std::vector<Annotation> annotations;
};

/// Name of synthetic token `i` ("w00", "w01", ...).
std::string synthetic_token(std::int64_t i);
/// Feature channel that a token drives in the synthetic generator.
std::int64_t token_channel(const std::string& token, std::int64_t dim);
/// Unit-norm direction a query's planted clip is shifted along.
std::vector<double> query_direction(std::span<const std::string> tokens,
                                    std::int64_t dim);

SyntheticDataset generate_synthetic(const SyntheticSpec& spec);

/// Writes features/<id>.feat and annotations.txt under `dir`.
void save_dataset(const std::filesystem::path& dir, const VideoMap& videos,
                  std::span<const Annotation> annotations);
SyntheticDataset load_dataset(const std::filesystem::path& dir);

}  // namespace tripnet::data
