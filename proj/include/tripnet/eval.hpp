#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "tripnet/data.hpp"
#include "tripnet/env.hpp"
#include "tripnet/model.hpp"
#include "tripnet/trainer.hpp"

namespace tripnet::eval {

struct EvalOptions {
  std::vector<double> alphas = {0.3, 0.5, 0.7};
  policy::SampleMode mode = policy::SampleMode::kGreedy;
  std::int64_t chance_samples = 10000;
  std::uint64_t seed = 7;
  /// Replaces the policy's action choice (scripted or random agents).
  trainer::ActionScript script;
};

struct EvalRecord {
  std::string video_id;
  std::string query;
  env::Window gt;
  env::Window prediction;
  double iou = 0.0;  // clamped
  double ceiling = 0.0;
  std::int64_t actions = 0;
  double frames_pct = 0.0;
  bool forced = false;
  double seconds = 0.0;
};

struct EvalReport {
  std::vector<double> alphas;
  std::vector<double> accuracy;         // IoU@alpha, R@1
  std::vector<double> ceiling_accuracy;  // fraction with ceiling >= alpha
  std::vector<double> chance_accuracy;   // random fixed-width placements
  double mean_iou = 0.0;
  double mean_ceiling = 0.0;
  double mean_frames_pct = 0.0;
  double mean_actions = 0.0;
  double mean_seconds = 0.0;
  double forced_fraction = 0.0;
  std::vector<EvalRecord> records;

  double accuracy_at(double alpha) const;
};

/// Best clamped IoU any width-X window inside [0, N] can reach against gt.
/// A window wider than the video is truncated to [0, N).
double oracle_ceiling(const env::Window& gt, std::int64_t window_frames,
                      std::int64_t n_frames);

struct Efficiency {
  double frames_pct = 0.0;  // mean of 100 * observed frames / N
  double avg_actions = 0.0; // Terminate included
};
Efficiency efficiency_metrics(std::span<const trainer::Trajectory> trajectories);

/// Fraction of uniformly random window placements (annotation drawn
/// uniformly, start uniform in [0, N - X]) with clamped IoU >= alpha.
std::vector<double> chance_baseline(std::span<const data::Annotation> annotations,
                                    const data::VideoMap& videos,
                                    std::int64_t window_frames,
                                    std::span<const double> alphas,
                                    std::int64_t samples, std::uint64_t seed);

/// One episode per annotation; a prediction is correct at alpha when its
/// clamped IoU reaches alpha.
EvalReport evaluate(const Model& model, nd::ParamSet& params,
                    const data::VideoMap& videos,
                    std::span<const data::Annotation> annotations,
                    const data::Vocabulary& vocab, std::int64_t window_frames,
                    const env::EnvConfig& env_cfg, const EvalOptions& opts = {});

void write_report(std::ostream& out, const EvalReport& report);
void write_records(std::ostream& out, const EvalReport& report);

struct Localization {
  env::Window window;
  double start_sec = 0.0;
  double end_sec = 0.0;
  env::Trace trace;
  bool forced = false;
};

/// Greedy episode for a free-text query with no ground truth.
Localization localize(const Model& model, nd::ParamSet& params,
                      const data::FeatureVideo& video, const std::string& query,
                      const data::Vocabulary& vocab, std::int64_t window_frames,
                      const env::EnvConfig& env_cfg);

}  // namespace tripnet::eval
