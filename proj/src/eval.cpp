#include "tripnet/eval.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <random>
#include <stdexcept>

#include <json.hpp>

namespace tripnet::eval {

double EvalReport::accuracy_at(double alpha) const {
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    if (std::abs(alphas[i] - alpha) < 1e-12) return accuracy[i];
  }
  throw std::out_of_range("EvalReport: alpha not evaluated");
}

double oracle_ceiling(const env::Window& gt, std::int64_t window_frames,
                      std::int64_t n_frames) {
  if (window_frames < 1) throw std::invalid_argument("oracle_ceiling: X must be >= 1");
  if (gt.start < 0 || gt.end > n_frames || gt.width() <= 0) {
    throw std::invalid_argument("oracle_ceiling: ground truth outside video");
  }
  const std::int64_t x = std::min(window_frames, n_frames);
  const std::int64_t g = gt.width();
  if (window_frames >= n_frames) {
    // Only one placement exists: the whole video.
    return static_cast<double>(g) / static_cast<double>(n_frames);
  }
  // A width-x window can always sit inside gt (x <= g) or cover it (x > g)
  // without leaving [0, N], so the ratio of lengths is attained.
  return static_cast<double>(std::min(x, g)) / static_cast<double>(std::max(x, g));
}

Efficiency efficiency_metrics(std::span<const trainer::Trajectory> trajectories) {
  Efficiency e;
  if (trajectories.empty()) return e;
  for (const auto& t : trajectories) {
    e.frames_pct += 100.0 * static_cast<double>(t.observed_frames) /
                    static_cast<double>(t.n_frames);
    e.avg_actions += static_cast<double>(t.size());
  }
  const auto n = static_cast<double>(trajectories.size());
  e.frames_pct /= n;
  e.avg_actions /= n;
  return e;
}

std::vector<double> chance_baseline(std::span<const data::Annotation> annotations,
                                    const data::VideoMap& videos,
                                    std::int64_t window_frames,
                                    std::span<const double> alphas,
                                    std::int64_t samples, std::uint64_t seed) {
  std::vector<double> hits(alphas.size(), 0.0);
  if (annotations.empty() || samples < 1) return hits;
  std::mt19937_64 rng(seed);
  for (std::int64_t s = 0; s < samples; ++s) {
    const auto& a = annotations[rng() % annotations.size()];
    const auto& v = videos.at(a.video_id);
    const std::int64_t x = std::min(window_frames, v.n_frames);
    const auto span = static_cast<std::uint64_t>(v.n_frames - x + 1);
    const auto start = static_cast<std::int64_t>(rng() % span);
    const double iou =
        env::clamped_iou(env::Window{start, start + x}, env::Window{a.gt_start, a.gt_end});
    for (std::size_t i = 0; i < alphas.size(); ++i) {
      if (iou >= alphas[i]) hits[i] += 1.0;
    }
  }
  for (double& h : hits) h /= static_cast<double>(samples);
  return hits;
}

EvalReport evaluate(const Model& model, nd::ParamSet& params,
                    const data::VideoMap& videos,
                    std::span<const data::Annotation> annotations,
                    const data::Vocabulary& vocab, std::int64_t window_frames,
                    const env::EnvConfig& env_cfg, const EvalOptions& opts) {
  if (annotations.empty()) throw data::DataError("evaluate: no annotations");
  for (const auto& a : annotations) {
    if (!videos.count(a.video_id)) {
      throw data::DataError("evaluate: unknown video '" + a.video_id + "'");
    }
  }

  EvalReport rep;
  rep.alphas = opts.alphas;
  rep.accuracy.assign(opts.alphas.size(), 0.0);
  rep.ceiling_accuracy.assign(opts.alphas.size(), 0.0);

  std::mt19937_64 rng(opts.seed);
  trainer::EpisodeOptions eo;
  eo.mode = opts.mode;
  eo.record_grad = false;
  eo.script = opts.script;

  std::vector<trainer::Trajectory> trajs;
  trajs.reserve(annotations.size());
  for (const auto& a : annotations) {
    const auto& video = videos.at(a.video_id);
    const auto ids = vocab.encode(a.tokens);
    const env::Window gt{a.gt_start, a.gt_end};
    auto ep = trainer::run_episode(model, params, video, ids, gt, window_frames, env_cfg,
                                   rng, eo);
    EvalRecord r;
    r.video_id = a.video_id;
    r.query = a.text;
    r.gt = gt;
    r.prediction = ep.traj.prediction;
    r.iou = env::clamped_iou(r.prediction, gt);
    r.ceiling = oracle_ceiling(gt, window_frames, video.n_frames);
    r.actions = static_cast<std::int64_t>(ep.traj.size());
    r.frames_pct = 100.0 * static_cast<double>(ep.traj.observed_frames) /
                   static_cast<double>(video.n_frames);
    r.forced = ep.traj.forced;
    r.seconds = ep.traj.forward_seconds;
    for (std::size_t i = 0; i < opts.alphas.size(); ++i) {
      if (r.iou >= opts.alphas[i]) rep.accuracy[i] += 1.0;
      if (r.ceiling >= opts.alphas[i]) rep.ceiling_accuracy[i] += 1.0;
    }
    rep.mean_iou += r.iou;
    rep.mean_ceiling += r.ceiling;
    rep.mean_seconds += r.seconds;
    rep.forced_fraction += r.forced ? 1.0 : 0.0;
    rep.records.push_back(std::move(r));
    trajs.push_back(std::move(ep.traj));
  }
  const auto n = static_cast<double>(annotations.size());
  for (double& a : rep.accuracy) a /= n;
  for (double& a : rep.ceiling_accuracy) a /= n;
  rep.mean_iou /= n;
  rep.mean_ceiling /= n;
  rep.mean_seconds /= n;
  rep.forced_fraction /= n;
  const Efficiency eff = efficiency_metrics(trajs);
  rep.mean_frames_pct = eff.frames_pct;
  rep.mean_actions = eff.avg_actions;
  rep.chance_accuracy = chance_baseline(annotations, videos, window_frames, opts.alphas,
                                        opts.chance_samples, opts.seed);
  return rep;
}

void write_report(std::ostream& out, const EvalReport& rep) {
  out << "annotations evaluated: " << rep.records.size() << '\n';
  out << std::fixed << std::setprecision(4);
  out << "alpha   IoU@alpha(R@1)   ceiling   chance\n";
  for (std::size_t i = 0; i < rep.alphas.size(); ++i) {
    out << std::setw(5) << rep.alphas[i] << "   " << std::setw(14) << rep.accuracy[i]
        << "   " << std::setw(7) << rep.ceiling_accuracy[i] << "   " << std::setw(6)
        << rep.chance_accuracy[i] << '\n';
  }
  out << "mean clamped IoU:        " << rep.mean_iou << '\n';
  out << "mean oracle ceiling:     " << rep.mean_ceiling << '\n';
  out << "mean % frames used:      " << rep.mean_frames_pct << '\n';
  out << "mean actions (incl. Terminate): " << rep.mean_actions << '\n';
  out << "episodes hitting step cap: " << rep.forced_fraction << '\n';
  out << "mean forward seconds/episode: " << std::setprecision(6) << rep.mean_seconds
      << '\n';
}

void write_records(std::ostream& out, const EvalReport& rep) {
  for (const auto& r : rep.records) {
    nlohmann::json j;
    j["video"] = r.video_id;
    j["query"] = r.query;
    j["gt"] = {r.gt.start, r.gt.end};
    j["prediction"] = {r.prediction.start, r.prediction.end};
    j["iou"] = r.iou;
    j["ceiling"] = r.ceiling;
    j["actions"] = r.actions;
    j["frames_pct"] = r.frames_pct;
    j["forced"] = r.forced;
    j["seconds"] = r.seconds;
    out << j.dump() << '\n';
  }
}

Localization localize(const Model& model, nd::ParamSet& params,
                      const data::FeatureVideo& video, const std::string& query,
                      const data::Vocabulary& vocab, std::int64_t window_frames,
                      const env::EnvConfig& env_cfg) {
  const auto tokens = data::tokenize(query);
  if (tokens.empty()) throw std::invalid_argument("localize: query has no tokens");
  const auto ids = vocab.encode(tokens);
  std::mt19937_64 rng(0);
  trainer::EpisodeOptions eo;
  eo.mode = policy::SampleMode::kGreedy;
  eo.record_grad = false;
  auto ep = trainer::run_episode(model, params, video, ids, std::nullopt, window_frames,
                                 env_cfg, rng, eo);
  Localization out;
  out.window = ep.traj.prediction;
  out.start_sec = static_cast<double>(out.window.start) / video.fps;
  out.end_sec = static_cast<double>(out.window.end) / video.fps;
  out.trace = ep.traj.trace();
  out.forced = ep.traj.forced;
  return out;
}

}  // namespace tripnet::eval
