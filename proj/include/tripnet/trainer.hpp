#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "tripnet/data.hpp"
#include "tripnet/env.hpp"
#include "tripnet/model.hpp"
#include "tripnet/policy.hpp"

namespace tripnet::trainer {

/// Per-episode record of everything the losses and the evaluation need.
struct Trajectory {
  std::vector<std::vector<double>> states;  // s_t fed to the policy
  std::vector<env::ActionKind> actions;
  std::vector<double> rewards;
  std::vector<double> values;
  std::vector<double> log_probs;
  std::vector<double> entropies;
  std::vector<env::Window> windows;  // after each step
  std::vector<double> ious;          // signed, after each step

  env::Window initial;
  double initial_iou = 0.0;
  env::Window prediction;
  bool forced = false;
  bool truncated = false;
  std::int64_t n_frames = 0;
  std::int64_t observed_frames = 0;
  std::vector<std::int64_t> observed_units;
  /// Feature pooling plus network forward time.
  double forward_seconds = 0.0;

  std::size_t size() const { return actions.size(); }
  double total_reward() const;
  env::Trace trace() const;
};

/// A finished episode together with the tape that produced it.
struct Episode {
  Trajectory traj;
  nd::Tape tape;
  std::vector<nd::Var> log_probs;
  std::vector<nd::Var> entropies;
  std::vector<nd::Var> values;
};

/// Optional override of the policy's choice at step t (1-based). Returning
/// nullopt falls back to the policy.
using ActionScript =
    std::function<std::optional<env::ActionKind>(std::int64_t t, const policy::Probs&)>;

struct EpisodeOptions {
  policy::SampleMode mode = policy::SampleMode::kSample;
  /// Record backward closures. Off for evaluation.
  bool record_grad = true;
  ActionScript script;
};

/// init_episode, then {pool, fuse, policy_forward, sample, step} until done.
/// The tape binds `params`, so gradients from the episode land there.
Episode run_episode(const Model& model, nd::ParamSet& params,
                    const data::FeatureVideo& video,
                    std::span<const std::int64_t> token_ids,
                    std::optional<env::Window> gt, std::int64_t window_frames,
                    const env::EnvConfig& env_cfg, std::mt19937_64& rng,
                    const EpisodeOptions& opts = {});

struct UpdateStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double total_loss = 0.0;
  double grad_norm = 0.0;
  std::uint64_t version = 0;
  bool applied = false;
};

/// Computes returns, GAE and the combined loss on the episode's tape, back-
/// propagates into `local`, clips, and applies the gradients to `global`.
/// Non-finite losses or gradients skip the update and are reported on stderr.
UpdateStats worker_update(Episode& episode, nd::ParamSet& local, nd::ParamSet& global,
                          const policy::TrainHyper& hyper);

struct TrainConfig {
  ModelConfig model;
  policy::TrainHyper hyper;
  bool terminal_reward = false;
  std::int64_t total_episodes = 20000;
  std::int64_t checkpoint_every = 0;  // 0: final checkpoint only
  std::uint64_t seed = 7;
  /// Where checkpoints and train_log.jsonl go; empty keeps everything in memory.
  std::filesystem::path out_dir;

  void validate() const;
  env::EnvConfig env_config() const;
};

struct TrainLogRecord {
  std::int64_t episode = 0;
  std::int64_t worker = 0;
  double iou = 0.0;  // clamped, final window
  std::int64_t length = 0;
  double total_reward = 0.0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  std::uint64_t version = 0;
  bool forced = false;
};

void write_log_record(std::ostream& out, const TrainLogRecord& r);

struct TrainInputs {
  const data::VideoMap* videos = nullptr;
  std::span<const data::Annotation> train;
  const data::Vocabulary* vocab = nullptr;
  std::int64_t window_frames = 1;
};

struct TrainResult {
  nd::ParamSet params;
  std::vector<TrainLogRecord> log;
  std::filesystem::path final_checkpoint;
};

/// A3C: `hyper.workers` threads each snapshot the global parameters, run an
/// episode, and apply its gradients at episode end. Bit-reproducible only for
/// one worker.
TrainResult train(const TrainConfig& cfg, const TrainInputs& inputs,
                  std::function<void(const TrainLogRecord&)> on_episode = {});

}  // namespace tripnet::trainer
