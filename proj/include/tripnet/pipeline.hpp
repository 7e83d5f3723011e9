#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>

#include "tripnet/data.hpp"
#include "tripnet/eval.hpp"
#include "tripnet/model.hpp"
#include "tripnet/trainer.hpp"

namespace tripnet::pipeline {

/// A dataset cut into splits, with the vocabulary and window width derived
/// from the training split.
struct Experiment {
  data::VideoMap videos;
  std::vector<data::Annotation> all;
  data::Split split;
  data::Vocabulary vocab;
  std::int64_t window_frames = 1;
  std::int64_t feature_dim = 0;

  /// "train", "val", "test" or "all".
  std::span<const data::Annotation> annotations(const std::string& name) const;
};

Experiment prepare(data::SyntheticDataset dataset, std::array<double, 3> fractions,
                   std::uint64_t split_seed);

struct Agent {
  Model model;
  nd::ParamSet params;
  data::Vocabulary vocab;
  RunManifest manifest;

  env::EnvConfig env_config() const;
};

struct TrainedAgent {
  Agent agent;
  std::vector<trainer::TrainLogRecord> log;
};

/// Fills in the data-dependent model sizes and trains. With a non-empty
/// `cfg.out_dir`, also writes vocab.txt and run.json there.
TrainedAgent train_agent(const Experiment& exp, trainer::TrainConfig cfg);

/// A freshly initialised (untrained) agent for `exp`.
Agent untrained_agent(const Experiment& exp, const trainer::TrainConfig& cfg);

/// Reads run.json, vocab.txt and a checkpoint (checkpoint_final.bin when
/// `checkpoint` is empty) from a training output directory.
Agent load_agent(const std::filesystem::path& run_dir,
                 const std::filesystem::path& checkpoint = {});

eval::EvalReport evaluate(Agent& agent, const Experiment& exp, const std::string& split,
                          const eval::EvalOptions& opts);

/// Always picks an action uniformly at random, ignoring the network.
trainer::ActionScript uniform_random_script(std::uint64_t seed);

}  // namespace tripnet::pipeline
