#include "tripnet/pipeline.hpp"

#include <memory>
#include <stdexcept>

namespace tripnet::pipeline {

std::span<const data::Annotation> Experiment::annotations(const std::string& name) const {
  if (name == "train") return split.train;
  if (name == "val") return split.val;
  if (name == "test") return split.test;
  if (name == "all") return all;
  throw std::invalid_argument("unknown split '" + name + "'");
}

Experiment prepare(data::SyntheticDataset dataset, std::array<double, 3> fractions,
                   std::uint64_t split_seed) {
  Experiment exp;
  exp.videos = std::move(dataset.videos);
  exp.all = std::move(dataset.annotations);
  if (exp.videos.empty()) throw data::DataError("dataset has no videos");
  exp.feature_dim = exp.videos.begin()->second.dim;
  for (const auto& [id, v] : exp.videos) {
    if (v.dim != exp.feature_dim) {
      throw data::DataError("video '" + id + "' has feature dimension " +
                            std::to_string(v.dim) + ", expected " +
                            std::to_string(exp.feature_dim));
    }
  }
  exp.split = data::split_fractional(exp.all, fractions, split_seed);
  if (exp.split.train.empty()) throw data::DataError("training split is empty");
  exp.vocab = data::Vocabulary::build(exp.split.train);
  exp.window_frames = data::mean_clip_length(exp.split.train);
  return exp;
}

env::EnvConfig Agent::env_config() const {
  env::EnvConfig e;
  e.t_max = manifest.t_max;
  e.beta = manifest.beta;
  e.terminal_reward = manifest.terminal_reward;
  return e;
}

namespace {

RunManifest make_manifest(const Experiment& exp, const trainer::TrainConfig& cfg) {
  RunManifest m;
  m.model = cfg.model;
  m.model.vocab_size = exp.vocab.size();
  m.model.feature_dim = static_cast<std::size_t>(exp.feature_dim);
  m.window_frames = exp.window_frames;
  m.t_max = cfg.hyper.t_max;
  m.beta = cfg.hyper.beta;
  m.terminal_reward = cfg.terminal_reward;
  return m;
}

}  // namespace

TrainedAgent train_agent(const Experiment& exp, trainer::TrainConfig cfg) {
  const RunManifest manifest = make_manifest(exp, cfg);
  cfg.model = manifest.model;
  if (!cfg.out_dir.empty()) {
    std::filesystem::create_directories(cfg.out_dir);
    exp.vocab.save_file(cfg.out_dir / "vocab.txt");
    manifest.save_file(cfg.out_dir / "run.json");
  }
  trainer::TrainInputs in;
  in.videos = &exp.videos;
  in.train = exp.split.train;
  in.vocab = &exp.vocab;
  in.window_frames = exp.window_frames;
  auto result = trainer::train(cfg, in);

  nd::ParamSet layout;
  Model model = Model::create(layout, manifest.model);
  return TrainedAgent{Agent{model, std::move(result.params), exp.vocab, manifest},
                      std::move(result.log)};
}

Agent untrained_agent(const Experiment& exp, const trainer::TrainConfig& cfg) {
  const RunManifest manifest = make_manifest(exp, cfg);
  auto [model, params] = Model::init(manifest.model, cfg.seed);
  return Agent{model, std::move(params), exp.vocab, manifest};
}

Agent load_agent(const std::filesystem::path& run_dir,
                 const std::filesystem::path& checkpoint) {
  for (const char* name : {"run.json", "vocab.txt"}) {
    if (!std::filesystem::exists(run_dir / name)) {
      throw data::DataError("run directory " + run_dir.string() + " has no " + name);
    }
  }
  const std::filesystem::path ckpt =
      checkpoint.empty() ? run_dir / "checkpoint_final.bin" : checkpoint;
  if (!std::filesystem::exists(ckpt)) {
    throw data::DataError("checkpoint " + ckpt.string() + " does not exist");
  }
  Agent a;
  a.manifest = RunManifest::load_file(run_dir / "run.json");
  a.vocab = data::Vocabulary::load_file(run_dir / "vocab.txt");
  a.params = nd::ParamSet::load_file(ckpt);
  nd::ParamSet layout;
  a.model = Model::create(layout, a.manifest.model);
  a.model.check_compatible(a.params);
  return a;
}

eval::EvalReport evaluate(Agent& agent, const Experiment& exp, const std::string& split,
                          const eval::EvalOptions& opts) {
  return eval::evaluate(agent.model, agent.params, exp.videos, exp.annotations(split),
                        agent.vocab, agent.manifest.window_frames, agent.env_config(),
                        opts);
}

trainer::ActionScript uniform_random_script(std::uint64_t seed) {
  auto rng = std::make_shared<std::mt19937_64>(seed);
  return [rng](std::int64_t, const policy::Probs&) -> std::optional<env::ActionKind> {
    std::uniform_int_distribution<int> pick(0, env::kNumActions - 1);
    return static_cast<env::ActionKind>(pick(*rng));
  };
}

}  // namespace tripnet::pipeline
