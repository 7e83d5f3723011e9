#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "tripnet/fusion.hpp"
#include "tripnet/param_set.hpp"
#include "tripnet/policy.hpp"

namespace tripnet {

struct ModelConfig {
  fusion::Variant variant = fusion::Variant::kGatedAttention;
  std::size_t vocab_size = 1;
  std::size_t feature_dim = 16;
  std::size_t embed_dim = 64;
  std::size_t gru_hidden = 256;
  std::size_t fc_dim = 256;
  std::size_t lstm_hidden = 256;
};

/// Full agent: state processing (fusion) followed by the actor-critic.
struct Model {
  ModelConfig cfg;
  fusion::Fusion fusion;
  policy::PolicyNet policy;

  /// Registers every parameter in `params`.
  static Model create(nd::ParamSet& params, const ModelConfig& cfg);
  /// Builds the layout and a freshly initialised parameter set.
  static std::pair<Model, nd::ParamSet> init(const ModelConfig& cfg, std::uint64_t seed);
  /// Throws unless `params` has exactly the names and shapes this model needs.
  void check_compatible(const nd::ParamSet& params) const;
};

/// Everything needed to rebuild a trained agent next to its checkpoint.
struct RunManifest {
  ModelConfig model;
  std::int64_t window_frames = 1;
  std::int64_t t_max = 30;
  double beta = 0.01;
  bool terminal_reward = false;

  void save_file(const std::filesystem::path& path) const;
  static RunManifest load_file(const std::filesystem::path& path);
};

}  // namespace tripnet
