#include "tripnet/model.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace tripnet {

Model Model::create(nd::ParamSet& params, const ModelConfig& cfg) {
  Model m;
  m.cfg = cfg;
  fusion::FusionConfig fc;
  fc.variant = cfg.variant;
  fc.vocab_size = cfg.vocab_size;
  fc.embed_dim = cfg.embed_dim;
  fc.gru_hidden = cfg.gru_hidden;
  fc.feature_dim = cfg.feature_dim;
  m.fusion = fusion::Fusion::create(params, fc);
  policy::PolicyConfig pc;
  pc.feature_dim = cfg.feature_dim;
  pc.fc_dim = cfg.fc_dim;
  pc.lstm_hidden = cfg.lstm_hidden;
  m.policy = policy::PolicyNet::create(params, pc);
  return m;
}

std::pair<Model, nd::ParamSet> Model::init(const ModelConfig& cfg, std::uint64_t seed) {
  nd::ParamSet params;
  Model m = create(params, cfg);
  nd::init_uniform_fan_in(params, seed, {{"fusion.embed", 1.0}});
  return {std::move(m), std::move(params)};
}

void Model::check_compatible(const nd::ParamSet& params) const {
  nd::ParamSet layout;
  create(layout, cfg);
  if (layout.size() != params.size()) {
    throw std::invalid_argument("checkpoint has " + std::to_string(params.size()) +
                                " parameters, model expects " +
                                std::to_string(layout.size()));
  }
  for (const auto& [name, t] : layout) {
    if (!params.contains(name)) {
      throw std::invalid_argument("checkpoint is missing parameter '" + name + "'");
    }
    if (params.at(name).shape != t.shape) {
      throw std::invalid_argument("checkpoint parameter '" + name + "' has shape " +
                                  nd::shape_str(params.at(name).shape) +
                                  ", model expects " + nd::shape_str(t.shape));
    }
  }
}

void RunManifest::save_file(const std::filesystem::path& path) const {
  nlohmann::json j;
  j["format"] = "tripnet-run v1";
  j["variant"] = std::string(fusion::variant_name(model.variant));
  j["vocab_size"] = model.vocab_size;
  j["feature_dim"] = model.feature_dim;
  j["embed_dim"] = model.embed_dim;
  j["gru_hidden"] = model.gru_hidden;
  j["fc_dim"] = model.fc_dim;
  j["lstm_hidden"] = model.lstm_hidden;
  j["window_frames"] = window_frames;
  j["t_max"] = t_max;
  j["beta"] = beta;
  j["terminal_reward"] = terminal_reward;
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

RunManifest RunManifest::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open run manifest " + path.string());
  nlohmann::json j;
  try {
    in >> j;
    if (j.at("format") != "tripnet-run v1") {
      throw std::runtime_error("unsupported run manifest format");
    }
    RunManifest m;
    m.model.variant = fusion::parse_variant(j.at("variant").get<std::string>());
    m.model.vocab_size = j.at("vocab_size");
    m.model.feature_dim = j.at("feature_dim");
    m.model.embed_dim = j.at("embed_dim");
    m.model.gru_hidden = j.at("gru_hidden");
    m.model.fc_dim = j.at("fc_dim");
    m.model.lstm_hidden = j.at("lstm_hidden");
    m.window_frames = j.at("window_frames");
    m.t_max = j.at("t_max");
    m.beta = j.at("beta");
    m.terminal_reward = j.at("terminal_reward");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

}  // namespace tripnet
