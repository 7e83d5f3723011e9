#include "tripnet/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

namespace tripnet {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<double> parse_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const std::string t = trim(item);
      out.push_back(std::stod(t, &used));
      if (used != t.size()) throw std::invalid_argument(t);
    } catch (const std::exception&) {
      throw ConfigError("config key '" + key + "': expected comma-separated numbers, got '" +
                        text + "'");
    }
  }
  return out;
}

}  // namespace

Config Config::defaults() {
  Config c;
  c.values_ = {
      {"synthetic.num_videos", "200"},
      {"synthetic.n_frames", "200"},
      {"synthetic.fps", "24"},
      {"synthetic.dim", "16"},
      {"synthetic.vocab_size", "32"},
      {"synthetic.clip_mean", "40"},
      {"synthetic.clip_jitter", "8"},
      {"synthetic.clips_per_video", "2"},
      {"synthetic.min_query_tokens", "2"},
      {"synthetic.max_query_tokens", "3"},
      {"synthetic.signal_strength", "1.0"},
      {"synthetic.noise_scale", "0.5"},
      {"synthetic.seed", "7"},
      {"data.split", "0.5,0.25,0.25"},
      {"data.split_seed", "7"},
      {"model.variant", "ga"},
      {"model.embed_dim", "64"},
      {"model.gru_hidden", "256"},
      {"model.fc_dim", "256"},
      {"model.lstm_hidden", "256"},
      {"env.t_max", "30"},
      {"env.beta", "0.01"},
      {"env.terminal_reward", "false"},
      {"trainer.workers", "8"},
      {"trainer.lr", "0.0005"},
      {"trainer.gamma0", "0.5"},
      {"trainer.gamma1", "0.5"},
      {"trainer.discount", "0.99"},
      {"trainer.gae_lambda", "0.95"},
      {"trainer.clip_norm", "40"},
      {"trainer.total_episodes", "20000"},
      {"trainer.checkpoint_every", "0"},
      {"trainer.seed", "7"},
      {"eval.alphas", "0.3,0.5,0.7"},
      {"eval.mode", "greedy"},
      {"eval.split", "test"},
      {"eval.chance_samples", "10000"},
      {"eval.seed", "7"},
  };
  return c;
}

Config Config::parse(std::istream& in, const std::string& origin) {
  Config c = defaults();
  c.overlay(in, origin);
  return c;
}

void Config::overlay(std::istream& in, const std::string& origin) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
    }
    try {
      set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

void Config::overlay_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  overlay(in, path.string());
}

Config Config::load_file(const std::filesystem::path& path) {
  Config c = defaults();
  c.overlay_file(path);
  return c;
}

void Config::set(const std::string& key, const std::string& value) {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
  it->second = value;
}

void Config::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw ConfigError("override '" + assignment + "' is not key=value");
  }
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

const std::string& Config::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
  return it->second;
}

double Config::get_double(const std::string& key) const {
  const std::string& v = get(key);
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw ConfigError("config key '" + key + "': expected a number, got '" + v + "'");
}

std::int64_t Config::get_int(const std::string& key) const {
  const std::string& v = get(key);
  std::int64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError("config key '" + key + "': expected an integer, got '" + v + "'");
  }
  return out;
}

std::uint64_t Config::get_uint(const std::string& key) const {
  const std::int64_t v = get_int(key);
  if (v < 0) throw ConfigError("config key '" + key + "': must be >= 0");
  return static_cast<std::uint64_t>(v);
}

bool Config::get_bool(const std::string& key) const {
  const std::string& v = get(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config key '" + key + "': expected true/false, got '" + v + "'");
}

void Config::write(std::ostream& out) const {
  out << "# tripnet resolved configuration\n";
  for (const auto& [k, v] : values_) out << k << " = " << v << '\n';
}

void Config::save_file(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  write(out);
}

data::SyntheticSpec Config::synthetic_spec() const {
  data::SyntheticSpec s;
  s.num_videos = get_int("synthetic.num_videos");
  s.n_frames = get_int("synthetic.n_frames");
  s.fps = get_double("synthetic.fps");
  s.dim = get_int("synthetic.dim");
  s.vocab_size = get_int("synthetic.vocab_size");
  s.clip_mean = get_int("synthetic.clip_mean");
  s.clip_jitter = get_int("synthetic.clip_jitter");
  s.clips_per_video = get_int("synthetic.clips_per_video");
  s.min_query_tokens = get_int("synthetic.min_query_tokens");
  s.max_query_tokens = get_int("synthetic.max_query_tokens");
  s.signal_strength = get_double("synthetic.signal_strength");
  s.noise_scale = get_double("synthetic.noise_scale");
  s.seed = get_uint("synthetic.seed");
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return s;
}

std::array<double, 3> Config::split_fractions() const {
  const auto v = parse_list("data.split", get("data.split"));
  if (v.size() != 3) throw ConfigError("data.split: expected three fractions");
  double total = 0.0;
  for (double f : v) {
    if (f < 0.0) throw ConfigError("data.split: negative fraction");
    total += f;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError("data.split: fractions must sum to 1");
  return {v[0], v[1], v[2]};
}

trainer::TrainConfig Config::train_config() const {
  trainer::TrainConfig t;
  try {
    t.model.variant = fusion::parse_variant(get("model.variant"));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  auto dim = [&](const char* key) {
    const std::int64_t v = get_int(key);
    if (v < 1) throw ConfigError(std::string(key) + ": must be >= 1");
    return static_cast<std::size_t>(v);
  };
  t.model.embed_dim = dim("model.embed_dim");
  t.model.gru_hidden = dim("model.gru_hidden");
  t.model.fc_dim = dim("model.fc_dim");
  t.model.lstm_hidden = dim("model.lstm_hidden");
  t.hyper.t_max = get_int("env.t_max");
  t.hyper.beta = get_double("env.beta");
  t.terminal_reward = get_bool("env.terminal_reward");
  t.hyper.workers = get_int("trainer.workers");
  t.hyper.lr = get_double("trainer.lr");
  t.hyper.gamma0 = get_double("trainer.gamma0");
  t.hyper.gamma1 = get_double("trainer.gamma1");
  t.hyper.discount = get_double("trainer.discount");
  t.hyper.gae_lambda = get_double("trainer.gae_lambda");
  t.hyper.clip_norm = get_double("trainer.clip_norm");
  t.total_episodes = get_int("trainer.total_episodes");
  t.checkpoint_every = get_int("trainer.checkpoint_every");
  t.seed = get_uint("trainer.seed");
  try {
    t.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return t;
}

eval::EvalOptions Config::eval_options() const {
  eval::EvalOptions o;
  o.alphas = parse_list("eval.alphas", get("eval.alphas"));
  for (double a : o.alphas) {
    if (a < 0.0 || a > 1.0) throw ConfigError("eval.alphas: values must be in [0, 1]");
  }
  const std::string& mode = get("eval.mode");
  if (mode == "greedy") {
    o.mode = policy::SampleMode::kGreedy;
  } else if (mode == "sample") {
    o.mode = policy::SampleMode::kSample;
  } else {
    throw ConfigError("eval.mode: expected greedy or sample, got '" + mode + "'");
  }
  const std::string& split = get("eval.split");
  if (split != "train" && split != "val" && split != "test" && split != "all") {
    throw ConfigError("eval.split: expected train, val, test or all");
  }
  o.chance_samples = get_int("eval.chance_samples");
  o.seed = get_uint("eval.seed");
  return o;
}

}  // namespace tripnet
