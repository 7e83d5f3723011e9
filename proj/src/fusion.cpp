#include "tripnet/fusion.hpp"

#include <stdexcept>
#include <string>

namespace tripnet::fusion {

std::string_view variant_name(Variant v) {
  return v == Variant::kGatedAttention ? "ga" : "concat";
}

Variant parse_variant(std::string_view s) {
  if (s == "ga") return Variant::kGatedAttention;
  if (s == "concat") return Variant::kConcat;
  throw std::invalid_argument("unknown fusion variant '" + std::string(s) +
                              "' (expected ga or concat)");
}

Fusion Fusion::create(nd::ParamSet& params, const FusionConfig& cfg) {
  if (cfg.vocab_size < 1 || cfg.embed_dim < 1 || cfg.gru_hidden < 1 ||
      cfg.feature_dim < 1) {
    throw std::invalid_argument("fusion: all dimensions must be >= 1");
  }
  Fusion f;
  f.cfg = cfg;
  params.add("fusion.embed", {cfg.vocab_size, cfg.embed_dim});
  f.gru = nd::GruCell::create(params, "fusion.gru", cfg.embed_dim, cfg.gru_hidden);
  if (cfg.variant == Variant::kGatedAttention) {
    f.gate = nd::Linear::create(params, "fusion.gate", cfg.gru_hidden, cfg.feature_dim);
  } else {
    f.self_gate = nd::Linear::create(params, "fusion.self_gate", cfg.feature_dim,
                                     cfg.feature_dim);
    f.project = nd::Linear::create(params, "fusion.project",
                                   cfg.feature_dim + cfg.gru_hidden, cfg.feature_dim);
  }
  return f;
}

Fusion::Bound Fusion::bind(nd::Tape& tape, nd::ParamSet& params) const {
  Bound b;
  b.self = this;
  b.embed = tape.bind(params.at("fusion.embed"));
  b.gru = gru.bind(tape, params);
  if (cfg.variant == Variant::kGatedAttention) {
    b.gate = gate.bind(tape, params);
  } else {
    b.self_gate = self_gate.bind(tape, params);
    b.project = project.bind(tape, params);
  }
  return b;
}

nd::Var Fusion::Bound::encode_query(nd::Tape& tape,
                                    std::span<const std::int64_t> ids) const {
  if (ids.empty()) throw std::invalid_argument("encode_query: empty query");
  const auto vocab = static_cast<std::int64_t>(self->cfg.vocab_size);
  nd::Var h = tape.constant(std::vector<double>(self->cfg.gru_hidden, 0.0));
  for (std::int64_t id : ids) {
    const std::int64_t row = (id < 0 || id >= vocab) ? data::Vocabulary::kUnk : id;
    h = gru(tape, tape.row(embed, static_cast<std::size_t>(row)), h);
  }
  return h;
}

nd::Var Fusion::Bound::gated_fuse(nd::Tape& tape, nd::Var x_m, nd::Var x_l) const {
  if (self->cfg.variant != Variant::kGatedAttention) {
    throw std::logic_error("gated_fuse: model was built for the concat variant");
  }
  nd::Var att = tape.sigmoid(gate(tape, x_l));
  return tape.mul(att, x_m);
}

nd::Var Fusion::Bound::concat_fuse(nd::Tape& tape, nd::Var x_m, nd::Var x_l) const {
  if (self->cfg.variant != Variant::kConcat) {
    throw std::logic_error("concat_fuse: model was built for the gated variant");
  }
  nd::Var gated = tape.mul(tape.sigmoid(self_gate(tape, x_m)), x_m);
  return project(tape, tape.concat(gated, x_l));
}

nd::Var Fusion::Bound::fuse(nd::Tape& tape, nd::Var x_m, nd::Var x_l) const {
  return self->cfg.variant == Variant::kGatedAttention ? gated_fuse(tape, x_m, x_l)
                                                       : concat_fuse(tape, x_m, x_l);
}

std::vector<double> pool_window_features(const data::FeatureVideo& video,
                                         const env::Window& window) {
  const auto [lo, hi] = env::units_in_window(window, video.unit_len, video.n_frames);
  if (hi > video.units() || lo >= hi) {
    throw std::invalid_argument("pool_window_features: window overlaps no units");
  }
  std::vector<double> out(static_cast<std::size_t>(video.dim), 0.0);
  for (auto u = lo; u < hi; ++u) {
    const auto row = video.unit(u);
    for (std::size_t d = 0; d < out.size(); ++d) out[d] += row[d];
  }
  const double inv = 1.0 / static_cast<double>(hi - lo);
  for (double& x : out) x *= inv;
  return out;
}

}  // namespace tripnet::fusion
