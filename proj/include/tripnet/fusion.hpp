#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "tripnet/data.hpp"
#include "tripnet/env.hpp"
#include "tripnet/layers.hpp"

namespace tripnet::fusion {

enum class Variant { kGatedAttention, kConcat };

std::string_view variant_name(Variant v);
/// Accepts "ga" / "concat".
Variant parse_variant(std::string_view s);

struct FusionConfig {
  Variant variant = Variant::kGatedAttention;
  std::size_t vocab_size = 1;  // including the unknown-token slot
  std::size_t embed_dim = 64;
  std::size_t gru_hidden = 256;
  std::size_t feature_dim = 16;
};

/// Query encoder plus the video/query fusion for one variant.
///
/// Gated attention: att = sigmoid(W x_L + b), s = att * x_M.
/// Concat: x'_M = sigmoid(W_s x_M + b_s) * x_M, s = P [x'_M ; x_L] + b_p.
struct Fusion {
  FusionConfig cfg;
  nd::GruCell gru;
  nd::Linear gate;       // gated attention
  nd::Linear self_gate;  // concat
  nd::Linear project;    // concat

  static Fusion create(nd::ParamSet& params, const FusionConfig& cfg);

  struct Bound {
    const Fusion* self = nullptr;
    nd::Var embed;
    nd::GruCell::Bound gru;
    nd::Linear::Bound gate, self_gate, project;

    /// Final GRU hidden state over the embedded tokens. Ids outside the
    /// vocabulary are read as the unknown token.
    nd::Var encode_query(nd::Tape& tape, std::span<const std::int64_t> ids) const;
    nd::Var gated_fuse(nd::Tape& tape, nd::Var x_m, nd::Var x_l) const;
    nd::Var concat_fuse(nd::Tape& tape, nd::Var x_m, nd::Var x_l) const;
    nd::Var fuse(nd::Tape& tape, nd::Var x_m, nd::Var x_l) const;
  };
  Bound bind(nd::Tape& tape, nd::ParamSet& params) const;
};

/// Mean of the feature units overlapping the window.
std::vector<double> pool_window_features(const data::FeatureVideo& video,
                                         const env::Window& window);

}  // namespace tripnet::fusion
