#include <gtest/gtest.h>

#include <random>

#include "grad_cases.hpp"
#include "tripnet/fusion.hpp"

using namespace tripnet;
using nd::Tape;
using nd::Var;

namespace {

fusion::FusionConfig small_config(fusion::Variant v) {
  fusion::FusionConfig c;
  c.variant = v;
  c.vocab_size = 5;
  c.embed_dim = 3;
  c.gru_hidden = 4;
  c.feature_dim = 3;
  return c;
}

data::FeatureVideo make_video(std::int64_t n_frames, std::int64_t unit_len,
                              std::int64_t dim, std::vector<float> features) {
  data::FeatureVideo v;
  v.id = "v";
  v.n_frames = n_frames;
  v.fps = 24.0;
  v.unit_len = unit_len;
  v.dim = dim;
  v.features = std::move(features);
  return v;
}


}  // namespace

TEST(Fusion, VariantNamesRoundTrip) {
  EXPECT_EQ(fusion::parse_variant("ga"), fusion::Variant::kGatedAttention);
  EXPECT_EQ(fusion::parse_variant("concat"), fusion::Variant::kConcat);
  EXPECT_EQ(fusion::variant_name(fusion::Variant::kConcat), "concat");
  EXPECT_THROW(fusion::parse_variant("sum"), std::invalid_argument);
}

TEST(Fusion, ZeroParametersEncodeToZero) {
  nd::ParamSet p;
  const auto f = fusion::Fusion::create(p, small_config(fusion::Variant::kGatedAttention));
  Tape t;
  const std::vector<std::int64_t> ids = {1, 2, 3};
  const Var x_l = f.bind(t, p).encode_query(t, ids);
  for (double v : t.value(x_l)) EXPECT_DOUBLE_EQ(v, 0.0);
}

TEST(Fusion, EncodingIsDeterministicAndMapsUnknownIds) {
  nd::ParamSet p;
  const auto f = fusion::Fusion::create(p, small_config(fusion::Variant::kGatedAttention));
  std::mt19937_64 rng(4);
  check::fill_uniform(p, rng, 1.0);
  Tape t;
  const auto b = f.bind(t, p);
  const std::vector<std::int64_t> ids = {2, 3};
  const std::vector<double> first = t.value(b.encode_query(t, ids));
  EXPECT_EQ(first, t.value(b.encode_query(t, ids)));
  const std::vector<std::int64_t> oov = {99, 3};
  const std::vector<std::int64_t> unk = {0, 3};
  const std::vector<double> mapped = t.value(b.encode_query(t, oov));
  EXPECT_EQ(mapped, t.value(b.encode_query(t, unk)));
}

TEST(Fusion, ZeroGateGivesHalfOfClipFeatures) {
  nd::ParamSet p;
  const auto f = fusion::Fusion::create(p, small_config(fusion::Variant::kGatedAttention));
  Tape t;
  const auto b = f.bind(t, p);
  const Var x_m = t.constant(std::vector<double>{2, -4, 1});
  const Var x_l = t.constant(std::vector<double>{1, 1, 1, 1});
  EXPECT_EQ(t.value(b.gated_fuse(t, x_m, x_l)), (std::vector<double>{1, -2, 0.5}));
}

TEST(Fusion, ZeroClipFeaturesGiveZeroStateForAnyQuery) {
  nd::ParamSet p;
  const auto f = fusion::Fusion::create(p, small_config(fusion::Variant::kGatedAttention));
  std::mt19937_64 rng(5);
  check::fill_uniform(p, rng, 2.0);
  Tape t;
  const auto b = f.bind(t, p);
  const Var s = b.gated_fuse(t, t.constant(std::vector<double>(3, 0.0)),
                             t.constant(check::random_vector(4, rng)));
  for (double v : t.value(s)) EXPECT_DOUBLE_EQ(v, 0.0);
}

TEST(Fusion, ConcatWithZeroParametersGivesZero) {
  nd::ParamSet p;
  const auto f = fusion::Fusion::create(p, small_config(fusion::Variant::kConcat));
  Tape t;
  const auto b = f.bind(t, p);
  const Var s = b.concat_fuse(t, t.constant(std::vector<double>{1, 2, 3}),
                              t.constant(std::vector<double>{1, 1, 1, 1}));
  for (double v : t.value(s)) EXPECT_DOUBLE_EQ(v, 0.0);
}

TEST(Fusion, ConcatIdentityProjectionGivesHalfOfClipFeatures) {
  nd::ParamSet p;
  const auto f = fusion::Fusion::create(p, small_config(fusion::Variant::kConcat));
  auto& w = p.at("fusion.project.W");  // [3 + 4, 3]
  for (std::size_t i = 0; i < 3; ++i) w.values[i * 3 + i] = 1.0;
  Tape t;
  const auto b = f.bind(t, p);
  const Var s = b.concat_fuse(t, t.constant(std::vector<double>{2, -4, 1}),
                              t.constant(std::vector<double>{5, 6, 7, 8}));
  EXPECT_EQ(t.value(s), (std::vector<double>{1, -2, 0.5}));
}

TEST(Fusion, WrongVariantCallRejected) {
  nd::ParamSet p;
  const auto f = fusion::Fusion::create(p, small_config(fusion::Variant::kConcat));
  Tape t;
  const auto b = f.bind(t, p);
  EXPECT_THROW(b.gated_fuse(t, t.constant(std::vector<double>(3, 0.0)),
                            t.constant(std::vector<double>(4, 0.0))),
               std::logic_error);
}

TEST(Fusion, GatedGradientsMatchFiniteDifferences) {
  const auto r = check::gradient_cases(check::Component::kGatedFusion, 20, 404);
  EXPECT_LT(r.max_rel_error, 1e-4) << r.worst;
}

TEST(Fusion, ConcatGradientsMatchFiniteDifferences) {
  const auto r = check::gradient_cases(check::Component::kConcatFusion, 20, 505);
  EXPECT_LT(r.max_rel_error, 1e-4) << r.worst;
}

TEST(Pooling, SingleUnitWindowReturnsThatUnit) {
  const auto v = make_video(48, 16, 2, {1, 2, 3, 4, 5, 6});
  EXPECT_EQ(fusion::pool_window_features(v, {16, 32}), (std::vector<double>{3, 4}));
}

TEST(Pooling, TwoUnitsAverage) {
  const auto v = make_video(48, 16, 2, {1, 2, 3, 4, 5, 6});
  EXPECT_EQ(fusion::pool_window_features(v, {20, 40}), (std::vector<double>{4, 5}));
}

TEST(Pooling, ConstantVideoIsPositionIndependent) {
  const auto v = make_video(100, 10, 2, std::vector<float>(20, 1.5f));
  for (std::int64_t s = 0; s + 30 <= 100; s += 7) {
    EXPECT_EQ(fusion::pool_window_features(v, {s, s + 30}), (std::vector<double>{1.5, 1.5}));
  }
}

TEST(Pooling, UnitsOutsideWindowDoNotMatter) {
  std::mt19937_64 rng(6);
  std::vector<float> f(10 * 3);
  for (float& x : f) x = static_cast<float>(check::random_vector(1, rng)[0]);
  auto v = make_video(100, 10, 3, f);
  const auto before = fusion::pool_window_features(v, {30, 55});
  // Swap units 0 and 9, both outside [30, 55).
  for (int d = 0; d < 3; ++d) std::swap(v.features[d], v.features[27 + d]);
  EXPECT_EQ(fusion::pool_window_features(v, {30, 55}), before);
}
