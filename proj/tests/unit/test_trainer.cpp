#include <gtest/gtest.h>

#include <random>

#include "tripnet/model.hpp"
#include "tripnet/trainer.hpp"

using namespace tripnet;
using env::ActionKind;
using env::Window;

namespace {

ModelConfig tiny_model(std::size_t vocab, std::size_t dim) {
  ModelConfig c;
  c.vocab_size = vocab;
  c.feature_dim = dim;
  c.embed_dim = 4;
  c.gru_hidden = 6;
  c.fc_dim = 8;
  c.lstm_hidden = 8;
  return c;
}

struct Fixture {
  data::SyntheticDataset ds;
  data::Vocabulary vocab;
  Fixture() {
    data::SyntheticSpec spec;
    spec.num_videos = 6;
    ds = data::generate_synthetic(spec);
    vocab = data::Vocabulary::build(ds.annotations);
  }
};

trainer::ActionScript always(ActionKind a) {
  return [a](std::int64_t, const policy::Probs&) { return std::optional<ActionKind>(a); };
}

}  // namespace

TEST(RunEpisode, ImmediateTerminateKeepsInitialWindow) {
  Fixture f;
  auto [model, params] = Model::init(tiny_model(f.vocab.size(), 16), 1);
  const auto& a = f.ds.annotations[0];
  std::mt19937_64 rng(1);
  trainer::EpisodeOptions opts;
  opts.script = always(ActionKind::kTerminate);
  const auto ep = trainer::run_episode(model, params, f.ds.videos.at(a.video_id),
                                       f.vocab.encode(a.tokens), Window{a.gt_start, a.gt_end},
                                       40, {}, rng, opts);
  EXPECT_EQ(ep.traj.size(), 1u);
  EXPECT_EQ(ep.traj.prediction, (Window{0, 40}));
  EXPECT_FALSE(ep.traj.forced);
  EXPECT_EQ(ep.log_probs.size(), 1u);
}

TEST(RunEpisode, ClampedScriptHitsCapWithInitialWindow) {
  Fixture f;
  auto [model, params] = Model::init(tiny_model(f.vocab.size(), 16), 1);
  const auto& a = f.ds.annotations[0];
  std::mt19937_64 rng(1);
  trainer::EpisodeOptions opts;
  opts.script = always(ActionKind::kBackJ);
  env::EnvConfig cfg;
  const auto ep = trainer::run_episode(model, params, f.ds.videos.at(a.video_id),
                                       f.vocab.encode(a.tokens), Window{a.gt_start, a.gt_end},
                                       40, cfg, rng, opts);
  EXPECT_EQ(ep.traj.size(), static_cast<std::size_t>(cfg.t_max));
  EXPECT_EQ(ep.traj.prediction, (Window{0, 40}));
  EXPECT_TRUE(ep.traj.forced);
}

TEST(RunEpisode, ReplayIsDeterministic) {
  Fixture f;
  auto [model, params] = Model::init(tiny_model(f.vocab.size(), 16), 2);
  const auto& a = f.ds.annotations[1];
  auto run = [&]() {
    std::mt19937_64 rng(99);
    return trainer::run_episode(model, params, f.ds.videos.at(a.video_id),
                                f.vocab.encode(a.tokens), Window{a.gt_start, a.gt_end}, 40,
                                {}, rng)
        .traj;
  };
  const auto x = run(), y = run();
  EXPECT_EQ(x.actions, y.actions);
  EXPECT_EQ(x.rewards, y.rewards);
  EXPECT_EQ(x.log_probs, y.log_probs);
  EXPECT_EQ(x.prediction, y.prediction);
}

TEST(RunEpisode, DimensionMismatchRejected) {
  Fixture f;
  auto [model, params] = Model::init(tiny_model(f.vocab.size(), 8), 2);
  const auto& a = f.ds.annotations[0];
  std::mt19937_64 rng(1);
  EXPECT_THROW(trainer::run_episode(model, params, f.ds.videos.at(a.video_id),
                                    f.vocab.encode(a.tokens), Window{a.gt_start, a.gt_end},
                                    40, {}, rng),
               std::invalid_argument);
}

TEST(WorkerUpdate, ZeroSignalLeavesParametersUnchanged) {
  // With gamma0 = 0, beta = 0 and a window that never moves, every reward,
  // value target and advantage is zero once the value head is zeroed.
  Fixture f;
  auto [model, global] = Model::init(tiny_model(f.vocab.size(), 16), 3);
  std::fill(global.at("policy.v.W").values.begin(), global.at("policy.v.W").values.end(), 0.0);
  std::fill(global.at("policy.v.b").values.begin(), global.at("policy.v.b").values.end(), 0.0);
  nd::ParamSet local = global.snapshot();
  const auto& a = f.ds.annotations[0];
  std::mt19937_64 rng(1);
  env::EnvConfig cfg;
  cfg.beta = 0.0;
  trainer::EpisodeOptions opts;
  opts.script = [](std::int64_t t, const policy::Probs&) {
    return std::optional<ActionKind>(t < 3 ? ActionKind::kBackJ : ActionKind::kTerminate);
  };
  auto ep = trainer::run_episode(model, local, f.ds.videos.at(a.video_id),
                                 f.vocab.encode(a.tokens), Window{a.gt_start, a.gt_end}, 40,
                                 cfg, rng, opts);
  policy::TrainHyper h;
  h.gamma0 = 0.0;
  const nd::ParamSet before = global.snapshot();
  const auto stats = trainer::worker_update(ep, local, global, h);
  EXPECT_TRUE(stats.applied);
  EXPECT_EQ(stats.total_loss, 0.0);
  for (const auto& [name, t] : global) EXPECT_EQ(t.values, before.at(name).values) << name;
}

TEST(WorkerUpdate, SingleUpdateMatchesManualSgdStep) {
  Fixture f;
  auto [model, global] = Model::init(tiny_model(f.vocab.size(), 16), 4);
  nd::ParamSet local = global.snapshot();
  nd::ParamSet manual = global.snapshot();
  const auto& a = f.ds.annotations[2];
  policy::TrainHyper h;
  h.lr = 0.01;

  std::mt19937_64 rng1(5), rng2(5);
  auto ep = trainer::run_episode(model, local, f.ds.videos.at(a.video_id),
                                 f.vocab.encode(a.tokens), Window{a.gt_start, a.gt_end}, 40,
                                 {}, rng1);
  trainer::worker_update(ep, local, global, h);

  auto ep2 = trainer::run_episode(model, manual, f.ds.videos.at(a.video_id),
                                  f.vocab.encode(a.tokens), Window{a.gt_start, a.gt_end}, 40,
                                  {}, rng2);
  const auto R = policy::discounted_returns(ep2.traj.rewards, h.discount);
  const auto A = policy::gae(ep2.traj.rewards, ep2.traj.values, h.discount, h.gae_lambda);
  nd::Tape& tape = ep2.tape;
  const nd::Var loss =
      tape.add(policy::policy_loss(tape, ep2.log_probs, A, ep2.entropies, h.gamma0),
               policy::value_loss(tape, R, ep2.values, h.gamma1));
  manual.zero_grad();
  tape.backward(loss);
  manual.clip_grad_norm(h.clip_norm);
  nd::sgd_step(manual, h.lr);
  for (const auto& [name, t] : global) {
    for (std::size_t i = 0; i < t.values.size(); ++i) {
      EXPECT_NEAR(t.values[i], manual.at(name).values[i], 1e-12) << name;
    }
  }
}

TEST(Train, SingleWorkerIsBitReproducible) {
  Fixture f;
  trainer::TrainConfig cfg;
  cfg.model = tiny_model(f.vocab.size(), 16);
  cfg.hyper.workers = 1;
  cfg.hyper.lr = 0.01;
  cfg.total_episodes = 10;
  trainer::TrainInputs in;
  in.videos = &f.ds.videos;
  in.train = f.ds.annotations;
  in.vocab = &f.vocab;
  in.window_frames = 40;
  const auto a = trainer::train(cfg, in);
  const auto b = trainer::train(cfg, in);
  ASSERT_EQ(a.log.size(), 10u);
  for (std::size_t i = 0; i < a.log.size(); ++i) {
    EXPECT_EQ(a.log[i].total_reward, b.log[i].total_reward);
    EXPECT_EQ(a.log[i].policy_loss, b.log[i].policy_loss);
    EXPECT_EQ(a.log[i].length, b.log[i].length);
  }
  for (const auto& [name, t] : a.params) EXPECT_EQ(t.values, b.params.at(name).values);
  EXPECT_EQ(a.params.version(), 10u);
}

TEST(Train, MultipleWorkersCompleteAllEpisodes) {
  Fixture f;
  trainer::TrainConfig cfg;
  cfg.model = tiny_model(f.vocab.size(), 16);
  cfg.hyper.workers = 3;
  cfg.total_episodes = 30;
  trainer::TrainInputs in;
  in.videos = &f.ds.videos;
  in.train = f.ds.annotations;
  in.vocab = &f.vocab;
  in.window_frames = 40;
  const auto r = trainer::train(cfg, in);
  EXPECT_EQ(r.log.size(), 30u);
  EXPECT_EQ(r.params.version(), 30u);
}

TEST(Train, InvalidInputsRejected) {
  Fixture f;
  trainer::TrainConfig cfg;
  cfg.model = tiny_model(f.vocab.size(), 16);
  trainer::TrainInputs in;
  in.videos = &f.ds.videos;
  in.vocab = &f.vocab;
  EXPECT_THROW(trainer::train(cfg, in), data::DataError);
  cfg.hyper.lr = -1.0;
  in.train = f.ds.annotations;
  EXPECT_THROW(trainer::train(cfg, in), std::invalid_argument);
}
