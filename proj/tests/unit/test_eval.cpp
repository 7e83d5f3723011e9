#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "tripnet/eval.hpp"
#include "tripnet/pipeline.hpp"

using namespace tripnet;
using env::ActionKind;
using env::Window;

namespace {

// Brute-force oracle: best clamped IoU over every integer placement of a
// width-min(X, N) window inside [0, N].
double ceiling_sweep(const Window& gt, std::int64_t x, std::int64_t n) {
  const std::int64_t w = std::min(x, n);
  double best = 0.0;
  for (std::int64_t s = 0; s + w <= n; ++s) {
    best = std::max(best, env::clamped_iou(Window{s, s + w}, gt));
  }
  return best;
}

pipeline::Experiment small_experiment() {
  data::SyntheticSpec spec;
  spec.num_videos = 12;
  return pipeline::prepare(data::generate_synthetic(spec), {0.5, 0.25, 0.25}, 7);
}

trainer::TrainConfig tiny_train_config() {
  trainer::TrainConfig c;
  c.model.embed_dim = 4;
  c.model.gru_hidden = 6;
  c.model.fc_dim = 8;
  c.model.lstm_hidden = 8;
  return c;
}

}  // namespace

TEST(OracleCeiling, WorkedExamples) {
  EXPECT_DOUBLE_EQ(eval::oracle_ceiling({100, 260}, 160, 1000), 1.0);
  EXPECT_DOUBLE_EQ(eval::oracle_ceiling({100, 180}, 160, 1000), 0.5);
  EXPECT_DOUBLE_EQ(eval::oracle_ceiling({100, 200}, 50, 1000), 0.5);
  EXPECT_DOUBLE_EQ(eval::oracle_ceiling({10, 40}, 160, 100), 0.3);
}

TEST(OracleCeiling, MatchesBruteForceSweep) {
  std::mt19937_64 rng(71);
  for (int c = 0; c < 1000; ++c) {
    const std::int64_t n = 10 + static_cast<std::int64_t>(rng() % 300);
    const std::int64_t x = 1 + static_cast<std::int64_t>(rng() % (n + 40));
    const std::int64_t g0 = static_cast<std::int64_t>(rng() % n);
    const Window gt{g0, g0 + 1 + static_cast<std::int64_t>(rng() % (n - g0))};
    EXPECT_NEAR(eval::oracle_ceiling(gt, x, n), ceiling_sweep(gt, x, n), 1e-12)
        << "N=" << n << " X=" << x << " gt=[" << gt.start << "," << gt.end << ")";
  }
}

TEST(OracleCeiling, InvalidInputsRejected) {
  EXPECT_THROW(eval::oracle_ceiling({0, 10}, 0, 100), std::invalid_argument);
  EXPECT_THROW(eval::oracle_ceiling({90, 110}, 10, 100), std::invalid_argument);
}

TEST(Efficiency, SingleTerminateOnLongVideo) {
  trainer::Trajectory t;
  t.actions = {ActionKind::kTerminate};
  t.n_frames = 1000;
  t.observed_frames = 160;
  const trainer::Trajectory ts[] = {t};
  const auto e = eval::efficiency_metrics(ts);
  EXPECT_DOUBLE_EQ(e.frames_pct, 16.0);
  EXPECT_DOUBLE_EQ(e.avg_actions, 1.0);
}

TEST(Efficiency, ImmediateTerminateEpisodeCountsInitialUnits) {
  data::FeatureVideo v;
  v.id = "v";
  v.n_frames = 1000;
  v.fps = 24.0;
  v.unit_len = 16;
  v.dim = 1;
  v.features.assign(63, 0.0f);
  auto s = env::init_episode(v, Window{0, 10}, 160);
  env::step(s, ActionKind::kTerminate, {});
  EXPECT_EQ(s.observed_frame_count(), 160);
}

TEST(Efficiency, VisitingEveryUnitIsFullCoverage) {
  data::FeatureVideo v;
  v.id = "v";
  v.n_frames = 200;
  v.fps = 24.0;
  v.unit_len = 16;
  v.dim = 1;
  v.features.assign(13, 0.0f);
  auto s = env::init_episode(v, Window{0, 10}, 40);
  env::EnvConfig cfg;
  for (int i = 0; i < 4; ++i) env::step(s, ActionKind::kFwdJ, cfg);
  EXPECT_EQ(s.observed_frame_count(), 200);
}

TEST(ChanceBaseline, MatchesExactEnumeration) {
  data::VideoMap vids;
  data::FeatureVideo v;
  v.id = "v";
  v.n_frames = 100;
  v.fps = 24.0;
  v.unit_len = 10;
  v.dim = 1;
  v.features.assign(10, 0.0f);
  vids["v"] = v;
  data::Annotation a;
  a.video_id = "v";
  a.gt_start = 30;
  a.gt_end = 50;
  const data::Annotation anns[] = {a};
  const double alphas[] = {0.5};
  std::int64_t hits = 0;
  for (std::int64_t s = 0; s + 20 <= 100; ++s) {
    hits += env::clamped_iou(Window{s, s + 20}, Window{30, 50}) >= 0.5;
  }
  const double exact = static_cast<double>(hits) / 81.0;
  const auto mc = eval::chance_baseline(anns, vids, 20, alphas, 200000, 3);
  EXPECT_NEAR(mc[0], exact, 0.005);
}

TEST(Evaluate, OracleScriptedAgentReachesCeiling) {
  auto exp = small_experiment();
  auto agent = pipeline::untrained_agent(exp, tiny_train_config());
  data::Annotation a = exp.all[0];
  const auto& v = exp.videos.at(a.video_id);
  const auto off = env::action_offsets(v.n_frames, v.fps);
  const std::int64_t moves = 2;
  a.gt_start = moves * off.sec;
  a.gt_end = a.gt_start + exp.window_frames;
  ASSERT_LE(a.gt_end, v.n_frames);
  eval::EvalOptions opts;
  opts.chance_samples = 10;
  opts.script = [moves](std::int64_t t, const policy::Probs&) {
    return std::optional<ActionKind>(t <= moves ? ActionKind::kFwdSec : ActionKind::kTerminate);
  };
  const data::Annotation one[] = {a};
  const auto rep = eval::evaluate(agent.model, agent.params, exp.videos, one, agent.vocab,
                                  exp.window_frames, agent.env_config(), opts);
  const auto& r = rep.records[0];
  EXPECT_EQ(r.prediction, (Window{a.gt_start, a.gt_end}));
  EXPECT_DOUBLE_EQ(r.iou, 1.0);
  EXPECT_DOUBLE_EQ(r.ceiling, 1.0);
  EXPECT_EQ(r.actions, moves + 1);
  for (std::size_t i = 0; i < rep.alphas.size(); ++i) {
    EXPECT_EQ(rep.accuracy[i], rep.ceiling_accuracy[i]);
  }
}

TEST(Evaluate, PredictionsNeverExceedCeiling) {
  auto exp = small_experiment();
  auto agent = pipeline::untrained_agent(exp, tiny_train_config());
  eval::EvalOptions opts;
  opts.mode = policy::SampleMode::kSample;
  opts.chance_samples = 100;
  const auto rep = pipeline::evaluate(agent, exp, "all", opts);
  ASSERT_EQ(rep.records.size(), exp.all.size());
  for (const auto& r : rep.records) EXPECT_LE(r.iou, r.ceiling + 1e-12);
  for (std::size_t i = 0; i < rep.alphas.size(); ++i) {
    EXPECT_LE(rep.accuracy[i], rep.ceiling_accuracy[i]);
  }
}

TEST(Evaluate, ReportsAndRecordsAreWritten) {
  auto exp = small_experiment();
  auto agent = pipeline::untrained_agent(exp, tiny_train_config());
  eval::EvalOptions opts;
  opts.chance_samples = 100;
  const auto rep = pipeline::evaluate(agent, exp, "test", opts);
  std::stringstream report, records;
  eval::write_report(report, rep);
  eval::write_records(records, rep);
  EXPECT_NE(report.str().find("IoU@alpha"), std::string::npos);
  std::string line;
  std::size_t n = 0;
  while (std::getline(records, line)) ++n;
  EXPECT_EQ(n, exp.split.test.size());
  EXPECT_THROW(rep.accuracy_at(0.9), std::out_of_range);
  EXPECT_GE(rep.accuracy_at(0.5), 0.0);
}

TEST(Evaluate, UnknownVideoIsDataError) {
  auto exp = small_experiment();
  auto agent = pipeline::untrained_agent(exp, tiny_train_config());
  data::Annotation a = exp.all[0];
  a.video_id = "missing";
  const data::Annotation one[] = {a};
  EXPECT_THROW(eval::evaluate(agent.model, agent.params, exp.videos, one, agent.vocab,
                              exp.window_frames, agent.env_config()),
               data::DataError);
}

TEST(Localize, NoGroundTruthTraceAndSeconds) {
  auto exp = small_experiment();
  auto agent = pipeline::untrained_agent(exp, tiny_train_config());
  const auto& v = exp.videos.begin()->second;
  const auto loc = eval::localize(agent.model, agent.params, v, "w01 w02", agent.vocab,
                                  exp.window_frames, agent.env_config());
  EXPECT_EQ(loc.window.width(), exp.window_frames);
  EXPECT_DOUBLE_EQ(loc.start_sec, static_cast<double>(loc.window.start) / v.fps);
  EXPECT_FALSE(loc.trace.steps.empty());
  EXPECT_TRUE(std::isnan(loc.trace.initial_iou));
  const auto again = eval::localize(agent.model, agent.params, v, "w01 w02", agent.vocab,
                                    exp.window_frames, agent.env_config());
  EXPECT_EQ(again.window, loc.window);
  EXPECT_THROW(eval::localize(agent.model, agent.params, v, " ,, ", agent.vocab,
                              exp.window_frames, agent.env_config()),
               std::invalid_argument);
}
