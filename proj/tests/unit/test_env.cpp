#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "tripnet/env.hpp"

using namespace tripnet;
using env::ActionKind;
using env::Window;

namespace {

data::FeatureVideo blank_video(std::int64_t n_frames, double fps = 24.0,
                               std::int64_t unit_len = 16) {
  data::FeatureVideo v;
  v.id = "v";
  v.n_frames = n_frames;
  v.fps = fps;
  v.unit_len = unit_len;
  v.dim = 1;
  v.features.assign(static_cast<std::size_t>((n_frames + unit_len - 1) / unit_len), 0.0f);
  return v;
}

// Frame-counting oracle for the signed IoU of half-open intervals.
double iou_oracle(const Window& a, const Window& b) {
  std::int64_t inter = 0, uni = 0;
  const std::int64_t lo = std::min(a.start, b.start), hi = std::max(a.end, b.end);
  for (std::int64_t f = lo; f < hi; ++f) {
    const bool in_a = f >= a.start && f < a.end;
    const bool in_b = f >= b.start && f < b.end;
    inter += in_a && in_b;
    uni += in_a || in_b;
  }
  if (inter > 0) return static_cast<double>(inter) / static_cast<double>(uni);
  const std::int64_t gap = std::max(a.start, b.start) - std::min(a.end, b.end);
  return -static_cast<double>(gap) / static_cast<double>(hi - lo);
}

}  // namespace

TEST(Offsets, WorkedExamples) {
  auto o = env::action_offsets(1000, 24.0);
  EXPECT_EQ(o.h, 100);
  EXPECT_EQ(o.j, 200);
  EXPECT_EQ(o.sec, 24);
  o = env::action_offsets(7, 24.0);
  EXPECT_EQ(o.h, 1);
  EXPECT_EQ(o.j, 1);
  EXPECT_EQ(o.sec, 24);
  o = env::action_offsets(480, 24.0);
  EXPECT_EQ(o.h, 48);
  EXPECT_EQ(o.j, 96);
}

TEST(Offsets, ShiftSigns) {
  const env::ActionOffsets o{10, 20, 3};
  EXPECT_EQ(env::action_shift(ActionKind::kBackJ, o), -20);
  EXPECT_EQ(env::action_shift(ActionKind::kBackH, o), -10);
  EXPECT_EQ(env::action_shift(ActionKind::kBackSec, o), -3);
  EXPECT_EQ(env::action_shift(ActionKind::kFwdSec, o), 3);
  EXPECT_EQ(env::action_shift(ActionKind::kFwdH, o), 10);
  EXPECT_EQ(env::action_shift(ActionKind::kFwdJ, o), 20);
  EXPECT_EQ(env::action_shift(ActionKind::kTerminate, o), 0);
}

TEST(Actions, NamesRoundTrip) {
  for (ActionKind a : env::kAllActions) EXPECT_EQ(env::parse_action(env::action_name(a)), a);
  EXPECT_FALSE(env::parse_action("Jump").has_value());
}

TEST(InitEpisode, WindowStartsAtZero) {
  auto s = env::init_episode(blank_video(1000), Window{10, 20}, 160);
  EXPECT_EQ(s.window, (Window{0, 160}));
  EXPECT_EQ(s.t, 0);
  EXPECT_FALSE(s.done);
  EXPECT_FALSE(s.truncated);
  EXPECT_EQ(s.observed_unit_count(), 10);
}

TEST(InitEpisode, ShortVideoTruncatesWindow) {
  auto s = env::init_episode(blank_video(100), Window{10, 20}, 160);
  EXPECT_EQ(s.window, (Window{0, 100}));
  EXPECT_TRUE(s.truncated);
}

TEST(InitEpisode, InvalidInputsRejected) {
  EXPECT_THROW(env::init_episode(blank_video(100), Window{10, 20}, 0), std::invalid_argument);
  EXPECT_THROW(env::init_episode(blank_video(100), Window{10, 200}, 10),
               std::invalid_argument);
}

TEST(Step, JumpForward) {
  auto s = env::init_episode(blank_video(1000), Window{500, 580}, 80);
  const auto r = env::step(s, ActionKind::kFwdJ, {});
  EXPECT_EQ(s.window, (Window{200, 280}));
  EXPECT_FALSE(r.clamped);
  EXPECT_EQ(s.t, 1);
}

TEST(Step, ClampAtStartLeavesWindow) {
  auto s = env::init_episode(blank_video(1000), Window{500, 580}, 80);
  const auto r = env::step(s, ActionKind::kBackH, {});
  EXPECT_EQ(s.window, (Window{0, 80}));
  EXPECT_TRUE(r.clamped);
}

TEST(Step, ClampAtEndLeavesWindow) {
  auto s = env::init_episode(blank_video(1000), Window{0, 80}, 80);
  s.window = Window{920, 1000};
  const auto r = env::step(s, ActionKind::kFwdSec, {});
  EXPECT_EQ(s.window, (Window{920, 1000}));
  EXPECT_TRUE(r.clamped);
}

TEST(Step, ClampedMoveRewardIsStepPenalty) {
  auto s = env::init_episode(blank_video(1000), Window{500, 580}, 80);
  for (int i = 0; i < 4; ++i) env::step(s, ActionKind::kBackJ, {});
  const auto r = env::step(s, ActionKind::kBackJ, {});
  EXPECT_EQ(s.t, 5);
  EXPECT_NEAR(r.reward, -0.05, 1e-12);
}

TEST(Step, TerminateEndsEpisode) {
  auto s = env::init_episode(blank_video(1000), Window{0, 80}, 80);
  const auto r = env::step(s, ActionKind::kTerminate, {});
  EXPECT_TRUE(r.done);
  EXPECT_TRUE(s.done);
  EXPECT_FALSE(s.forced);
  EXPECT_EQ(s.window, (Window{0, 80}));
  EXPECT_NEAR(r.reward, -0.01, 1e-12);
  EXPECT_THROW(env::step(s, ActionKind::kFwdH, {}), std::logic_error);
}

TEST(Step, TerminalRewardAddsFinalIou) {
  auto s = env::init_episode(blank_video(1000), Window{0, 40}, 80);
  env::EnvConfig cfg;
  cfg.terminal_reward = true;
  const auto r = env::step(s, ActionKind::kTerminate, cfg);
  EXPECT_NEAR(r.reward, 0.5 - 0.01, 1e-12);
}

TEST(Step, CapForcesTermination) {
  auto s = env::init_episode(blank_video(1000), Window{500, 580}, 80);
  env::EnvConfig cfg;
  cfg.t_max = 3;
  env::step(s, ActionKind::kBackJ, cfg);
  env::step(s, ActionKind::kBackJ, cfg);
  const auto r = env::step(s, ActionKind::kBackJ, cfg);
  EXPECT_TRUE(r.done);
  EXPECT_TRUE(s.forced);
  EXPECT_EQ(s.window, (Window{0, 80}));
}

TEST(Step, NoGroundTruthGivesNanIou) {
  auto s = env::init_episode(blank_video(1000), std::nullopt, 80);
  EXPECT_TRUE(std::isnan(env::current_iou(s)));
  const auto r = env::step(s, ActionKind::kFwdH, {});
  EXPECT_TRUE(std::isnan(r.iou));
  EXPECT_NEAR(r.reward, -0.01, 1e-12);
}

TEST(Iou, WorkedExamples) {
  EXPECT_DOUBLE_EQ(env::temporal_iou({0, 10}, {0, 10}), 1.0);
  EXPECT_NEAR(env::temporal_iou({0, 10}, {5, 15}), 5.0 / 15.0, 1e-9);
  EXPECT_NEAR(env::temporal_iou({0, 10}, {20, 30}), -1.0 / 3.0, 1e-9);
  EXPECT_EQ(env::clamped_iou({0, 10}, {20, 30}), 0.0);
}

TEST(Iou, RejectsEmptyIntervals) {
  EXPECT_THROW(env::temporal_iou({5, 5}, {0, 10}), std::invalid_argument);
}

TEST(Iou, SymmetricBoundedAndMatchesFrameCount) {
  std::mt19937_64 rng(31);
  for (int c = 0; c < 2000; ++c) {
    const std::int64_t a0 = static_cast<std::int64_t>(rng() % 100);
    const std::int64_t b0 = static_cast<std::int64_t>(rng() % 100);
    const Window a{a0, a0 + 1 + static_cast<std::int64_t>(rng() % 50)};
    const Window b{b0, b0 + 1 + static_cast<std::int64_t>(rng() % 50)};
    const double x = env::temporal_iou(a, b);
    EXPECT_DOUBLE_EQ(x, env::temporal_iou(b, a));
    EXPECT_GT(x, -1.0);
    EXPECT_LE(x, 1.0);
    EXPECT_NEAR(x, iou_oracle(a, b), 1e-12);
    EXPECT_DOUBLE_EQ(env::temporal_iou(a, a), 1.0);
  }
}

TEST(Reward, WorkedExamples) {
  EXPECT_NEAR(env::shaped_reward(0.2, 0.5, 3, 0.01), 0.27, 1e-9);
  EXPECT_NEAR(env::shaped_reward(0.4, 0.4, 5, 0.01), -0.05, 1e-12);
  EXPECT_EQ(env::shaped_reward(0.4, 0.4, 5, 0.0), 0.0);
}

TEST(Reward, TelescopesOverRandomTrajectories) {
  std::mt19937_64 rng(41);
  for (int c = 0; c < 1000; ++c) {
    const std::int64_t n = 50 + static_cast<std::int64_t>(rng() % 500);
    const std::int64_t x = 1 + static_cast<std::int64_t>(rng() % n);
    const std::int64_t g0 = static_cast<std::int64_t>(rng() % n);
    const Window gt{g0, g0 + 1 + static_cast<std::int64_t>(rng() % (n - g0))};
    auto s = env::init_episode(blank_video(n), gt, x);
    const double iou0 = env::current_iou(s);
    double total = 0.0;
    std::int64_t steps = 0;
    while (!s.done) {
      total += env::step(s, static_cast<ActionKind>(rng() % 7), {}).reward;
      ++steps;
    }
    const double penalty = 0.01 * static_cast<double>(steps * (steps + 1) / 2);
    EXPECT_NEAR(total, env::current_iou(s) - iou0 - penalty, 1e-12);
  }
}

TEST(Env, RandomScriptsStayInBoundsAndReplay) {
  std::mt19937_64 rng(51);
  for (int c = 0; c < 1000; ++c) {
    const std::int64_t n = 5 + static_cast<std::int64_t>(rng() % 400);
    const std::int64_t x = 1 + static_cast<std::int64_t>(rng() % (n + 50));
    const std::int64_t width = std::min(x, n);
    std::vector<ActionKind> script(1 + rng() % 40);
    for (auto& a : script) a = static_cast<ActionKind>(rng() % 6);
    const Window gt{0, 1};

    auto run = [&]() {
      auto s = env::init_episode(blank_video(n), gt, x);
      std::vector<Window> path = {s.window};
      for (ActionKind a : script) {
        if (s.done) break;
        env::step(s, a, {});
        path.push_back(s.window);
        EXPECT_GE(s.window.start, 0);
        EXPECT_LE(s.window.end, n);
        EXPECT_EQ(s.window.width(), width);
      }
      return path;
    };
    EXPECT_EQ(run(), run());
  }
}

TEST(Env, ObservedUnitsAreUnionOfVisitedWindows) {
  std::mt19937_64 rng(61);
  for (int c = 0; c < 200; ++c) {
    const std::int64_t n = 100 + static_cast<std::int64_t>(rng() % 300);
    const auto video = blank_video(n, 24.0, 16);
    auto s = env::init_episode(video, Window{0, 10}, 40);
    std::vector<bool> seen(static_cast<std::size_t>(video.units()), false);
    auto mark = [&](const Window& w) {
      for (std::int64_t u = 0; u < video.units(); ++u) {
        if (u * 16 < w.end && std::min((u + 1) * 16, n) > w.start) seen[u] = true;
      }
    };
    mark(s.window);
    while (!s.done) {
      env::step(s, static_cast<ActionKind>(rng() % 7), {});
      mark(s.window);
    }
    EXPECT_EQ(s.observed, seen);
    EXPECT_LE(s.observed_frame_count(), n);
  }
}

TEST(Trace, RoundTripsIncludingNan) {
  env::Trace tr;
  tr.initial = {0, 40};
  tr.initial_iou = std::nan("");
  tr.steps.push_back({1, ActionKind::kFwdJ, {40, 80}, std::nan(""), -0.01});
  tr.steps.push_back({2, ActionKind::kTerminate, {40, 80}, 0.25, -0.02});
  std::stringstream ss;
  env::write_trace(ss, tr);
  const auto back = env::read_trace(ss);
  EXPECT_EQ(back.initial, tr.initial);
  EXPECT_TRUE(std::isnan(back.initial_iou));
  ASSERT_EQ(back.steps.size(), 2u);
  EXPECT_EQ(back.steps[0].action, ActionKind::kFwdJ);
  EXPECT_TRUE(std::isnan(back.steps[0].iou));
  EXPECT_EQ(back.steps[1].window, (Window{40, 80}));
  EXPECT_DOUBLE_EQ(back.steps[1].iou, 0.25);
  EXPECT_DOUBLE_EQ(back.steps[1].reward, -0.02);
}

TEST(Trace, MalformedInputRejected) {
  std::stringstream ss("not a trace\n");
  EXPECT_THROW(env::read_trace(ss), std::exception);
}
