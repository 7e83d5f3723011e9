#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

#include "tripnet/data.hpp"

namespace tripnet::env {

/// Half-open frame interval [start, end).
struct Window {
  std::int64_t start = 0;
  std::int64_t end = 0;

  std::int64_t width() const { return end - start; }
  friend bool operator==(const Window&, const Window&) = default;
};

/// Policy-head index order. Do not reorder: logits are read by position.
enum class ActionKind : int {
  kBackJ = 0,
  kBackH = 1,
  kBackSec = 2,
  kFwdSec = 3,
  kFwdH = 4,
  kFwdJ = 5,
  kTerminate = 6,
};
inline constexpr int kNumActions = 7;
inline constexpr std::array<ActionKind, kNumActions> kAllActions = {
    ActionKind::kBackJ, ActionKind::kBackH, ActionKind::kBackSec,
    ActionKind::kFwdSec, ActionKind::kFwdH, ActionKind::kFwdJ,
    ActionKind::kTerminate};

std::string_view action_name(ActionKind a);
std::optional<ActionKind> parse_action(std::string_view name);

struct ActionOffsets {
  std::int64_t h = 1;    // N / 10
  std::int64_t j = 1;    // N / 5
  std::int64_t sec = 1;  // one second of frames
};

/// h = max(1, floor(N/10)), j = max(1, floor(N/5)), sec = max(1, round(fps)).
ActionOffsets action_offsets(std::int64_t n_frames, double fps);

/// Signed shift an action applies to the window (0 for Terminate).
std::int64_t action_shift(ActionKind a, const ActionOffsets& off);

struct EnvConfig {
  std::int64_t t_max = 30;
  double beta = 0.01;
  /// Adds the final clamped IoU to the Terminate reward when set.
  bool terminal_reward = false;
};

struct EnvState {
  Window window;
  /// Absent when localizing a query without ground truth; IoU is then NaN
  /// and the reward reduces to the step penalty.
  std::optional<Window> gt;
  std::int64_t t = 0;
  bool done = false;
  bool forced = false;
  /// The video was shorter than the requested window width.
  bool truncated = false;
  std::int64_t n_frames = 0;
  std::int64_t unit_len = 1;
  ActionOffsets offsets;
  /// observed[u] is set once unit u has overlapped any visited window.
  std::vector<bool> observed;

  std::int64_t observed_unit_count() const;
  /// Frames covered by observed units.
  std::int64_t observed_frame_count() const;
  std::vector<std::int64_t> observed_units() const;
};

struct StepResult {
  double reward = 0.0;
  bool done = false;
  /// The move would have left [0, N]; the window did not change.
  bool clamped = false;
  double iou = 0.0;  // signed IoU after the step
};

/// Units whose frame span intersects `w`.
std::pair<std::int64_t, std::int64_t> units_in_window(const Window& w,
                                                      std::int64_t unit_len,
                                                      std::int64_t n_frames);

/// Window starts at [0, min(X, N)).
EnvState init_episode(const data::FeatureVideo& video, const data::Annotation& ann,
                      std::int64_t window_frames);
EnvState init_episode(const data::FeatureVideo& video, std::optional<Window> gt,
                      std::int64_t window_frames);

/// Signed IoU of the current window against the ground truth, NaN without one.
double current_iou(const EnvState& state);

/// Applies one action in place. Throws std::logic_error on a finished episode.
StepResult step(EnvState& state, ActionKind action, const EnvConfig& cfg);

/// (min(a.end,b.end) - max(a.start,b.start)) / (max(a.end,b.end) - min(a.start,b.start)).
/// Negative for disjoint intervals.
double temporal_iou(const Window& a, const Window& b);

/// max(0, temporal_iou(a, b)).
double clamped_iou(const Window& a, const Window& b);

/// (iou_cur - iou_prev) - beta * t.
double shaped_reward(double iou_prev, double iou_cur, std::int64_t t, double beta);

/// One line of an episode trace.
struct TraceStep {
  std::int64_t step = 0;
  ActionKind action = ActionKind::kTerminate;
  Window window;
  double iou = 0.0;
  double reward = 0.0;
};

struct Trace {
  Window initial;
  double initial_iou = 0.0;
  std::vector<TraceStep> steps;
};

/// Tab-separated trace format, see docs/FORMATS.md.
void write_trace(std::ostream& out, const Trace& trace);
Trace read_trace(std::istream& in);

}  // namespace tripnet::env
