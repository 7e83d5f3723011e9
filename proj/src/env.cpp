#include "tripnet/env.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace tripnet::env {

namespace {

constexpr const char* kTraceMagic = "# tripnet-trace v1";
constexpr const char* kTraceColumns = "step\taction\tstart\tend\tiou\treward";

}  // namespace

std::string_view action_name(ActionKind a) {
  switch (a) {
    case ActionKind::kBackJ: return "BackJ";
    case ActionKind::kBackH: return "BackH";
    case ActionKind::kBackSec: return "BackSec";
    case ActionKind::kFwdSec: return "FwdSec";
    case ActionKind::kFwdH: return "FwdH";
    case ActionKind::kFwdJ: return "FwdJ";
    case ActionKind::kTerminate: return "Terminate";
  }
  return "?";
}

std::optional<ActionKind> parse_action(std::string_view name) {
  for (ActionKind a : kAllActions) {
    if (action_name(a) == name) return a;
  }
  return std::nullopt;
}

ActionOffsets action_offsets(std::int64_t n_frames, double fps) {
  if (n_frames < 1) throw std::invalid_argument("action_offsets: N must be >= 1");
  if (!(fps > 0.0)) throw std::invalid_argument("action_offsets: fps must be positive");
  ActionOffsets off;
  off.h = std::max<std::int64_t>(1, n_frames / 10);
  off.j = std::max<std::int64_t>(1, n_frames / 5);
  off.sec = std::max<std::int64_t>(1, std::llround(fps));
  return off;
}

std::int64_t action_shift(ActionKind a, const ActionOffsets& off) {
  switch (a) {
    case ActionKind::kBackJ: return -off.j;
    case ActionKind::kBackH: return -off.h;
    case ActionKind::kBackSec: return -off.sec;
    case ActionKind::kFwdSec: return off.sec;
    case ActionKind::kFwdH: return off.h;
    case ActionKind::kFwdJ: return off.j;
    case ActionKind::kTerminate: return 0;
  }
  return 0;
}

std::int64_t EnvState::observed_unit_count() const {
  return std::count(observed.begin(), observed.end(), true);
}

std::int64_t EnvState::observed_frame_count() const {
  std::int64_t frames = 0;
  for (std::size_t u = 0; u < observed.size(); ++u) {
    if (!observed[u]) continue;
    const auto lo = static_cast<std::int64_t>(u) * unit_len;
    frames += std::min(lo + unit_len, n_frames) - lo;
  }
  return frames;
}

std::vector<std::int64_t> EnvState::observed_units() const {
  std::vector<std::int64_t> out;
  for (std::size_t u = 0; u < observed.size(); ++u) {
    if (observed[u]) out.push_back(static_cast<std::int64_t>(u));
  }
  return out;
}

std::pair<std::int64_t, std::int64_t> units_in_window(const Window& w,
                                                      std::int64_t unit_len,
                                                      std::int64_t n_frames) {
  if (w.start < 0 || w.end > n_frames || w.start >= w.end) {
    throw std::invalid_argument("units_in_window: window [" + std::to_string(w.start) +
                                "," + std::to_string(w.end) + ") outside video of " +
                                std::to_string(n_frames) + " frames");
  }
  return {w.start / unit_len, (w.end - 1) / unit_len + 1};
}

namespace {

void mark_observed(EnvState& s) {
  const auto [lo, hi] = units_in_window(s.window, s.unit_len, s.n_frames);
  for (auto u = lo; u < hi; ++u) s.observed[static_cast<std::size_t>(u)] = true;
}

}  // namespace

EnvState init_episode(const data::FeatureVideo& video, const data::Annotation& ann,
                      std::int64_t window_frames) {
  return init_episode(video, Window{ann.gt_start, ann.gt_end}, window_frames);
}

double current_iou(const EnvState& s) {
  return s.gt ? temporal_iou(s.window, *s.gt)
              : std::numeric_limits<double>::quiet_NaN();
}

EnvState init_episode(const data::FeatureVideo& video, std::optional<Window> gt,
                      std::int64_t window_frames) {
  if (video.n_frames < 1) {
    throw std::invalid_argument("init_episode: video '" + video.id + "' is empty");
  }
  if (window_frames < 1) throw std::invalid_argument("init_episode: window must be >= 1");
  if (gt && (gt->start < 0 || gt->end > video.n_frames || gt->start >= gt->end)) {
    throw std::invalid_argument("init_episode: ground truth outside video '" +
                                video.id + "'");
  }
  EnvState s;
  s.n_frames = video.n_frames;
  s.unit_len = video.unit_len;
  s.truncated = window_frames > video.n_frames;
  s.window = Window{0, std::min(window_frames, video.n_frames)};
  s.gt = gt;
  s.offsets = action_offsets(video.n_frames, video.fps);
  s.observed.assign(static_cast<std::size_t>((video.n_frames + video.unit_len - 1) /
                                             video.unit_len),
                    false);
  mark_observed(s);
  return s;
}

StepResult step(EnvState& s, ActionKind action, const EnvConfig& cfg) {
  if (s.done) throw std::logic_error("step: episode already finished");
  const double iou_prev = s.gt ? temporal_iou(s.window, *s.gt) : 0.0;
  s.t += 1;
  StepResult r;
  if (action == ActionKind::kTerminate) {
    s.done = true;
  } else {
    const std::int64_t shift = action_shift(action, s.offsets);
    const Window moved{s.window.start + shift, s.window.end + shift};
    if (moved.start < 0 || moved.end > s.n_frames) {
      r.clamped = true;
    } else {
      s.window = moved;
      mark_observed(s);
    }
  }
  const double iou_cur = s.gt ? temporal_iou(s.window, *s.gt) : 0.0;
  r.iou = current_iou(s);
  r.reward = shaped_reward(iou_prev, iou_cur, s.t, cfg.beta);
  if (action == ActionKind::kTerminate && cfg.terminal_reward && s.gt) {
    r.reward += std::max(0.0, iou_cur);
  }
  if (!s.done && s.t >= cfg.t_max) {
    s.done = true;
    s.forced = true;
  }
  r.done = s.done;
  return r;
}

double temporal_iou(const Window& a, const Window& b) {
  if (a.width() <= 0 || b.width() <= 0) {
    throw std::invalid_argument("temporal_iou: zero-length interval");
  }
  const double inter = static_cast<double>(std::min(a.end, b.end) -
                                           std::max(a.start, b.start));
  const double uni = static_cast<double>(std::max(a.end, b.end) -
                                         std::min(a.start, b.start));
  return inter / uni;
}

double clamped_iou(const Window& a, const Window& b) {
  return std::max(0.0, temporal_iou(a, b));
}

double shaped_reward(double iou_prev, double iou_cur, std::int64_t t, double beta) {
  return (iou_cur - iou_prev) - beta * static_cast<double>(t);
}

void write_trace(std::ostream& out, const Trace& trace) {
  out << kTraceMagic << '\n' << kTraceColumns << '\n';
  out << std::setprecision(17);
  out << 0 << "\tInit\t" << trace.initial.start << '\t' << trace.initial.end << '\t'
      << trace.initial_iou << '\t' << 0 << '\n';
  for (const auto& s : trace.steps) {
    out << s.step << '\t' << action_name(s.action) << '\t' << s.window.start << '\t'
        << s.window.end << '\t' << s.iou << '\t' << s.reward << '\n';
  }
}

Trace read_trace(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kTraceMagic) {
    throw std::runtime_error("trace: missing header");
  }
  if (!std::getline(in, line) || line != kTraceColumns) {
    throw std::runtime_error("trace: missing column line");
  }
  Trace trace;
  bool have_init = false;
  std::size_t lineno = 2;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream row(line);
    TraceStep s;
    std::string action, iou, reward;
    if (!(row >> s.step >> action >> s.window.start >> s.window.end >> iou >> reward)) {
      throw std::runtime_error("trace line " + std::to_string(lineno) + ": malformed");
    }
    try {
      s.iou = std::stod(iou);
      s.reward = std::stod(reward);
    } catch (const std::exception&) {
      throw std::runtime_error("trace line " + std::to_string(lineno) +
                               ": bad number");
    }
    if (!have_init) {
      if (action != "Init") {
        throw std::runtime_error("trace line " + std::to_string(lineno) +
                                 ": expected Init row");
      }
      trace.initial = s.window;
      trace.initial_iou = s.iou;
      have_init = true;
      continue;
    }
    auto a = parse_action(action);
    if (!a) {
      throw std::runtime_error("trace line " + std::to_string(lineno) +
                               ": unknown action '" + action + "'");
    }
    s.action = *a;
    trace.steps.push_back(s);
  }
  return trace;
}

}  // namespace tripnet::env
