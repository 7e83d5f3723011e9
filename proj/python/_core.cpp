#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tripnet/binary_io.hpp"
#include "tripnet/config.hpp"
#include "tripnet/env.hpp"
#include "tripnet/eval.hpp"
#include "tripnet/pipeline.hpp"
#include "tripnet/policy.hpp"

namespace py = pybind11;
namespace fs = std::filesystem;
using namespace tripnet;

namespace {

using Interval = std::pair<std::int64_t, std::int64_t>;

env::Window to_window(const Interval& w) { return env::Window{w.first, w.second}; }
Interval from_window(const env::Window& w) { return {w.start, w.end}; }

env::ActionKind to_action(const py::object& a) {
  if (py::isinstance<py::str>(a)) {
    const auto name = a.cast<std::string>();
    const auto parsed = env::parse_action(name);
    if (!parsed) throw py::value_error("unknown action '" + name + "'");
    return *parsed;
  }
  const auto idx = a.cast<std::int64_t>();
  if (idx < 0 || idx >= env::kNumActions) throw py::value_error("action index out of range");
  return static_cast<env::ActionKind>(idx);
}

Config resolve(const std::optional<fs::path>& base, const std::optional<fs::path>& config,
               const std::vector<std::string>& overrides) {
  Config cfg = Config::defaults();
  if (base && fs::exists(*base)) cfg = Config::load_file(*base);
  if (config) cfg.overlay_file(*config);
  for (const auto& o : overrides) cfg.apply_override(o);
  return cfg;
}

pipeline::Experiment prepare(const Config& cfg, const fs::path& data_dir) {
  if (!fs::is_directory(data_dir)) {
    throw data::DataError("data directory " + data_dir.string() + " not found");
  }
  return pipeline::prepare(data::load_dataset(data_dir), cfg.split_fractions(),
                           cfg.get_uint("data.split_seed"));
}

py::dict report_to_dict(const eval::EvalReport& rep) {
  py::dict d;
  d["alphas"] = rep.alphas;
  d["accuracy"] = rep.accuracy;
  d["ceiling_accuracy"] = rep.ceiling_accuracy;
  d["chance_accuracy"] = rep.chance_accuracy;
  d["mean_iou"] = rep.mean_iou;
  d["mean_ceiling"] = rep.mean_ceiling;
  d["mean_frames_pct"] = rep.mean_frames_pct;
  d["mean_actions"] = rep.mean_actions;
  d["forced_fraction"] = rep.forced_fraction;
  py::list records;
  for (const auto& r : rep.records) {
    py::dict x;
    x["video"] = r.video_id;
    x["query"] = r.query;
    x["gt"] = from_window(r.gt);
    x["prediction"] = from_window(r.prediction);
    x["iou"] = r.iou;
    x["ceiling"] = r.ceiling;
    x["actions"] = r.actions;
    x["frames_pct"] = r.frames_pct;
    x["forced"] = r.forced;
    records.append(x);
  }
  d["records"] = records;
  return d;
}

py::list trace_to_list(const env::Trace& trace) {
  py::list steps;
  for (const auto& s : trace.steps) {
    py::dict x;
    x["t"] = s.step;
    x["action"] = std::string(env::action_name(s.action));
    x["window"] = from_window(s.window);
    x["iou"] = s.iou;
    x["reward"] = s.reward;
    steps.append(x);
  }
  return steps;
}

// Stateful episode over a featureless video of a given length, for scripting
// and inspecting the environment from Python.
class Environment {
 public:
  Environment(std::int64_t n_frames, double fps, std::int64_t window_frames,
              std::optional<Interval> gt, std::int64_t t_max, double beta,
              bool terminal_reward, std::int64_t unit_len) {
    if (n_frames < 1 || unit_len < 1) throw py::value_error("n_frames and unit_len must be >= 1");
    video_.id = "python";
    video_.n_frames = n_frames;
    video_.fps = fps;
    video_.unit_len = unit_len;
    video_.dim = 1;
    video_.features.assign(static_cast<std::size_t>((n_frames + unit_len - 1) / unit_len), 0.0f);
    cfg_.t_max = t_max;
    cfg_.beta = beta;
    cfg_.terminal_reward = terminal_reward;
    std::optional<env::Window> g;
    if (gt) g = to_window(*gt);
    state_ = env::init_episode(video_, g, window_frames);
  }

  py::tuple step(const py::object& action) {
    if (state_.done) throw std::logic_error("episode is over");
    const auto r = env::step(state_, to_action(action), cfg_);
    return py::make_tuple(r.reward, r.done);
  }

  Interval window() const { return from_window(state_.window); }
  double iou() const { return env::current_iou(state_); }
  std::int64_t t() const { return state_.t; }
  bool done() const { return state_.done; }
  bool forced() const { return state_.forced; }
  std::int64_t observed_frames() const { return state_.observed_frame_count(); }
  py::dict offsets() const {
    py::dict d;
    d["h"] = state_.offsets.h;
    d["j"] = state_.offsets.j;
    d["sec"] = state_.offsets.sec;
    return d;
  }

 private:
  data::FeatureVideo video_;
  env::EnvConfig cfg_;
  env::EnvState state_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "TripNet: reinforcement-learning temporal localization of language queries";

  auto data_error = py::register_exception<data::DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<io::FormatError>(m, "FormatError", data_error.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  py::list actions;
  for (int i = 0; i < env::kNumActions; ++i) {
    actions.append(std::string(env::action_name(static_cast<env::ActionKind>(i))));
  }
  m.attr("ACTIONS") = actions;

  m.def("action_offsets", [](std::int64_t n_frames, double fps) {
    const auto o = env::action_offsets(n_frames, fps);
    py::dict d;
    d["h"] = o.h;
    d["j"] = o.j;
    d["sec"] = o.sec;
    return d;
  }, py::arg("n_frames"), py::arg("fps"));
  m.def("temporal_iou", [](Interval a, Interval b) {
    return env::temporal_iou(to_window(a), to_window(b));
  }, py::arg("a"), py::arg("b"), "Signed IoU of two half-open frame intervals.");
  m.def("clamped_iou", [](Interval a, Interval b) {
    return env::clamped_iou(to_window(a), to_window(b));
  }, py::arg("a"), py::arg("b"));
  m.def("shaped_reward", &env::shaped_reward, py::arg("iou_prev"), py::arg("iou_cur"),
        py::arg("t"), py::arg("beta") = 0.01);
  m.def("oracle_ceiling", [](Interval gt, std::int64_t window_frames, std::int64_t n_frames) {
    return eval::oracle_ceiling(to_window(gt), window_frames, n_frames);
  }, py::arg("gt"), py::arg("window_frames"), py::arg("n_frames"));

  m.def("discounted_returns", [](const std::vector<double>& r, double discount) {
    return policy::discounted_returns(r, discount);
  }, py::arg("rewards"), py::arg("discount") = 0.99);
  m.def("gae", [](const std::vector<double>& r, const std::vector<double>& v, double discount,
                  double lam) { return policy::gae(r, v, discount, lam); },
        py::arg("rewards"), py::arg("values"), py::arg("discount") = 0.99,
        py::arg("lam") = 0.95);
  m.def("value_loss", [](const std::vector<double>& ret, const std::vector<double>& v,
                         double gamma1) { return policy::value_loss(ret, v, gamma1); },
        py::arg("returns"), py::arg("values"), py::arg("gamma1") = 0.5);
  m.def("policy_loss", [](const std::vector<double>& lp, const std::vector<double>& adv,
                          const std::vector<double>& ent, double gamma0) {
    return policy::policy_loss(lp, adv, ent, gamma0);
  }, py::arg("log_probs"), py::arg("advantages"), py::arg("entropies"),
     py::arg("gamma0") = 0.5);

  py::class_<Environment>(m, "Environment")
      .def(py::init<std::int64_t, double, std::int64_t, std::optional<Interval>, std::int64_t,
                    double, bool, std::int64_t>(),
           py::arg("n_frames"), py::arg("fps"), py::arg("window_frames"),
           py::arg("gt") = py::none(), py::arg("t_max") = 30, py::arg("beta") = 0.01,
           py::arg("terminal_reward") = false, py::arg("unit_len") = 16)
      .def("step", &Environment::step, py::arg("action"),
           "Apply an action (name or index); returns (reward, done).")
      .def_property_readonly("window", &Environment::window)
      .def_property_readonly("iou", &Environment::iou)
      .def_property_readonly("t", &Environment::t)
      .def_property_readonly("done", &Environment::done)
      .def_property_readonly("forced", &Environment::forced)
      .def_property_readonly("observed_frames", &Environment::observed_frames)
      .def_property_readonly("offsets", &Environment::offsets);

  m.def("read_features", [](const fs::path& path) {
    const auto v = data::read_features_file(path);
    py::array_t<float> arr({v.units(), v.dim});
    std::copy(v.features.begin(), v.features.end(), arr.mutable_data());
    py::dict d;
    d["id"] = v.id;
    d["n_frames"] = v.n_frames;
    d["fps"] = v.fps;
    d["unit_len"] = v.unit_len;
    d["features"] = arr;
    return d;
  }, py::arg("path"), "Read a feature file; features is a (units, dim) float32 array.");
  m.def("write_features", [](const fs::path& path, const std::string& id, std::int64_t n_frames,
                             double fps, std::int64_t unit_len,
                             py::array_t<float, py::array::c_style | py::array::forcecast> f) {
    if (f.ndim() != 2) throw py::value_error("features must be a 2-D array");
    data::FeatureVideo v;
    v.id = id;
    v.n_frames = n_frames;
    v.fps = fps;
    v.unit_len = unit_len;
    v.dim = f.shape(1);
    v.features.assign(f.data(), f.data() + f.size());
    data::write_features_file(path, v);
  }, py::arg("path"), py::arg("id"), py::arg("n_frames"), py::arg("fps"), py::arg("unit_len"),
     py::arg("features"));

  m.def("resolved_config", [](std::optional<fs::path> config,
                              const std::vector<std::string>& overrides) {
    std::ostringstream out;
    resolve(std::nullopt, config, overrides).write(out);
    return out.str();
  }, py::arg("config") = py::none(), py::arg("overrides") = std::vector<std::string>{});

  m.def("generate", [](const fs::path& out_dir, std::optional<fs::path> config,
                       const std::vector<std::string>& overrides) {
    const Config cfg = resolve(std::nullopt, config, overrides);
    const auto ds = data::generate_synthetic(cfg.synthetic_spec());
    data::save_dataset(out_dir, ds.videos, ds.annotations);
    cfg.save_file(out_dir / "resolved_config.txt");
    py::dict d;
    d["videos"] = ds.videos.size();
    d["annotations"] = ds.annotations.size();
    return d;
  }, py::arg("out_dir"), py::arg("config") = py::none(),
     py::arg("overrides") = std::vector<std::string>{});

  m.def("train", [](const fs::path& data_dir, const fs::path& out_dir,
                    std::optional<fs::path> config, const std::vector<std::string>& overrides) {
    const Config cfg = resolve(std::nullopt, config, overrides);
    auto tc = cfg.train_config();
    tc.out_dir = out_dir;
    const auto exp = prepare(cfg, data_dir);
    fs::create_directories(out_dir);
    cfg.save_file(out_dir / "resolved_config.txt");
    std::vector<trainer::TrainLogRecord> log;
    double secs = 0.0;
    {
      py::gil_scoped_release release;
      const auto t0 = std::chrono::steady_clock::now();
      log = pipeline::train_agent(exp, tc).log;
      secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
    py::list ious;
    for (const auto& r : log) ious.append(r.iou);
    py::dict d;
    d["episodes"] = log.size();
    d["seconds"] = secs;
    d["episode_iou"] = ious;
    return d;
  }, py::arg("data_dir"), py::arg("out_dir"), py::arg("config") = py::none(),
     py::arg("overrides") = std::vector<std::string>{});

  m.def("evaluate", [](const fs::path& data_dir, const fs::path& run_dir,
                       const std::vector<std::string>& overrides, std::optional<fs::path> checkpoint) {
    const Config cfg = resolve(run_dir / "resolved_config.txt", std::nullopt, overrides);
    const auto exp = prepare(cfg, data_dir);
    auto agent = pipeline::load_agent(run_dir, checkpoint.value_or(fs::path{}));
    eval::EvalReport rep;
    {
      py::gil_scoped_release release;
      rep = pipeline::evaluate(agent, exp, cfg.get("eval.split"), cfg.eval_options());
    }
    return report_to_dict(rep);
  }, py::arg("data_dir"), py::arg("run_dir"), py::arg("overrides") = std::vector<std::string>{},
     py::arg("checkpoint") = py::none());

  m.def("localize", [](const fs::path& data_dir, const fs::path& run_dir,
                       const std::string& video_id, const std::string& query,
                       std::optional<fs::path> checkpoint) {
    const fs::path feat = data_dir / "features" / (video_id + ".feat");
    if (!fs::exists(feat)) throw data::DataError("unknown video '" + video_id + "'");
    const auto video = data::read_features_file(feat);
    auto agent = pipeline::load_agent(run_dir, checkpoint.value_or(fs::path{}));
    const auto loc = eval::localize(agent.model, agent.params, video, query, agent.vocab,
                                    agent.manifest.window_frames, agent.env_config());
    py::dict d;
    d["window"] = from_window(loc.window);
    d["seconds"] = std::make_pair(loc.start_sec, loc.end_sec);
    d["actions"] = loc.trace.steps.size();
    d["forced"] = loc.forced;
    d["trace"] = trace_to_list(loc.trace);
    return d;
  }, py::arg("data_dir"), py::arg("run_dir"), py::arg("video"), py::arg("query"),
     py::arg("checkpoint") = py::none());
}
