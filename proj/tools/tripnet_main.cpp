#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tripnet/binary_io.hpp"
#include "tripnet/config.hpp"
#include "tripnet/pipeline.hpp"

namespace fs = std::filesystem;
using namespace tripnet;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitRuntime = 4;

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::string out;
};

Config resolve(const CommonArgs& args, const fs::path& base = {}) {
  Config cfg = Config::defaults();
  if (!base.empty()) cfg = Config::load_file(base);
  if (!args.config_path.empty()) cfg.overlay_file(args.config_path);
  for (const auto& o : args.overrides) cfg.apply_override(o);
  return cfg;
}

data::SyntheticDataset load_data(const std::string& dir) {
  if (dir.empty()) throw ConfigError("--data is required");
  if (!fs::is_directory(dir)) throw data::DataError("data directory " + dir + " not found");
  return data::load_dataset(dir);
}

pipeline::Experiment prepare(const Config& cfg, const std::string& data_dir) {
  return pipeline::prepare(load_data(data_dir), cfg.split_fractions(),
                           cfg.get_uint("data.split_seed"));
}

int cmd_generate(const CommonArgs& args) {
  Config cfg = resolve(args);
  if (args.seed) cfg.set("synthetic.seed", std::to_string(*args.seed));
  const data::SyntheticSpec spec = cfg.synthetic_spec();
  if (args.out.empty()) throw ConfigError("--out is required");
  const data::SyntheticDataset ds = data::generate_synthetic(spec);
  data::save_dataset(args.out, ds.videos, ds.annotations);
  cfg.save_file(fs::path(args.out) / "resolved_config.txt");
  std::cout << "wrote " << ds.videos.size() << " videos and " << ds.annotations.size()
            << " annotations to " << args.out << '\n';
  return kExitOk;
}

int cmd_train(const CommonArgs& args, const std::string& data_dir) {
  Config cfg = resolve(args);
  if (args.seed) cfg.set("trainer.seed", std::to_string(*args.seed));
  trainer::TrainConfig tc = cfg.train_config();
  if (args.out.empty()) throw ConfigError("--out is required");
  const pipeline::Experiment exp = prepare(cfg, data_dir);
  tc.out_dir = args.out;
  fs::create_directories(tc.out_dir);
  cfg.save_file(tc.out_dir / "resolved_config.txt");

  std::cout << "train annotations: " << exp.split.train.size()
            << ", window X = " << exp.window_frames << " frames, vocabulary "
            << exp.vocab.size() << '\n';
  const auto t0 = std::chrono::steady_clock::now();
  const auto trained = pipeline::train_agent(exp, tc);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  double tail_iou = 0.0;
  const std::size_t tail = std::min<std::size_t>(500, trained.log.size());
  for (std::size_t i = trained.log.size() - tail; i < trained.log.size(); ++i) {
    tail_iou += trained.log[i].iou;
  }
  std::cout << "trained " << trained.log.size() << " episodes in " << std::fixed
            << std::setprecision(1) << secs << " s; mean IoU over last " << tail
            << " episodes " << std::setprecision(4)
            << (tail ? tail_iou / static_cast<double>(tail) : 0.0) << '\n';
  return kExitOk;
}

int cmd_eval(const CommonArgs& args, const std::string& data_dir, const std::string& run_dir,
             const std::string& checkpoint) {
  if (run_dir.empty()) throw ConfigError("--run is required");
  const fs::path base = fs::path(run_dir) / "resolved_config.txt";
  Config cfg = resolve(args, fs::exists(base) ? base : fs::path{});
  if (args.seed) cfg.set("eval.seed", std::to_string(*args.seed));
  const eval::EvalOptions opts = cfg.eval_options();
  const std::string split = cfg.get("eval.split");
  const pipeline::Experiment exp = prepare(cfg, data_dir);
  pipeline::Agent agent = pipeline::load_agent(run_dir, checkpoint);
  const eval::EvalReport rep = pipeline::evaluate(agent, exp, split, opts);

  eval::write_report(std::cout, rep);
  if (!args.out.empty()) {
    const fs::path out(args.out);
    fs::create_directories(out);
    cfg.save_file(out / "resolved_config.txt");
    std::ofstream report(out / "report.txt");
    eval::write_report(report, rep);
    std::ofstream records(out / "records.jsonl");
    eval::write_records(records, rep);
    if (!report || !records) throw std::runtime_error("cannot write evaluation output");
  }
  return kExitOk;
}

int cmd_localize(const CommonArgs& args, const std::string& data_dir,
                 const std::string& run_dir, const std::string& checkpoint,
                 const std::string& video_id, const std::string& query,
                 const std::string& trace_path) {
  if (run_dir.empty()) throw ConfigError("--run is required");
  if (video_id.empty() || query.empty()) throw ConfigError("--video and --query are required");
  const fs::path base = fs::path(run_dir) / "resolved_config.txt";
  Config cfg = resolve(args, fs::exists(base) ? base : fs::path{});
  if (data_dir.empty()) throw ConfigError("--data is required");
  const fs::path feat = fs::path(data_dir) / "features" / (video_id + ".feat");
  if (!fs::exists(feat)) throw data::DataError("unknown video '" + video_id + "'");
  const data::FeatureVideo video = data::read_features_file(feat);
  pipeline::Agent agent = pipeline::load_agent(run_dir, checkpoint);
  const eval::Localization loc =
      eval::localize(agent.model, agent.params, video, query, agent.vocab,
                     agent.manifest.window_frames, agent.env_config());

  std::cout << "window frames [" << loc.window.start << ", " << loc.window.end << ")\n"
            << std::fixed << std::setprecision(3) << "window seconds [" << loc.start_sec
            << ", " << loc.end_sec << ")\n"
            << "actions " << loc.trace.steps.size() << (loc.forced ? " (step cap)" : "")
            << '\n';
  if (!args.out.empty()) {
    fs::create_directories(args.out);
    cfg.save_file(fs::path(args.out) / "resolved_config.txt");
  }
  if (trace_path.empty()) {
    env::write_trace(std::cout, loc.trace);
  } else {
    std::ofstream out(trace_path);
    if (!out) throw std::runtime_error("cannot write " + trace_path);
    env::write_trace(out, loc.trace);
  }
  return kExitOk;
}

void add_common(CLI::App* sub, CommonArgs& args) {
  sub->add_option("--config", args.config_path, "key = value configuration file");
  sub->add_option("--override", args.overrides, "dotted key=value, repeatable")
      ->allow_extra_args(false);
  sub->add_option("--seed", args.seed, "seed for this subcommand");
  sub->add_option("--out", args.out, "output directory");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"TripNet: language-driven temporal localization by reinforcement learning"};
  app.require_subcommand(1);

  CommonArgs gen_args, train_args, eval_args, loc_args;
  std::string data_dir, run_dir, checkpoint, video_id, query, trace_path;

  auto* gen = app.add_subcommand("generate", "write a synthetic planted-clip dataset");
  add_common(gen, gen_args);

  auto* tr = app.add_subcommand("train", "train an agent with A3C");
  add_common(tr, train_args);
  tr->add_option("--data", data_dir, "dataset directory")->required();

  auto* ev = app.add_subcommand("eval", "evaluate a trained agent");
  add_common(ev, eval_args);
  ev->add_option("--data", data_dir, "dataset directory")->required();
  ev->add_option("--run", run_dir, "training output directory")->required();
  ev->add_option("--checkpoint", checkpoint, "checkpoint file (default: final)");

  auto* loc = app.add_subcommand("localize", "localize one query in one video");
  add_common(loc, loc_args);
  loc->add_option("--data", data_dir, "dataset directory")->required();
  loc->add_option("--run", run_dir, "training output directory")->required();
  loc->add_option("--checkpoint", checkpoint, "checkpoint file (default: final)");
  loc->add_option("--video", video_id, "video id")->required();
  loc->add_option("--query", query, "query sentence")->required();
  loc->add_option("--trace", trace_path, "write the trace here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*gen) return cmd_generate(gen_args);
    if (*tr) return cmd_train(train_args, data_dir);
    if (*ev) return cmd_eval(eval_args, data_dir, run_dir, checkpoint);
    if (*loc) {
      return cmd_localize(loc_args, data_dir, run_dir, checkpoint, video_id, query,
                          trace_path);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const data::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const io::FormatError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitRuntime;
}
