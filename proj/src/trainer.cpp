#include "tripnet/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace tripnet::trainer {

double Trajectory::total_reward() const {
  double acc = 0.0;
  for (double r : rewards) acc += r;
  return acc;
}

env::Trace Trajectory::trace() const {
  env::Trace tr;
  tr.initial = initial;
  tr.initial_iou = initial_iou;
  for (std::size_t t = 0; t < actions.size(); ++t) {
    tr.steps.push_back(env::TraceStep{static_cast<std::int64_t>(t + 1), actions[t],
                                      windows[t], ious[t], rewards[t]});
  }
  return tr;
}

Episode run_episode(const Model& model, nd::ParamSet& params,
                    const data::FeatureVideo& video,
                    std::span<const std::int64_t> token_ids,
                    std::optional<env::Window> gt, std::int64_t window_frames,
                    const env::EnvConfig& env_cfg, std::mt19937_64& rng,
                    const EpisodeOptions& opts) {
  using clock = std::chrono::steady_clock;
  if (video.dim != static_cast<std::int64_t>(model.cfg.feature_dim)) {
    throw std::invalid_argument("run_episode: video '" + video.id + "' has dimension " +
                                std::to_string(video.dim) + ", model expects " +
                                std::to_string(model.cfg.feature_dim));
  }
  Episode ep;
  nd::Tape& tape = ep.tape;
  tape.set_grad_enabled(opts.record_grad);
  Trajectory& traj = ep.traj;

  env::EnvState state = env::init_episode(video, gt, window_frames);
  traj.initial = state.window;
  traj.initial_iou = env::current_iou(state);
  traj.truncated = state.truncated;
  traj.n_frames = state.n_frames;

  auto t0 = clock::now();
  const auto fb = model.fusion.bind(tape, params);
  const auto pb = model.policy.bind(tape, params);
  const nd::Var x_l = fb.encode_query(tape, token_ids);
  nd::LstmCell::State lstm = pb.zero_state(tape);
  traj.forward_seconds += std::chrono::duration<double>(clock::now() - t0).count();

  while (!state.done) {
    t0 = clock::now();
    const nd::Var x_m = tape.constant(fusion::pool_window_features(video, state.window));
    const nd::Var s = fb.fuse(tape, x_m, x_l);
    const auto out = pb.forward(tape, s, lstm);
    lstm = out.state;
    const auto view = policy::read_output(tape, out);
    traj.forward_seconds += std::chrono::duration<double>(clock::now() - t0).count();

    std::optional<env::ActionKind> scripted;
    if (opts.script) scripted = opts.script(state.t + 1, view.action_probs);
    const env::ActionKind action =
        scripted ? *scripted : policy::sample_action(view.action_probs, rng, opts.mode);

    const nd::Var lp = tape.pick(out.log_probs, static_cast<std::size_t>(action));
    const nd::Var ent = policy::entropy(tape, out);
    ep.log_probs.push_back(lp);
    ep.entropies.push_back(ent);
    ep.values.push_back(out.value);

    traj.states.push_back(tape.value(s));
    traj.actions.push_back(action);
    traj.values.push_back(view.value);
    traj.log_probs.push_back(tape.item(lp));
    traj.entropies.push_back(tape.item(ent));

    const env::StepResult r = env::step(state, action, env_cfg);
    traj.rewards.push_back(r.reward);
    traj.windows.push_back(state.window);
    traj.ious.push_back(r.iou);
  }
  traj.prediction = state.window;
  traj.forced = state.forced;
  traj.observed_frames = state.observed_frame_count();
  traj.observed_units = state.observed_units();
  return ep;
}

UpdateStats worker_update(Episode& episode, nd::ParamSet& local, nd::ParamSet& global,
                          const policy::TrainHyper& hyper) {
  const Trajectory& traj = episode.traj;
  nd::Tape& tape = episode.tape;
  const auto returns = policy::discounted_returns(traj.rewards, hyper.discount);
  const auto adv = policy::gae(traj.rewards, traj.values, hyper.discount, hyper.gae_lambda);

  const nd::Var pl =
      policy::policy_loss(tape, episode.log_probs, adv, episode.entropies, hyper.gamma0);
  const nd::Var vl = policy::value_loss(tape, returns, episode.values, hyper.gamma1);
  const nd::Var total = tape.add(pl, vl);

  UpdateStats stats;
  stats.policy_loss = tape.item(pl);
  stats.value_loss = tape.item(vl);
  stats.total_loss = tape.item(total);
  stats.version = global.version();
  if (!std::isfinite(stats.total_loss)) {
    std::cerr << "worker_update: non-finite loss, update skipped; rewards:";
    for (double r : traj.rewards) std::cerr << ' ' << r;
    std::cerr << '\n';
    return stats;
  }
  local.zero_grad();
  tape.backward(total);
  if (!local.grads_finite()) {
    std::cerr << "worker_update: non-finite gradient, update skipped\n";
    return stats;
  }
  stats.grad_norm = local.clip_grad_norm(hyper.clip_norm);
  stats.version = global.apply_gradients(local, hyper.lr);
  stats.applied = true;
  return stats;
}

void TrainConfig::validate() const {
  hyper.validate();
  if (total_episodes < 1) throw std::invalid_argument("total_episodes must be >= 1");
  if (checkpoint_every < 0) throw std::invalid_argument("checkpoint_every must be >= 0");
}

env::EnvConfig TrainConfig::env_config() const {
  env::EnvConfig e;
  e.t_max = hyper.t_max;
  e.beta = hyper.beta;
  e.terminal_reward = terminal_reward;
  return e;
}

void write_log_record(std::ostream& out, const TrainLogRecord& r) {
  nlohmann::json j;
  j["episode"] = r.episode;
  j["worker"] = r.worker;
  j["iou"] = r.iou;
  j["length"] = r.length;
  j["reward"] = r.total_reward;
  j["policy_loss"] = r.policy_loss;
  j["value_loss"] = r.value_loss;
  j["version"] = r.version;
  j["forced"] = r.forced;
  out << j.dump() << '\n';
}

TrainResult train(const TrainConfig& cfg, const TrainInputs& in,
                  std::function<void(const TrainLogRecord&)> on_episode) {
  cfg.validate();
  if (!in.videos || !in.vocab) throw std::invalid_argument("train: missing inputs");
  if (in.train.empty()) throw data::DataError("train: no training annotations");
  for (const auto& a : in.train) {
    if (!in.videos->count(a.video_id)) {
      throw data::DataError("train: unknown video '" + a.video_id + "'");
    }
  }

  auto [model, global] = Model::init(cfg.model, cfg.seed);
  const env::EnvConfig env_cfg = cfg.env_config();

  std::ofstream log_file;
  if (!cfg.out_dir.empty()) {
    std::filesystem::create_directories(cfg.out_dir);
    log_file.open(cfg.out_dir / "train_log.jsonl", std::ios::trunc);
    if (!log_file) throw std::runtime_error("cannot write training log");
  }

  TrainResult result;
  std::mutex log_mu;
  std::atomic<std::int64_t> next{0};
  std::atomic<std::int64_t> completed{0};
  std::atomic<bool> stop{false};
  std::exception_ptr failure;

  auto worker = [&](std::int64_t w) {
    try {
      std::seed_seq seq{static_cast<std::uint64_t>(cfg.seed),
                        static_cast<std::uint64_t>(w), std::uint64_t{0x7219}};
      std::mt19937_64 rng(seq);
      std::vector<std::size_t> order(in.train.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      std::size_t pos = order.size();
      nd::ParamSet local;

      while (!stop) {
        const std::int64_t ep_index = next.fetch_add(1);
        if (ep_index >= cfg.total_episodes) break;
        if (pos == order.size()) {
          for (std::size_t i = order.size(); i > 1; --i) {
            std::swap(order[i - 1], order[rng() % i]);
          }
          pos = 0;
        }
        const data::Annotation& ann = in.train[order[pos++]];
        const data::FeatureVideo& video = in.videos->at(ann.video_id);
        const auto ids = in.vocab->encode(ann.tokens);

        global.snapshot_into(local);
        Episode ep = run_episode(model, local, video, ids,
                                 env::Window{ann.gt_start, ann.gt_end},
                                 in.window_frames, env_cfg, rng);
        const UpdateStats stats = worker_update(ep, local, global, cfg.hyper);

        TrainLogRecord rec;
        rec.episode = ep_index;
        rec.worker = w;
        rec.iou = std::max(0.0, ep.traj.ious.back());
        rec.length = static_cast<std::int64_t>(ep.traj.size());
        rec.total_reward = ep.traj.total_reward();
        rec.policy_loss = stats.policy_loss;
        rec.value_loss = stats.value_loss;
        rec.version = stats.version;
        rec.forced = ep.traj.forced;

        std::lock_guard lock(log_mu);
        result.log.push_back(rec);
        if (log_file.is_open()) write_log_record(log_file, rec);
        if (on_episode) on_episode(rec);
        const std::int64_t done = ++completed;
        if (cfg.checkpoint_every > 0 && !cfg.out_dir.empty() &&
            done % cfg.checkpoint_every == 0) {
          std::ostringstream name;
          name << "checkpoint_" << std::setw(7) << std::setfill('0') << done << ".bin";
          global.snapshot().save_file(cfg.out_dir / name.str());
        }
      }
    } catch (...) {
      std::lock_guard lock(log_mu);
      if (!failure) failure = std::current_exception();
      stop = true;
    }
  };

  if (cfg.hyper.workers == 1) {
    worker(0);
  } else {
    std::vector<std::jthread> threads;
    for (std::int64_t w = 0; w < cfg.hyper.workers; ++w) threads.emplace_back(worker, w);
  }
  if (failure) std::rethrow_exception(failure);

  result.params = global.snapshot();
  if (!cfg.out_dir.empty()) {
    result.final_checkpoint = cfg.out_dir / "checkpoint_final.bin";
    result.params.save_file(result.final_checkpoint);
  }
  return result;
}

}  // namespace tripnet::trainer
