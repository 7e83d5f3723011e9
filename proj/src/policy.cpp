#include "tripnet/policy.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace tripnet::policy {

namespace {

void same_length(std::size_t a, std::size_t b, const char* who) {
  if (a != b) {
    throw std::invalid_argument(std::string(who) + ": length mismatch (" +
                                std::to_string(a) + " vs " + std::to_string(b) + ")");
  }
}

}  // namespace

void TrainHyper::validate() const {
  auto need = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("hyperparameters: ") + what);
  };
  need(beta >= 0.0, "beta must be >= 0");
  need(gamma0 >= 0.0, "gamma0 must be >= 0");
  need(gamma1 > 0.0, "gamma1 must be > 0");
  need(lr > 0.0, "lr must be > 0");
  need(discount > 0.0 && discount <= 1.0, "discount must be in (0, 1]");
  need(gae_lambda >= 0.0 && gae_lambda <= 1.0, "gae_lambda must be in [0, 1]");
  need(clip_norm > 0.0, "clip_norm must be > 0");
  need(workers >= 1, "workers must be >= 1");
  need(t_max >= 1, "t_max must be >= 1");
}

PolicyNet PolicyNet::create(nd::ParamSet& params, const PolicyConfig& cfg) {
  if (cfg.feature_dim < 1 || cfg.fc_dim < 1 || cfg.lstm_hidden < 1) {
    throw std::invalid_argument("policy: all dimensions must be >= 1");
  }
  PolicyNet p;
  p.cfg = cfg;
  p.fc = nd::Linear::create(params, "policy.fc", cfg.feature_dim, cfg.fc_dim);
  p.lstm = nd::LstmCell::create(params, "policy.lstm", cfg.fc_dim, cfg.lstm_hidden);
  p.pi_head = nd::Linear::create(params, "policy.pi", cfg.lstm_hidden,
                                 static_cast<std::size_t>(env::kNumActions));
  p.v_head = nd::Linear::create(params, "policy.v", cfg.lstm_hidden, 1);
  return p;
}

PolicyNet::Bound PolicyNet::bind(nd::Tape& tape, nd::ParamSet& params) const {
  Bound b;
  b.self = this;
  b.fc = fc.bind(tape, params);
  b.lstm = lstm.bind(tape, params);
  b.pi_head = pi_head.bind(tape, params);
  b.v_head = v_head.bind(tape, params);
  return b;
}

nd::LstmCell::State PolicyNet::Bound::zero_state(nd::Tape& tape) const {
  const std::size_t n = self->cfg.lstm_hidden;
  return {tape.constant(std::vector<double>(n, 0.0)),
          tape.constant(std::vector<double>(n, 0.0))};
}

PolicyNet::Step PolicyNet::Bound::forward(nd::Tape& tape, nd::Var s,
                                          nd::LstmCell::State prev) const {
  const nd::Shape& shape = tape.shape(s);
  if (shape.size() != 1 || shape[0] != self->cfg.feature_dim) {
    throw nd::ShapeError("policy_forward: expected state of length " +
                         std::to_string(self->cfg.feature_dim) + ", got " +
                         nd::shape_str(shape));
  }
  Step out;
  out.state = lstm(tape, fc(tape, s), prev);
  out.logits = pi_head(tape, out.state.h);
  out.log_probs = tape.log_softmax(out.logits);
  out.probs = tape.softmax(out.logits);
  out.value = tape.pick(v_head(tape, out.state.h), 0);
  return out;
}

PolicyOutput read_output(const nd::Tape& tape, const PolicyNet::Step& step) {
  PolicyOutput out;
  const auto& p = tape.value(step.probs);
  std::copy(p.begin(), p.end(), out.action_probs.begin());
  out.value = tape.item(step.value);
  return out;
}

nd::Var entropy(nd::Tape& tape, const PolicyNet::Step& step) {
  return tape.neg(tape.sum(tape.mul(step.probs, step.log_probs)));
}

env::ActionKind sample_action(std::span<const double> probs, std::mt19937_64& rng,
                              SampleMode mode) {
  if (probs.size() != static_cast<std::size_t>(env::kNumActions)) {
    throw std::invalid_argument("sample_action: expected 7 probabilities");
  }
  double total = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw std::invalid_argument("sample_action: invalid probability");
    }
    total += p;
  }
  if (!(total > 0.0)) throw std::invalid_argument("sample_action: all-zero distribution");

  if (mode == SampleMode::kGreedy) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < probs.size(); ++i) {
      if (probs[i] > probs[best]) best = i;
    }
    return static_cast<env::ActionKind>(best);
  }
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53 * total;
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    last_positive = i;
    acc += probs[i];
    if (u < acc) return static_cast<env::ActionKind>(i);
  }
  return static_cast<env::ActionKind>(last_positive);
}

std::vector<double> discounted_returns(std::span<const double> rewards, double discount) {
  std::vector<double> out(rewards.size());
  double running = 0.0;
  for (std::size_t t = rewards.size(); t-- > 0;) {
    running = rewards[t] + discount * running;
    out[t] = running;
  }
  return out;
}

std::vector<double> gae(std::span<const double> rewards, std::span<const double> values,
                        double discount, double lambda) {
  same_length(rewards.size(), values.size(), "gae");
  std::vector<double> adv(rewards.size());
  double running = 0.0;
  for (std::size_t t = rewards.size(); t-- > 0;) {
    const double next_v = t + 1 < values.size() ? values[t + 1] : 0.0;
    const double delta = rewards[t] + discount * next_v - values[t];
    running = delta + discount * lambda * running;
    adv[t] = running;
  }
  return adv;
}

double value_loss(std::span<const double> returns, std::span<const double> values,
                  double gamma1) {
  same_length(returns.size(), values.size(), "value_loss");
  double acc = 0.0;
  for (std::size_t t = 0; t < returns.size(); ++t) {
    const double d = returns[t] - values[t];
    acc += d * d;
  }
  return gamma1 * acc;
}

double policy_loss(std::span<const double> log_probs, std::span<const double> advantages,
                   std::span<const double> entropies, double gamma0) {
  same_length(log_probs.size(), advantages.size(), "policy_loss");
  same_length(log_probs.size(), entropies.size(), "policy_loss");
  double pg = 0.0, ent = 0.0;
  for (std::size_t t = 0; t < log_probs.size(); ++t) {
    pg += log_probs[t] * advantages[t];
    ent += entropies[t];
  }
  return -pg - gamma0 * ent;
}

double total_loss(double policy_loss, double value_loss) { return policy_loss + value_loss; }

double entropy(std::span<const double> probs) {
  double h = 0.0;
  for (double p : probs) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

nd::Var value_loss(nd::Tape& tape, std::span<const double> returns,
                   std::span<const nd::Var> values, double gamma1) {
  same_length(returns.size(), values.size(), "value_loss");
  if (values.empty()) return tape.scalar(0.0);
  nd::Var acc;
  for (std::size_t t = 0; t < values.size(); ++t) {
    nd::Var d = tape.sub(tape.scalar(returns[t]), values[t]);
    nd::Var sq = tape.mul(d, d);
    acc = acc.valid() ? tape.add(acc, sq) : sq;
  }
  return tape.scale(acc, gamma1);
}

nd::Var policy_loss(nd::Tape& tape, std::span<const nd::Var> log_probs,
                    std::span<const double> advantages,
                    std::span<const nd::Var> entropies, double gamma0) {
  same_length(log_probs.size(), advantages.size(), "policy_loss");
  same_length(log_probs.size(), entropies.size(), "policy_loss");
  if (log_probs.empty()) return tape.scalar(0.0);
  nd::Var acc;
  for (std::size_t t = 0; t < log_probs.size(); ++t) {
    nd::Var term = tape.add(tape.scale(log_probs[t], -advantages[t]),
                            tape.scale(entropies[t], -gamma0));
    acc = acc.valid() ? tape.add(acc, term) : term;
  }
  return acc;
}

}  // namespace tripnet::policy
