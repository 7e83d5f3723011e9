#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "tripnet/env.hpp"
#include "tripnet/layers.hpp"

namespace tripnet::policy {

using Probs = std::array<double, env::kNumActions>;

struct PolicyConfig {
  std::size_t feature_dim = 16;
  std::size_t fc_dim = 256;
  std::size_t lstm_hidden = 256;
};

/// Learning hyperparameters. Defaults: beta, gamma0, gamma1, lr and workers
/// follow the original setup; discount and gae_lambda are the usual GAE
/// choices.
struct TrainHyper {
  double beta = 0.01;
  double gamma0 = 0.5;  // entropy weight
  double gamma1 = 0.5;  // value-loss weight
  double lr = 0.0005;
  double discount = 0.99;
  double gae_lambda = 0.95;
  double clip_norm = 40.0;
  std::int64_t workers = 8;
  std::int64_t t_max = 30;

  void validate() const;
};

/// FC -> LSTM -> {policy head (7 logits), value head (1)}.
struct PolicyNet {
  PolicyConfig cfg;
  nd::Linear fc;
  nd::LstmCell lstm;
  nd::Linear pi_head;
  nd::Linear v_head;

  static PolicyNet create(nd::ParamSet& params, const PolicyConfig& cfg);

  struct Step {
    nd::Var logits;
    nd::Var log_probs;
    nd::Var probs;
    nd::Var value;  // scalar
    nd::LstmCell::State state;
  };

  struct Bound {
    const PolicyNet* self = nullptr;
    nd::Linear::Bound fc, pi_head, v_head;
    nd::LstmCell::Bound lstm;

    nd::LstmCell::State zero_state(nd::Tape& tape) const;
    Step forward(nd::Tape& tape, nd::Var s, nd::LstmCell::State prev) const;
  };
  Bound bind(nd::Tape& tape, nd::ParamSet& params) const;
};

/// Plain-value view of a policy step.
struct PolicyOutput {
  Probs action_probs{};
  double value = 0.0;
};
PolicyOutput read_output(const nd::Tape& tape, const PolicyNet::Step& step);

/// -sum_a p_a log p_a as a tape scalar.
nd::Var entropy(nd::Tape& tape, const PolicyNet::Step& step);

enum class SampleMode { kSample, kGreedy };

/// Categorical draw (kSample) or lowest-index argmax (kGreedy). Throws on
/// negative, NaN, or all-zero probabilities.
env::ActionKind sample_action(std::span<const double> probs, std::mt19937_64& rng,
                              SampleMode mode);

/// R_t = r_t + discount * R_{t+1}, R_T = 0.
std::vector<double> discounted_returns(std::span<const double> rewards, double discount);

/// A_t = sum_l (discount * lambda)^l delta_{t+l},
/// delta_t = r_t + discount * V_{t+1} - V_t, V_T = 0.
std::vector<double> gae(std::span<const double> rewards, std::span<const double> values,
                        double discount, double lambda);

/// gamma1 * sum_t (R_t - v_t)^2
double value_loss(std::span<const double> returns, std::span<const double> values,
                  double gamma1);

/// -sum_t log_prob_t * adv_t - gamma0 * sum_t entropy_t
double policy_loss(std::span<const double> log_probs, std::span<const double> advantages,
                   std::span<const double> entropies, double gamma0);

double total_loss(double policy_loss, double value_loss);

/// Entropy of a discrete distribution in nats.
double entropy(std::span<const double> probs);

// Tape versions of the two losses. Returns and advantages enter as constants.
nd::Var value_loss(nd::Tape& tape, std::span<const double> returns,
                   std::span<const nd::Var> values, double gamma1);
nd::Var policy_loss(nd::Tape& tape, std::span<const nd::Var> log_probs,
                    std::span<const double> advantages,
                    std::span<const nd::Var> entropies, double gamma0);

}  // namespace tripnet::policy
