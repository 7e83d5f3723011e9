#pragma once

#include <string>
#include <utility>

#include "tripnet/param_set.hpp"
#include "tripnet/tape.hpp"

namespace tripnet::nd {

/// y = x W + b, W: [in, out], b: [out].
struct Linear {
  std::string name;
  std::size_t in = 0;
  std::size_t out = 0;

  static Linear create(ParamSet& params, std::string name, std::size_t in,
                       std::size_t out);

  struct Bound {
    Var w, b;
    std::size_t in = 0;
    Var operator()(Tape& tape, Var x) const;
  };
  Bound bind(Tape& tape, ParamSet& params) const;
};

/// Standard GRU cell:
///   z = sigmoid(x W_z + h U_z + b_z)
///   r = sigmoid(x W_r + h U_r + b_r)
///   n = tanh(x W_n + (r * h) U_n + b_n)
///   h' = (1 - z) * n + z * h
struct GruCell {
  std::string name;
  std::size_t input = 0;
  std::size_t hidden = 0;

  static GruCell create(ParamSet& params, std::string name, std::size_t input,
                        std::size_t hidden);

  struct Bound {
    Linear::Bound xz, xr, xn;
    Var uz, ur, un;
    std::size_t input = 0, hidden = 0;
    Var operator()(Tape& tape, Var x, Var h) const;
  };
  Bound bind(Tape& tape, ParamSet& params) const;
};

/// Standard LSTM cell (input, forget, output gates; tanh candidate).
struct LstmCell {
  std::string name;
  std::size_t input = 0;
  std::size_t hidden = 0;

  static LstmCell create(ParamSet& params, std::string name, std::size_t input,
                         std::size_t hidden);

  struct State {
    Var h, c;
  };
  struct Bound {
    Linear::Bound xi, xf, xo, xg;
    Var ui, uf, uo, ug;
    std::size_t input = 0, hidden = 0;
    State operator()(Tape& tape, Var x, State prev) const;
  };
  Bound bind(Tape& tape, ParamSet& params) const;
};

}  // namespace tripnet::nd
