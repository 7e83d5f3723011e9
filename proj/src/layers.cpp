#include "tripnet/layers.hpp"

namespace tripnet::nd {

namespace {

void expect_dim(const Tape& tape, Var v, std::size_t n, const std::string& who) {
  const Shape& s = tape.shape(v);
  if (s.size() != 1 || s[0] != n) {
    throw ShapeError(who + ": expected vector of length " + std::to_string(n) +
                     ", got " + shape_str(s));
  }
}

}  // namespace

Linear Linear::create(ParamSet& params, std::string name, std::size_t in,
                      std::size_t out) {
  params.add(name + ".W", {in, out});
  params.add(name + ".b", {out});
  return Linear{std::move(name), in, out};
}

Linear::Bound Linear::bind(Tape& tape, ParamSet& params) const {
  return Bound{tape.bind(params.at(name + ".W")), tape.bind(params.at(name + ".b")),
               in};
}

Var Linear::Bound::operator()(Tape& tape, Var x) const {
  return tape.add(tape.matmul(x, w), b);
}

GruCell GruCell::create(ParamSet& params, std::string name, std::size_t input,
                        std::size_t hidden) {
  for (const char* g : {"z", "r", "n"}) {
    Linear::create(params, name + ".x" + g, input, hidden);
    params.add(name + ".U_" + g, {hidden, hidden});
  }
  return GruCell{std::move(name), input, hidden};
}

GruCell::Bound GruCell::bind(Tape& tape, ParamSet& params) const {
  auto lin = [&](const char* g) {
    return Linear{name + ".x" + g, input, hidden}.bind(tape, params);
  };
  auto u = [&](const char* g) { return tape.bind(params.at(name + ".U_" + g)); };
  return Bound{lin("z"), lin("r"), lin("n"), u("z"), u("r"), u("n"), input, hidden};
}

Var GruCell::Bound::operator()(Tape& tape, Var x, Var h) const {
  expect_dim(tape, x, input, "gru_cell input");
  expect_dim(tape, h, hidden, "gru_cell state");
  Var z = tape.sigmoid(tape.add(xz(tape, x), tape.matmul(h, uz)));
  Var r = tape.sigmoid(tape.add(xr(tape, x), tape.matmul(h, ur)));
  Var n = tape.tanh(tape.add(xn(tape, x), tape.matmul(tape.mul(r, h), un)));
  // (1 - z) * n + z * h == n + z * (h - n)
  return tape.add(n, tape.mul(z, tape.sub(h, n)));
}

LstmCell LstmCell::create(ParamSet& params, std::string name, std::size_t input,
                          std::size_t hidden) {
  for (const char* g : {"i", "f", "o", "g"}) {
    Linear::create(params, name + ".x" + g, input, hidden);
    params.add(name + ".U_" + g, {hidden, hidden});
  }
  return LstmCell{std::move(name), input, hidden};
}

LstmCell::Bound LstmCell::bind(Tape& tape, ParamSet& params) const {
  auto lin = [&](const char* g) {
    return Linear{name + ".x" + g, input, hidden}.bind(tape, params);
  };
  auto u = [&](const char* g) { return tape.bind(params.at(name + ".U_" + g)); };
  return Bound{lin("i"), lin("f"), lin("o"), lin("g"),
               u("i"),   u("f"),   u("o"),   u("g"),
               input,    hidden};
}

LstmCell::State LstmCell::Bound::operator()(Tape& tape, Var x, State prev) const {
  expect_dim(tape, x, input, "lstm_cell input");
  expect_dim(tape, prev.h, hidden, "lstm_cell state h");
  expect_dim(tape, prev.c, hidden, "lstm_cell state c");
  auto pre = [&](const Linear::Bound& lx, Var u) {
    return tape.add(lx(tape, x), tape.matmul(prev.h, u));
  };
  Var i = tape.sigmoid(pre(xi, ui));
  Var f = tape.sigmoid(pre(xf, uf));
  Var o = tape.sigmoid(pre(xo, uo));
  Var g = tape.tanh(pre(xg, ug));
  Var c = tape.add(tape.mul(f, prev.c), tape.mul(i, g));
  Var h = tape.mul(o, tape.tanh(c));
  return State{h, c};
}

}  // namespace tripnet::nd
