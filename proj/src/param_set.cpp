#include "tripnet/param_set.hpp"

#include <cmath>
#include <fstream>
#include <iostream>

#include "tripnet/binary_io.hpp"

namespace tripnet::nd {

namespace {

constexpr char kCheckpointMagic[8] = {'T', 'R', 'I', 'P', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kCheckpointFormat = 1;

// 53 random bits mapped onto [0, 1).
double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

ParamSet::ParamSet(const ParamSet& other) {
  std::lock_guard lock(other.mu_);
  params_ = other.params_;
  version_ = other.version_.load();
}

ParamSet& ParamSet::operator=(const ParamSet& other) {
  if (this == &other) return *this;
  std::scoped_lock lock(mu_, other.mu_);
  params_ = other.params_;
  version_ = other.version_.load();
  return *this;
}

ParamSet::ParamSet(ParamSet&& other) noexcept
    : params_(std::move(other.params_)), version_(other.version_.load()) {}

ParamSet& ParamSet::operator=(ParamSet&& other) noexcept {
  params_ = std::move(other.params_);
  version_ = other.version_.load();
  return *this;
}

Tensor& ParamSet::add(const std::string& name, Shape shape) {
  if (params_.count(name)) {
    throw std::invalid_argument("ParamSet: duplicate parameter '" + name + "'");
  }
  Tensor t = Tensor::zeros(std::move(shape));
  t.enable_grad();
  return params_.emplace(name, std::move(t)).first->second;
}

Tensor& ParamSet::at(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) {
    throw std::out_of_range("ParamSet: no parameter '" + name + "'");
  }
  return it->second;
}

const Tensor& ParamSet::at(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) {
    throw std::out_of_range("ParamSet: no parameter '" + name + "'");
  }
  return it->second;
}

bool ParamSet::contains(const std::string& name) const {
  return params_.count(name) != 0;
}

std::vector<std::string> ParamSet::names() const {
  std::vector<std::string> out;
  out.reserve(params_.size());
  for (const auto& [name, _] : params_) out.push_back(name);
  return out;
}

void ParamSet::zero_grad() {
  for (auto& [_, t] : params_) t.zero_grad();
}

double ParamSet::grad_norm() const {
  double acc = 0.0;
  for (const auto& [_, t] : params_) {
    for (double g : t.grad) acc += g * g;
  }
  return std::sqrt(acc);
}

double ParamSet::clip_grad_norm(double max_norm) {
  const double norm = grad_norm();
  if (norm > max_norm && norm > 0.0) {
    const double s = max_norm / norm;
    for (auto& [_, t] : params_) {
      for (double& g : t.grad) g *= s;
    }
  }
  return norm;
}

bool ParamSet::grads_finite() const {
  for (const auto& [_, t] : params_) {
    for (double g : t.grad) {
      if (!std::isfinite(g)) return false;
    }
  }
  return true;
}

ParamSet ParamSet::snapshot() const { return ParamSet(*this); }

void ParamSet::snapshot_into(ParamSet& dst) const {
  std::lock_guard lock(mu_);
  bool same = dst.params_.size() == params_.size();
  if (same) {
    auto it = dst.params_.begin();
    for (const auto& [name, t] : params_) {
      if (it->first != name || it->second.shape != t.shape) {
        same = false;
        break;
      }
      ++it;
    }
  }
  if (!same) {
    dst.params_ = params_;
  } else {
    auto it = dst.params_.begin();
    for (const auto& [_, t] : params_) {
      it->second.values = t.values;
      it->second.requires_grad = t.requires_grad;
      ++it;
    }
  }
  for (auto& [_, t] : dst.params_) t.zero_grad();
  dst.version_ = version_.load();
}

std::uint64_t ParamSet::apply_gradients(const ParamSet& source, double lr) {
  std::lock_guard lock(mu_);
  for (auto& [name, t] : params_) {
    auto it = source.params_.find(name);
    if (it == source.params_.end() || !it->second.has_grad()) continue;
    const auto& g = it->second.grad;
    for (std::size_t i = 0; i < t.values.size(); ++i) t.values[i] -= lr * g[i];
  }
  return ++version_;
}

void ParamSet::save(std::ostream& out) const {
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  io::write_le<std::uint32_t>(out, kCheckpointFormat);
  io::write_le<std::uint64_t>(out, version_.load());
  io::write_le<std::uint64_t>(out, params_.size());
  for (const auto& [name, t] : params_) {
    io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    io::write_bytes(out, name);
    io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.shape.size()));
    for (std::size_t d : t.shape) io::write_le<std::uint64_t>(out, d);
    for (double v : t.values) io::write_le<double>(out, v);
  }
  if (!out) throw std::runtime_error("checkpoint: write failed");
}

ParamSet ParamSet::load(std::istream& in) {
  const std::string magic = io::read_bytes(in, sizeof(kCheckpointMagic), "magic");
  if (magic != std::string(kCheckpointMagic, sizeof(kCheckpointMagic))) {
    throw io::FormatError("checkpoint: bad magic");
  }
  const auto format = io::read_le<std::uint32_t>(in, "format version");
  if (format != kCheckpointFormat) {
    throw io::FormatError("checkpoint: unsupported format version " +
                          std::to_string(format));
  }
  ParamSet out;
  out.version_ = io::read_le<std::uint64_t>(in, "version counter");
  const auto count = io::read_le<std::uint64_t>(in, "parameter count");
  for (std::uint64_t p = 0; p < count; ++p) {
    const auto len = io::read_le<std::uint32_t>(in, "name length");
    std::string name = io::read_bytes(in, len, "name");
    const auto rank = io::read_le<std::uint32_t>(in, "rank");
    if (rank > 8) throw io::FormatError("checkpoint: implausible rank for " + name);
    Shape shape(rank);
    for (auto& d : shape) d = io::read_le<std::uint64_t>(in, "dimension");
    Tensor& t = out.add(name, shape);
    for (double& v : t.values) v = io::read_le<double>(in, "values");
  }
  return out;
}

void ParamSet::save_file(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("checkpoint: cannot open " + path.string());
  save(out);
}

ParamSet ParamSet::load_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path.string());
  return load(in);
}

void sgd_step(ParamSet& params, double lr) {
  for (auto& [name, t] : params) {
    if (!t.has_grad()) {
      std::cerr << "sgd_step: no gradient for '" << name << "', skipped\n";
      continue;
    }
    for (std::size_t i = 0; i < t.values.size(); ++i) t.values[i] -= lr * t.grad[i];
    t.zero_grad();
  }
  params.bump_version();
}

void init_uniform_fan_in(ParamSet& params, std::uint64_t seed,
                         const std::map<std::string, double>& fan_in) {
  std::mt19937_64 rng(seed);
  for (auto& [name, t] : params) {
    if (t.rank() != 2) {
      std::fill(t.values.begin(), t.values.end(), 0.0);
      continue;
    }
    const auto it = fan_in.find(name);
    const double fan = it != fan_in.end() ? it->second : static_cast<double>(t.shape[0]);
    const double bound = 1.0 / std::sqrt(fan);
    for (double& v : t.values) v = (2.0 * unit_uniform(rng) - 1.0) * bound;
  }
}

}  // namespace tripnet::nd
