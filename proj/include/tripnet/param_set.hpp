#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <mutex>
#include <random>
#include <string>
#include <vector>

#include "tripnet/tensor.hpp"

namespace tripnet::nd {

/// Named collection of trainable tensors, iterated in sorted name order.
///
/// The version counter increases on every in-place update. snapshot() and
/// apply_gradients() lock the set, so worker threads can share one global
/// instance; every other member is unsynchronized and meant for
/// single-owner copies.
class ParamSet {
 public:
  ParamSet() = default;
  ParamSet(const ParamSet& other);
  ParamSet& operator=(const ParamSet& other);
  ParamSet(ParamSet&& other) noexcept;
  ParamSet& operator=(ParamSet&& other) noexcept;

  /// Registers a zero-initialised tensor with gradients enabled. Throws if
  /// the name is taken.
  Tensor& add(const std::string& name, Shape shape);
  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;
  bool contains(const std::string& name) const;
  std::size_t size() const { return params_.size(); }
  std::vector<std::string> names() const;

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  std::uint64_t version() const { return version_.load(); }
  void bump_version() { ++version_; }
  void set_version(std::uint64_t v) { version_ = v; }

  void zero_grad();
  double grad_norm() const;
  /// Rescales all gradients so their global L2 norm is at most `max_norm`.
  /// Returns the norm before clipping.
  double clip_grad_norm(double max_norm);
  bool grads_finite() const;

  /// Thread-safe copy of all values and the version.
  ParamSet snapshot() const;
  /// Thread-safe copy of values and version into `dst`, reusing its buffers
  /// when the layouts match. Gradients in `dst` are zeroed.
  void snapshot_into(ParamSet& dst) const;
  /// Thread-safe p <- p - lr * source.grad for every parameter present in
  /// both sets; bumps the version once. Returns the new version.
  std::uint64_t apply_gradients(const ParamSet& source, double lr);

  void save(std::ostream& out) const;
  static ParamSet load(std::istream& in);
  void save_file(const std::filesystem::path& path) const;
  static ParamSet load_file(const std::filesystem::path& path);

 private:
  std::map<std::string, Tensor> params_;
  std::atomic<std::uint64_t> version_{0};
  mutable std::mutex mu_;
};

/// p <- p - lr * grad, then zero the gradients and bump the version.
/// Parameters without a gradient buffer are skipped with a warning on stderr.
void sgd_step(ParamSet& params, double lr);

/// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for rank-2 tensors, zeros for
/// everything else. fan_in is the leading dimension unless `fan_in` names
/// the tensor.
void init_uniform_fan_in(ParamSet& params, std::uint64_t seed,
                         const std::map<std::string, double>& fan_in = {});

}  // namespace tripnet::nd
