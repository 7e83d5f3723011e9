#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>

#include "tripnet/data.hpp"
#include "tripnet/eval.hpp"
#include "tripnet/trainer.hpp"

namespace tripnet {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Flat `section.key = value` configuration. Every key has a default; keys
/// not in the default table are rejected. See docs/FORMATS.md.
class Config {
 public:
  /// All known keys with their defaults.
  static Config defaults();
  /// Defaults overlaid with the file's entries.
  static Config load_file(const std::filesystem::path& path);
  static Config parse(std::istream& in, const std::string& origin = "<config>");

  /// Sets only the keys that appear in the stream.
  void overlay(std::istream& in, const std::string& origin = "<config>");
  void overlay_file(const std::filesystem::path& path);

  void set(const std::string& key, const std::string& value);
  /// "key=value"
  void apply_override(const std::string& assignment);

  const std::string& get(const std::string& key) const;
  double get_double(const std::string& key) const;
  std::int64_t get_int(const std::string& key) const;
  std::uint64_t get_uint(const std::string& key) const;
  bool get_bool(const std::string& key) const;

  /// Resolved snapshot, one `key = value` per line, sorted.
  void write(std::ostream& out) const;
  void save_file(const std::filesystem::path& path) const;

  data::SyntheticSpec synthetic_spec() const;
  std::array<double, 3> split_fractions() const;
  /// Model dimensions that do not depend on data (vocab and feature size
  /// are filled in by the caller).
  trainer::TrainConfig train_config() const;
  eval::EvalOptions eval_options() const;

  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace tripnet
