#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace jblab {

/// One documented key of the flat config format.
struct ConfigKey {
  std::string name;
  std::string type;      ///< int, u64, double, doubles, longs, rational, bigint, cf, point, cube, rate, box, kappa or enum:a|b|c
  std::string fallback;  ///< default value text
  std::string doc;
};

/// The full key list in canonical order.
const std::vector<ConfigKey>& config_schema();

/// Flat "key = value" configuration. Lines starting with '#' are comments. Every key has a
/// default, so a file only lists what it changes.
class ExperimentConfig {
 public:
  ExperimentConfig();

  /// ConfigError with "line N" or "field 'key'" context on unknown keys, duplicates or bad values.
  static ExperimentConfig parse(std::string_view text);
  static ExperimentConfig load(const std::string& path);

  /// Every key in schema order; parse(to_text()) reproduces the config.
  std::string to_text() const;
  /// FNV-1a 64 of to_text(), as 16 hex digits.
  std::string hash() const;

  void set(const std::string& key, const std::string& value);
  const std::string& get(const std::string& key) const;
  long get_long(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  double get_double(const std::string& key) const;
  std::vector<double> get_doubles(const std::string& key) const;
  std::vector<long> get_longs(const std::string& key) const;

  /// Checks every value against its key's type; ConfigError naming the field.
  void validate() const;

  friend bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) { return a.values_ == b.values_; }

 private:
  std::map<std::string, std::string> values_;
};

/// Seed for a named random stream, derived from the global seed.
std::uint64_t derive_seed(std::uint64_t global, std::string_view stream);

enum ExitStatus : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitConstruction = 3,
  kExitVerification = 4,
};

struct RunResult {
  int exit_code = kExitOk;
  std::string message;             ///< one-line outcome
  std::vector<std::string> files;  ///< written artifacts, relative to the output directory
};

/// Runs the configured experiment and writes its CSV/JSON files and manifest.json into
/// out_dir (created if missing). Output bytes depend only on the config.
RunResult run_experiment(const ExperimentConfig& config, const std::string& out_dir);

}  // namespace jblab
