#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ovdprobe::cli {

/// Exit codes of run().
inline constexpr int kExitOk = 0;
inline constexpr int kExitStageFailure = 1;
inline constexpr int kExitUsage = 2;

inline constexpr const char* kInpaintUrlEnv = "OVDPROBE_INPAINT_URL";
inline constexpr const char* kDetectUrlEnv = "OVDPROBE_DETECT_URL";

/// Flat key/value document: "key = value" per line, '#' starts a comment line, quotes optional.
std::map<std::string, std::string> parse_config_text(const std::string& text, const std::string& origin = "<config>");

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Resolves one stage's settings: command-line flag, then environment (service URLs only),
/// then config file, then built-in default. Every resolved value is recorded for the manifest.
class Settings {
 public:
  Settings(std::map<std::string, std::string> flags, std::map<std::string, std::string> file,
           std::map<std::string, std::string> env_names = {});

  std::optional<std::string> raw(const std::string& key) const;

  std::string str(const std::string& key, const std::string& fallback);
  std::optional<std::string> optional_str(const std::string& key);
  std::string required_str(const std::string& key);
  double real(const std::string& key, double fallback, double lo, double hi);
  std::optional<double> optional_real(const std::string& key, double lo, double hi);
  long long integer(const std::string& key, long long fallback, long long lo, long long hi);
  std::optional<long long> optional_integer(const std::string& key, long long lo, long long hi);
  std::uint64_t u64(const std::string& key, std::uint64_t fallback);
  bool boolean(const std::string& key, bool fallback);

  /// key -> "value (source)" for everything resolved so far.
  const std::map<std::string, std::string>& echo() const { return echo_; }
  /// Config-file keys never looked up.
  std::vector<std::string> unused_file_keys() const;

 private:
  std::optional<std::pair<std::string, std::string>> lookup(const std::string& key) const;
  void record(const std::string& key, const std::string& value, const std::string& source);

  std::map<std::string, std::string> flags_;
  std::map<std::string, std::string> file_;
  std::map<std::string, std::string> env_names_;
  std::map<std::string, std::string> echo_;
  std::map<std::string, bool> touched_;
};

int run(const std::vector<std::string>& args);
int run(int argc, const char* const* argv);

}  // namespace ovdprobe::cli
