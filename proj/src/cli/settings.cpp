#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cstdlib>
#include <sstream>

#include "ovdprobe/cli.hpp"

namespace ovdprobe::cli {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string unquote(const std::string& s) {
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front())
    return s.substr(1, s.size() - 2);
  return s;
}

}  // namespace

std::map<std::string, std::string> parse_config_text(const std::string& text, const std::string& origin) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    std::string key = trim(t.substr(0, eq));
    std::replace(key.begin(), key.end(), '_', '-');
    if (key.empty()) throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
    out[key] = unquote(trim(t.substr(eq + 1)));
  }
  return out;
}

Settings::Settings(std::map<std::string, std::string> flags, std::map<std::string, std::string> file,
                   std::map<std::string, std::string> env_names)
    : flags_(std::move(flags)), file_(std::move(file)), env_names_(std::move(env_names)) {}

std::optional<std::pair<std::string, std::string>> Settings::lookup(const std::string& key) const {
  if (auto it = flags_.find(key); it != flags_.end()) return std::pair{it->second, std::string("flag")};
  if (auto it = env_names_.find(key); it != env_names_.end()) {
    if (const char* v = std::getenv(it->second.c_str()); v && *v) return std::pair{std::string(v), it->second};
  }
  if (auto it = file_.find(key); it != file_.end()) return std::pair{it->second, std::string("config")};
  return std::nullopt;
}

std::optional<std::string> Settings::raw(const std::string& key) const {
  auto v = lookup(key);
  if (!v) return std::nullopt;
  return v->first;
}

void Settings::record(const std::string& key, const std::string& value, const std::string& source) {
  echo_[key] = value + " (" + source + ")";
  touched_[key] = true;
}

std::string Settings::str(const std::string& key, const std::string& fallback) {
  auto v = optional_str(key);
  if (v) return *v;
  record(key, fallback, "default");
  return fallback;
}

std::optional<std::string> Settings::optional_str(const std::string& key) {
  touched_[key] = true;
  auto v = lookup(key);
  if (!v) return std::nullopt;
  record(key, v->first, v->second);
  return v->first;
}

std::string Settings::required_str(const std::string& key) {
  auto v = optional_str(key);
  if (!v || v->empty()) throw ConfigError("missing required setting --" + key);
  return *v;
}

std::optional<double> Settings::optional_real(const std::string& key, double lo, double hi) {
  auto v = optional_str(key);
  if (!v) return std::nullopt;
  char* end = nullptr;
  errno = 0;
  const double d = std::strtod(v->c_str(), &end);
  if (v->empty() || *end != '\0' || errno == ERANGE) throw ConfigError("--" + key + ": '" + *v + "' is not a number");
  if (!(d >= lo && d <= hi))
    throw ConfigError("--" + key + ": " + *v + " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  return d;
}

double Settings::real(const std::string& key, double fallback, double lo, double hi) {
  if (auto v = optional_real(key, lo, hi)) return *v;
  std::ostringstream s;
  s << fallback;
  record(key, s.str(), "default");
  return fallback;
}

std::optional<long long> Settings::optional_integer(const std::string& key, long long lo, long long hi) {
  auto v = optional_str(key);
  if (!v) return std::nullopt;
  long long n = 0;
  const auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), n);
  if (ec != std::errc() || ptr != v->data() + v->size())
    throw ConfigError("--" + key + ": '" + *v + "' is not an integer");
  if (n < lo || n > hi)
    throw ConfigError("--" + key + ": " + *v + " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  return n;
}

long long Settings::integer(const std::string& key, long long fallback, long long lo, long long hi) {
  if (auto v = optional_integer(key, lo, hi)) return *v;
  record(key, std::to_string(fallback), "default");
  return fallback;
}

std::uint64_t Settings::u64(const std::string& key, std::uint64_t fallback) {
  auto v = optional_str(key);
  if (!v) {
    record(key, std::to_string(fallback), "default");
    return fallback;
  }
  std::uint64_t n = 0;
  const auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), n);
  if (ec != std::errc() || ptr != v->data() + v->size())
    throw ConfigError("--" + key + ": '" + *v + "' is not an unsigned integer");
  return n;
}

bool Settings::boolean(const std::string& key, bool fallback) {
  auto v = optional_str(key);
  if (!v) {
    record(key, fallback ? "true" : "false", "default");
    return fallback;
  }
  std::string s = *v;
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError("--" + key + ": '" + *v + "' is not a boolean");
}

std::vector<std::string> Settings::unused_file_keys() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : file_)
    if (!touched_.count(k)) out.push_back(k);
  return out;
}

}  // namespace ovdprobe::cli
