#pragma once

// Shared plumbing for the command-line tools: config files, precedence
// (flag > environment > config file), file IO and error-to-exit mapping.

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "privlog/date.hpp"
#include "privlog/kv.hpp"

namespace privlog::cli {

/// Optional `key=value` config file. Missing keys return nullopt.
class Config {
 public:
  static Config load(const std::string& path);  // empty path = no file

  std::optional<std::string> get(const std::string& key) const;

 private:
  std::optional<KvDocument> doc_;
};

// First non-empty of: flag, environment variable, config key.
std::optional<std::string> resolve(const std::string& flag, const char* env_var,
                                   const Config& cfg, const std::string& key);
// Same, but throws InvalidArgument naming the flag when nothing is set.
std::string require(const std::string& flag, const char* env_var, const Config& cfg,
                    const std::string& key, const std::string& flag_name);

LogDate parse_date_arg(const std::string& text, const std::string& flag_name);
LogDate today_or(const std::string& flag);
int assumed_year_or(const std::string& flag, const Config& cfg, const LogDate& today);

std::vector<std::string> read_lines(const std::filesystem::path& path);
std::string join_lines(const std::vector<std::string>& lines);

// Test hook: exits immediately when PRIVLOG_TEST_CRASH_POINT equals `point`.
void crash_point(const char* point);

/// Runs `body`, printing `error: <Code>: <message>` on failure and returning
/// the documented exit status.
int guarded(const std::function<int()>& body);

}  // namespace privlog::cli
