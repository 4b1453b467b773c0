#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "privlog/error.hpp"

namespace privlog {

/// Ordered `key=value` document, one pair per line. Used for every on-disk
/// artifact (state, identity, grants, offers, window keys, config).
class KvDocument {
 public:
  // Blank lines and lines starting with '#' are ignored. A line without
  // '=' or a duplicate key throws `on_error`.
  static KvDocument parse(std::string_view text, ErrorCode on_error = ErrorCode::CorruptState);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  // Throws `on_error` (given at parse time) when absent.
  const std::string& get(const std::string& key) const;
  std::string get_or(const std::string& key, std::string fallback) const;
  void set(const std::string& key, std::string value);
  void erase(const std::string& key) { values_.erase(key); }

  const std::map<std::string, std::string>& entries() const { return values_; }
  bool empty() const { return values_.empty(); }

  // Keys are written in insertion/parse order.
  std::string serialize() const;

 private:
  std::map<std::string, std::string> values_;
  std::vector<std::string> order_;
  ErrorCode on_error_ = ErrorCode::CorruptState;
};

std::string read_file(const std::filesystem::path& path);

// Writes to `path.tmp`, fsyncs, renames over `path`, then fsyncs the dir.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace privlog
