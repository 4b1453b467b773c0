#include "cli_common.hpp"

#include <cstdlib>
#include <iostream>
#include <sstream>

#include "privlog/error.hpp"

namespace privlog::cli {

Config Config::load(const std::string& path) {
  Config c;
  if (!path.empty()) c.doc_ = KvDocument::parse(read_file(path), ErrorCode::InvalidArgument);
  return c;
}

std::optional<std::string> Config::get(const std::string& key) const {
  if (!doc_ || !doc_->has(key)) return std::nullopt;
  return doc_->get(key);
}

std::optional<std::string> resolve(const std::string& flag, const char* env_var,
                                   const Config& cfg, const std::string& key) {
  if (!flag.empty()) return flag;
  if (env_var) {
    if (const char* v = std::getenv(env_var); v && *v) return std::string(v);
  }
  auto v = cfg.get(key);
  if (v && !v->empty()) return v;
  return std::nullopt;
}

std::string require(const std::string& flag, const char* env_var, const Config& cfg,
                    const std::string& key, const std::string& flag_name) {
  auto v = resolve(flag, env_var, cfg, key);
  if (!v) {
    throw Error(ErrorCode::InvalidArgument,
                flag_name + " is required (or `" + key + "` in the config file)");
  }
  return *v;
}

LogDate parse_date_arg(const std::string& text, const std::string& flag_name) {
  auto d = LogDate::parse_iso(text);
  if (!d || text.size() != 10) {
    throw Error(ErrorCode::InvalidArgument, flag_name + ": expected YYYY-MM-DD, got '" + text + "'");
  }
  return *d;
}

LogDate today_or(const std::string& flag) {
  return flag.empty() ? LogDate::today_utc() : parse_date_arg(flag, "--today");
}

int assumed_year_or(const std::string& flag, const Config& cfg, const LogDate& today) {
  auto v = resolve(flag, nullptr, cfg, "assumed_year");
  if (!v) return today.year();
  try {
    std::size_t used = 0;
    int y = std::stoi(*v, &used);
    if (used == v->size() && y >= 1970 && y <= 9999) return y;
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::InvalidArgument, "assumed year must be in [1970, 9999]: " + *v);
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::vector<std::string> lines;
  std::istringstream in(read_file(path));
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

std::string join_lines(const std::vector<std::string>& lines) {
  std::string out;
  for (const auto& l : lines) {
    out += l;
    out += '\n';
  }
  return out;
}

void crash_point(const char* point) {
  const char* want = std::getenv("PRIVLOG_TEST_CRASH_POINT");
  if (want && std::string_view(want) == point) std::_Exit(86);
}

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace privlog::cli
