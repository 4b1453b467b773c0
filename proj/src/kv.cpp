#include "privlog/kv.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

namespace privlog {

KvDocument KvDocument::parse(std::string_view text, ErrorCode on_error) {
  KvDocument doc;
  doc.on_error_ = on_error;
  std::size_t line_no = 0;
  while (!text.empty()) {
    auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string_view::npos || eq == 0) {
      throw Error(on_error, "line " + std::to_string(line_no) + ": expected key=value");
    }
    std::string key(line.substr(0, eq));
    if (doc.values_.count(key)) {
      throw Error(on_error, "line " + std::to_string(line_no) + ": duplicate key " + key);
    }
    doc.values_.emplace(key, std::string(line.substr(eq + 1)));
    doc.order_.push_back(std::move(key));
  }
  return doc;
}

const std::string& KvDocument::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw Error(on_error_, "missing field " + key);
  return it->second;
}

std::string KvDocument::get_or(const std::string& key, std::string fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? std::move(fallback) : it->second;
}

void KvDocument::set(const std::string& key, std::string value) {
  if (!values_.count(key)) order_.push_back(key);
  values_[key] = std::move(value);
}

std::string KvDocument::serialize() const {
  std::string out;
  for (const auto& key : order_) {
    auto it = values_.find(key);
    if (it == values_.end()) continue;
    out += key;
    out += '=';
    out += it->second;
    out += '\n';
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

[[noreturn]] void io_fail(const std::string& what) {
  throw Error(ErrorCode::Io, what + ": " + std::strerror(errno));
}

}  // namespace

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  const auto tmp = path.string() + ".tmp";
  int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0600);
  if (fd < 0) io_fail("open " + tmp);
  std::size_t off = 0;
  while (off < contents.size()) {
    ssize_t n = ::write(fd, contents.data() + off, contents.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      ::close(fd);
      io_fail("write " + tmp);
    }
    off += static_cast<std::size_t>(n);
  }
  if (::fsync(fd) != 0) {
    ::close(fd);
    io_fail("fsync " + tmp);
  }
  ::close(fd);
  if (std::rename(tmp.c_str(), path.c_str()) != 0) io_fail("rename " + tmp);
  auto dir = path.parent_path();
  int dfd = ::open(dir.empty() ? "." : dir.c_str(), O_RDONLY | O_DIRECTORY);
  if (dfd >= 0) {
    ::fsync(dfd);
    ::close(dfd);
  }
}

}  // namespace privlog
