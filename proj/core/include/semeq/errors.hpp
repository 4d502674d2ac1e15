#pragma once

#include <stdexcept>
#include <string>

namespace semeq {

// I/O failure (missing/truncated/malformed file); carries the offending path.
// The CLI maps this to exit code 3.
class IoError : public std::runtime_error {
 public:
  IoError(std::string path, const std::string& what)
      : std::runtime_error(what + " [" + path + "]"), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

// Invalid configuration; carries the offending key path. CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& what)
      : std::runtime_error(what + " [" + key + "]"), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

}  // namespace semeq
