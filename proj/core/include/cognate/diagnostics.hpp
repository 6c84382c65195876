#pragma once

#include <mutex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cognate {

// Malformed or inconsistent input data (bad TSV, unknown language, shape
// mismatch in a checkpoint). Messages carry file/row context.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class LogLevel { debug = 0, info = 1, warn = 2, error = 3, off = 4 };

void set_log_level(LogLevel level);
LogLevel log_level();
LogLevel parse_log_level(std::string_view name);

// Writes "[level] message" to stderr when level >= the global threshold.
void log(LogLevel level, std::string_view message);

// Thread-safe collector for recoverable problems (unknown IPA segments,
// truncated concepts). Every record is also forwarded to log() at warn level.
class Warnings {
 public:
  void add(std::string message);
  std::vector<std::string> snapshot() const;
  std::size_t size() const;
  void clear();

 private:
  mutable std::mutex mutex_;
  std::vector<std::string> messages_;
};

// Process-wide sink used when the caller does not pass its own.
Warnings& global_warnings();

}  // namespace cognate
