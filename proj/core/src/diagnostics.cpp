#include "cognate/diagnostics.hpp"

#include <atomic>
#include <iostream>

namespace cognate {

namespace {
std::atomic<int> g_level{static_cast<int>(LogLevel::warn)};
std::mutex g_log_mutex;

const char* level_name(LogLevel level) {
  switch (level) {
    case LogLevel::debug: return "debug";
    case LogLevel::info: return "info";
    case LogLevel::warn: return "warn";
    case LogLevel::error: return "error";
    case LogLevel::off: return "off";
  }
  return "?";
}
}  // namespace

void set_log_level(LogLevel level) { g_level = static_cast<int>(level); }

LogLevel log_level() { return static_cast<LogLevel>(g_level.load()); }

LogLevel parse_log_level(std::string_view name) {
  if (name == "debug") return LogLevel::debug;
  if (name == "info") return LogLevel::info;
  if (name == "warn" || name == "warning") return LogLevel::warn;
  if (name == "error") return LogLevel::error;
  if (name == "off") return LogLevel::off;
  throw std::invalid_argument("unknown log level: " + std::string(name));
}

void log(LogLevel level, std::string_view message) {
  if (static_cast<int>(level) < g_level.load() || level == LogLevel::off) return;
  std::lock_guard lock(g_log_mutex);
  std::cerr << '[' << level_name(level) << "] " << message << '\n';
}

void Warnings::add(std::string message) {
  log(LogLevel::warn, message);
  std::lock_guard lock(mutex_);
  messages_.push_back(std::move(message));
}

std::vector<std::string> Warnings::snapshot() const {
  std::lock_guard lock(mutex_);
  return messages_;
}

std::size_t Warnings::size() const {
  std::lock_guard lock(mutex_);
  return messages_.size();
}

void Warnings::clear() {
  std::lock_guard lock(mutex_);
  messages_.clear();
}

Warnings& global_warnings() {
  static Warnings instance;
  return instance;
}

}  // namespace cognate
