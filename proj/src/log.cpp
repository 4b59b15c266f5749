#include "oger/log.hpp"

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "oger/error.hpp"

namespace oger::log {

namespace {

std::optional<Level>& current() {
  static std::optional<Level> level;
  return level;
}

void emit(const char* tag, std::string_view message) {
  std::cerr << "[oger " << tag << "] " << message << '\n';
}

}  // namespace

Level parse_level(std::string_view name) {
  if (name == "off" || name.empty()) return Level::kOff;
  if (name == "info") return Level::kInfo;
  if (name == "debug") return Level::kDebug;
  throw ConfigError("OGER_LOG must be off, info or debug, got '" + std::string(name) + "'");
}

Level level() {
  auto& lvl = current();
  if (!lvl) {
    const char* env = std::getenv("OGER_LOG");
    lvl = env ? parse_level(env) : Level::kOff;
  }
  return *lvl;
}

void set_level(Level l) { current() = l; }

void info(std::string_view message) {
  if (level() >= Level::kInfo) emit("info", message);
}

void debug(std::string_view message) {
  if (level() >= Level::kDebug) emit("debug", message);
}

}  // namespace oger::log
