#pragma once

#include <string_view>

namespace oger::log {

enum class Level { kOff, kInfo, kDebug };

/// Current level; initialized from OGER_LOG (off | info | debug), default off.
Level level();
void set_level(Level level);
/// Throws ConfigError for anything but off, info or debug.
Level parse_level(std::string_view name);

void info(std::string_view message);
void debug(std::string_view message);

}  // namespace oger::log
