#include "gtforge/log.hpp"

#include <cstdlib>
#include <string>

#include <spdlog/sinks/stdout_color_sinks.h>

namespace gtforge {

void init_logging() {
  static bool done = false;
  if (!done) {
    // Diagnostics go to stderr so stdout stays clean for piped output.
    auto logger = spdlog::stderr_color_mt("gtforge");
    spdlog::set_default_logger(logger);
    spdlog::set_pattern("[%H:%M:%S.%e] [%^%l%$] %v");
    done = true;
  }
  const char* env = std::getenv("GTFORGE_LOG");
  spdlog::level::level_enum level = spdlog::level::warn;
  if (env != nullptr) {
    const auto parsed = spdlog::level::from_str(env);
    // from_str maps unknown names to off; only honour it when asked for.
    if (parsed != spdlog::level::off || std::string(env) == "off") level = parsed;
  }
  spdlog::set_level(level);
}

}  // namespace gtforge
