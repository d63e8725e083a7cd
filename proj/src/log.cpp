#include "simp/log.hpp"

#include <cstdlib>
#include <string>

#include <spdlog/sinks/stdout_sinks.h>

namespace simp {

void init_logging() {
  static bool done = false;
  if (done) return;
  done = true;
  auto logger = spdlog::stderr_logger_mt("simp");
  logger->set_pattern("[%H:%M:%S.%e] [%^%l%$] %v");
  spdlog::set_default_logger(logger);
  spdlog::level::level_enum level = spdlog::level::info;
  if (const char* env = std::getenv("SIMP_LOG")) {
    level = spdlog::level::from_str(env);
    // from_str maps unknown names to off; keep the default for typos.
    if (level == spdlog::level::off && std::string(env) != "off") level = spdlog::level::info;
  }
  spdlog::set_level(level);
}

}  // namespace simp
