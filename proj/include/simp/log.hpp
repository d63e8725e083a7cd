#pragma once

#include <spdlog/spdlog.h>

namespace simp {

/// Routes spdlog's default logger to stderr. Verbosity comes from SIMP_LOG
/// (trace, debug, info, warn, error, off); unset means info.
void init_logging();

}  // namespace simp
