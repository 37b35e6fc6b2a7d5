#pragma once

#include <spdlog/spdlog.h>

namespace gtforge {

/// Applies the level named by GTFORGE_LOG (trace, debug, info, warn, error, off).
/// Defaults to warn when unset or unrecognised.
void init_logging();

}  // namespace gtforge
