// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>

#include <spdlog/logger.h>

namespace revopt {

/// Library-wide logger ("revopt"). Warnings that are part of an operation's
/// contract (empty dataset, skipped files, overlong justifications) go here.
std::shared_ptr<spdlog::logger> logger();

}  // namespace revopt
