// SPDX-License-Identifier: Apache-2.0
#include "revopt/log.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

namespace revopt {

std::shared_ptr<spdlog::logger> logger() {
  static std::shared_ptr<spdlog::logger> instance = [] {
    if (auto existing = spdlog::get("revopt")) return existing;
    auto created = spdlog::stderr_color_mt("revopt");
    created->set_level(spdlog::level::info);
    return created;
  }();
  return instance;
}

}  // namespace revopt
