// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

namespace revopt::prompts {

/// Shipped prompt texts keyed by file stem: base, human_optimized,
/// llm_optimized, prompt_optimization, judge_accuracy, judge_relevancy,
/// judge_app_specificity, judge_grammar.
const std::map<std::string, std::string>& builtin();

/// Application identity substituted for the `<OUR APP NAME>` and
/// `<OUR APP FULL NAME>` markers in shipped prompts.
struct AppIdentity {
  std::string name = "<OUR APP NAME>";
  std::string full_name = "<OUR APP FULL NAME>";
};

std::string apply_app_identity(std::string text, const AppIdentity& app);

/// Prompt `name` from `dir/<name>.txt` when `dir` is given and the file
/// exists, otherwise the built-in copy; app markers substituted.
std::string load(const std::string& name, const AppIdentity& app,
                 const std::optional<std::filesystem::path>& dir = std::nullopt);

}  // namespace revopt::prompts
