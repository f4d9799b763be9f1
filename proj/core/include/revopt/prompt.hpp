// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "revopt/error.hpp"

namespace revopt {

inline constexpr std::string_view kContextSlot = "{context}";
inline constexpr std::string_view kQuestionSlot = "{question}";

/// Raised when a template is missing a required placeholder or repeats one.
class TemplateError : public Error {
 public:
  TemplateError(const std::string& what, std::string placeholder)
      : Error(what), placeholder_(std::move(placeholder)) {}
  const std::string& placeholder() const { return placeholder_; }

 private:
  std::string placeholder_;
};

/// Versioned generation prompt. `text` carries `{context}` and `{question}`
/// exactly once each.
struct PromptTemplate {
  std::string id;
  std::string text;
  int iteration = 0;
  std::optional<std::string> parent_id;

  bool operator==(const PromptTemplate&) const = default;
};

std::size_t count_occurrences(std::string_view text, std::string_view needle);

/// Throws TemplateError naming the first missing or duplicated placeholder.
void validate_template(std::string_view text);
bool is_valid_template(std::string_view text);

/// Replaces each slot (e.g. `{name}`) with its value in one pass. Substituted values
/// are never rescanned, and brace sequences that are not listed slots are left
/// untouched.
std::string substitute(std::string_view text,
                       const std::vector<std::pair<std::string_view, std::string_view>>& slots);

/// Validates `tmpl` then fills `{context}` and `{question}`.
std::string render_prompt(const PromptTemplate& tmpl, std::string_view context,
                          std::string_view question);

/// Reads a template file; the id defaults to the file stem.
PromptTemplate load_template(const std::filesystem::path& path);

}  // namespace revopt
