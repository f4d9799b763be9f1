// SPDX-License-Identifier: Apache-2.0
#include "revopt/prompt.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "revopt/prompts.hpp"

namespace revopt {

std::size_t count_occurrences(std::string_view text, std::string_view needle) {
  if (needle.empty()) return 0;
  std::size_t count = 0;
  for (auto pos = text.find(needle); pos != std::string_view::npos;
       pos = text.find(needle, pos + needle.size())) {
    ++count;
  }
  return count;
}

void validate_template(std::string_view text) {
  for (auto slot : {kContextSlot, kQuestionSlot}) {
    const auto n = count_occurrences(text, slot);
    if (n == 0) {
      throw TemplateError(fmt::format("template is missing placeholder {}", slot),
                          std::string(slot));
    }
    if (n > 1) {
      throw TemplateError(fmt::format("template repeats placeholder {} ({} times)", slot, n),
                          std::string(slot));
    }
  }
}

bool is_valid_template(std::string_view text) {
  return count_occurrences(text, kContextSlot) == 1 && count_occurrences(text, kQuestionSlot) == 1;
}

std::string substitute(std::string_view text,
                       const std::vector<std::pair<std::string_view, std::string_view>>& slots) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    bool replaced = false;
    for (const auto& [slot, value] : slots) {
      if (!slot.empty() && text.substr(i, slot.size()) == slot) {
        out += value;
        i += slot.size();
        replaced = true;
        break;
      }
    }
    if (!replaced) out += text[i++];
  }
  return out;
}

std::string render_prompt(const PromptTemplate& tmpl, std::string_view context,
                          std::string_view question) {
  validate_template(tmpl.text);
  return substitute(tmpl.text, {{kContextSlot, context}, {kQuestionSlot, question}});
}

PromptTemplate load_template(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError(fmt::format("prompt file not found: {}", path.string()));
  std::ostringstream buf;
  buf << in.rdbuf();
  PromptTemplate t{path.stem().string(), buf.str(), 0, std::nullopt};
  validate_template(t.text);
  return t;
}

namespace prompts {

std::string apply_app_identity(std::string text, const AppIdentity& app) {
  return substitute(text, {{"<OUR APP FULL NAME>", app.full_name}, {"<OUR APP NAME>", app.name}});
}

std::string load(const std::string& name, const AppIdentity& app,
                 const std::optional<std::filesystem::path>& dir) {
  if (dir) {
    const auto file = *dir / (name + ".txt");
    if (std::filesystem::exists(file)) {
      std::ifstream in(file, std::ios::binary);
      std::ostringstream buf;
      buf << in.rdbuf();
      return apply_app_identity(buf.str(), app);
    }
  }
  const auto& table = builtin();
  const auto it = table.find(name);
  if (it == table.end()) throw NotFoundError(fmt::format("unknown prompt '{}'", name));
  return apply_app_identity(it->second, app);
}

}  // namespace prompts
}  // namespace revopt
