// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include "revopt/llm.hpp"

namespace revopt {

/// One rule of a scripted backend. Rules are tried in ascending `order`; the
/// first whose matcher accepts the request's user text produces the reply.
struct ScriptRule {
  enum class Kind { substring, regex, catch_all };

  Kind kind = Kind::catch_all;
  /// Regex source for regex rules.
  std::string pattern;
  /// Substring rules match when every entry occurs.
  std::vector<std::string> substrings;
  /// Canned reply. For regex rules `$1`, `$&` etc. expand to match groups.
  std::string response;
  /// Reply with the request's user text instead of `response`.
  bool echo = false;
  int order = 0;
  /// Number of times this rule may fire; unset means unlimited.
  std::optional<int> times;
};

/// Raised when no rule matches a request.
class NoRuleError : public BackendError {
 public:
  using BackendError::BackendError;
};

/// Deterministic completion backend driven by a rule script.
///
/// Without `times`-limited rules the backend is a pure function of
/// (request, script). Limited rules make it stateful; use them only with
/// sequential callers.
class ScriptedBackend final : public CompletionBackend {
 public:
  explicit ScriptedBackend(std::vector<ScriptRule> rules);

  /// Reads line-delimited JSON rules. Each line has `order` and one of
  /// `contains` (a string or a list that must all occur), `regex` or `catch_all: true`, plus `response` or `echo: true`
  /// and optionally `times`. Blank lines and lines starting with `#` are skipped.
  static std::shared_ptr<ScriptedBackend> from_file(const std::filesystem::path& path);
  static std::vector<ScriptRule> parse_rules(const std::string& jsonl);

  std::string id() const override { return "scripted"; }
  CompletionResult complete(const CompletionRequest& request) override;

  /// How many times rule `index` (in sorted order) has fired.
  int fired(std::size_t index) const;

 private:
  struct Compiled {
    ScriptRule rule;
    std::optional<std::regex> re;
    int fired = 0;
  };
  std::vector<Compiled> rules_;
  mutable std::mutex mutex_;
};

}  // namespace revopt
