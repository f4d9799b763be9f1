// SPDX-License-Identifier: Apache-2.0
#include "revopt/scripted_backend.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "revopt/text.hpp"

namespace revopt {

ScriptedBackend::ScriptedBackend(std::vector<ScriptRule> rules) {
  std::stable_sort(rules.begin(), rules.end(),
                   [](const ScriptRule& a, const ScriptRule& b) { return a.order < b.order; });
  rules_.reserve(rules.size());
  for (auto& r : rules) {
    Compiled c{std::move(r), std::nullopt, 0};
    if (c.rule.kind == ScriptRule::Kind::regex) {
      try {
        c.re.emplace(c.rule.pattern, std::regex::ECMAScript);
      } catch (const std::regex_error& e) {
        throw FormatError(fmt::format("script rule {}: bad regex '{}': {}", c.rule.order,
                                      c.rule.pattern, e.what()));
      }
    }
    rules_.push_back(std::move(c));
  }
}

std::vector<ScriptRule> ScriptedBackend::parse_rules(const std::string& jsonl) {
  std::vector<ScriptRule> rules;
  std::istringstream in(jsonl);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::parse_error& e) {
      throw FormatError(fmt::format("script line {}: {}", line_no, e.what()));
    }
    if (!j.is_object()) throw FormatError(fmt::format("script line {}: expected object", line_no));
    ScriptRule rule;
    rule.order = j.value("order", line_no);
    if (j.contains("contains")) {
      rule.kind = ScriptRule::Kind::substring;
      const auto& c = j.at("contains");
      if (c.is_array()) {
        rule.substrings = c.get<std::vector<std::string>>();
      } else {
        rule.substrings.push_back(c.get<std::string>());
      }
      if (rule.substrings.empty()) {
        throw FormatError(fmt::format("script line {}: contains needs a substring", line_no));
      }
    } else if (j.contains("regex")) {
      rule.kind = ScriptRule::Kind::regex;
      rule.pattern = j.at("regex").get<std::string>();
    } else if (j.value("catch_all", false)) {
      rule.kind = ScriptRule::Kind::catch_all;
    } else {
      throw FormatError(fmt::format("script line {}: rule needs contains, regex or catch_all",
                                    line_no));
    }
    rule.echo = j.value("echo", false);
    if (!rule.echo) {
      if (!j.contains("response")) {
        throw FormatError(fmt::format("script line {}: rule needs response or echo", line_no));
      }
      rule.response = j.at("response").get<std::string>();
    }
    if (j.contains("times")) rule.times = j.at("times").get<int>();
    rules.push_back(std::move(rule));
  }
  return rules;
}

std::shared_ptr<ScriptedBackend> ScriptedBackend::from_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError(fmt::format("script file not found: {}", path.string()));
  std::ostringstream buf;
  buf << in.rdbuf();
  return std::make_shared<ScriptedBackend>(parse_rules(buf.str()));
}

CompletionResult ScriptedBackend::complete(const CompletionRequest& request) {
  std::lock_guard lock(mutex_);
  const std::string& text = request.user_text;
  for (auto& c : rules_) {
    if (c.rule.times && c.fired >= *c.rule.times) continue;
    std::string reply;
    bool matched = false;
    switch (c.rule.kind) {
      case ScriptRule::Kind::catch_all:
        matched = true;
        reply = c.rule.response;
        break;
      case ScriptRule::Kind::substring:
        matched = std::all_of(c.rule.substrings.begin(), c.rule.substrings.end(),
                              [&](const std::string& p) { return text.find(p) != std::string::npos; });
        reply = c.rule.response;
        break;
      case ScriptRule::Kind::regex: {
        std::smatch m;
        matched = std::regex_search(text, m, *c.re);
        if (matched && !c.rule.echo) reply = m.format(c.rule.response);
        break;
      }
    }
    if (!matched) continue;
    ++c.fired;
    CompletionResult result;
    result.text = c.rule.echo ? text : reply;
    result.input_tokens = static_cast<std::int64_t>(word_count(text));
    result.output_tokens = static_cast<std::int64_t>(word_count(result.text));
    result.backend_id = id();
    return result;
  }
  const std::string head = text.substr(0, std::min<std::size_t>(text.size(), 80));
  throw NoRuleError(fmt::format("no script rule matches request \"{}{}\"", head,
                                text.size() > head.size() ? "..." : ""));
}

int ScriptedBackend::fired(std::size_t index) const {
  std::lock_guard lock(mutex_);
  return rules_.at(index).fired;
}

}  // namespace revopt
