// SPDX-License-Identifier: Apache-2.0
#include "revopt/serialize.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace revopt {

using nlohmann::json;

void to_json(json& j, const Review& r) {
  j = json{{"id", r.id}, {"text", r.text}};
  if (r.expert_response) j["expert_response"] = *r.expert_response;
  if (r.split != Split::unassigned) j["split"] = std::string(to_string(r.split));
  if (r.source) j["source"] = *r.source;
}

void from_json(const json& j, Review& r) {
  r.id = j.at("id").get<std::string>();
  r.text = j.at("text").get<std::string>();
  r.expert_response.reset();
  if (auto it = j.find("expert_response"); it != j.end() && !it->is_null()) {
    r.expert_response = it->get<std::string>();
  }
  r.split = Split::unassigned;
  if (auto it = j.find("split"); it != j.end() && !it->is_null()) {
    const auto token = it->get<std::string>();
    const auto split = parse_split(token);
    if (!split) throw FormatError(fmt::format("unknown split '{}'", token));
    r.split = *split;
  }
  r.source.reset();
  if (auto it = j.find("source"); it != j.end() && !it->is_null()) r.source = it->get<std::string>();
}

void to_json(json& j, const PromptTemplate& t) {
  j = json{{"id", t.id}, {"text", t.text}, {"iteration", t.iteration}};
  j["parent_id"] = t.parent_id ? json(*t.parent_id) : json(nullptr);
}

void from_json(const json& j, PromptTemplate& t) {
  t.id = j.at("id").get<std::string>();
  t.text = j.at("text").get<std::string>();
  t.iteration = j.value("iteration", 0);
  t.parent_id.reset();
  if (auto it = j.find("parent_id"); it != j.end() && !it->is_null()) {
    t.parent_id = it->get<std::string>();
  }
}

void to_json(json& j, const CategoryScore& s) {
  j = json{{"category", std::string(to_string(s.category))},
           {"raw", s.raw},
           {"normalized", s.normalized},
           {"justification", s.justification}};
}

void from_json(const json& j, CategoryScore& s) {
  const auto token = j.at("category").get<std::string>();
  const auto c = parse_category(token);
  if (!c) throw FormatError(fmt::format("unknown category '{}'", token));
  s.category = *c;
  s.raw = j.at("raw").get<double>();
  s.normalized = j.at("normalized").get<double>();
  s.justification = j.value("justification", std::string());
}

void to_json(json& j, const Feedback& f) {
  j = json{{"review_id", f.review_id},
           {"response_text", f.response_text},
           {"scores", f.scores},
           {"suggestions", f.suggestions},
           {"overall", f.overall}};
}

void from_json(const json& j, Feedback& f) {
  f.review_id = j.at("review_id").get<std::string>();
  f.response_text = j.value("response_text", std::string());
  const auto& scores = j.at("scores");
  std::array<bool, 4> seen{};
  for (const auto& item : scores) {
    auto s = item.get<CategoryScore>();
    if (seen[index_of(s.category)]) {
      throw FormatError(fmt::format("feedback {}: duplicate {} score", f.review_id,
                                    to_string(s.category)));
    }
    seen[index_of(s.category)] = true;
    f.scores[index_of(s.category)] = std::move(s);
  }
  for (auto c : kAllCategories) {
    if (!seen[index_of(c)]) {
      throw FormatError(fmt::format("feedback {}: missing {} score", f.review_id, to_string(c)));
    }
  }
  f.suggestions = j.value("suggestions", std::string());
  f.overall = j.at("overall").get<double>();
}

void to_json(json& j, const Chunk& c) {
  j = json{{"doc_id", c.doc_id},
           {"source_path", c.source_path},
           {"ordinal", c.ordinal},
           {"text", c.text},
           {"token_count", c.token_count}};
}

void from_json(const json& j, Chunk& c) {
  c.doc_id = j.at("doc_id").get<std::string>();
  c.source_path = j.value("source_path", std::string());
  c.ordinal = j.at("ordinal").get<std::size_t>();
  c.text = j.at("text").get<std::string>();
  c.token_count = j.value("token_count", std::size_t{0});
}

void to_json(json& j, const RetrievedContext& c) {
  json hits = json::array();
  for (const auto& h : c.hits) {
    hits.push_back({{"chunk", h.chunk},
                    {"fused_score", h.fused_score},
                    {"cosine", h.cosine},
                    {"bm25", h.bm25},
                    {"rank_vector", h.rank_vector},
                    {"rank_keyword", h.rank_keyword}});
  }
  j = json{{"hits", std::move(hits)}, {"rendered", c.rendered}};
}

void from_json(const json& j, RetrievedContext& c) {
  c.hits.clear();
  for (const auto& h : j.at("hits")) {
    RetrievalHit hit;
    hit.chunk = h.at("chunk").get<Chunk>();
    hit.fused_score = h.at("fused_score").get<double>();
    hit.cosine = h.value("cosine", 0.0);
    hit.bm25 = h.value("bm25", 0.0);
    hit.rank_vector = h.value("rank_vector", std::size_t{0});
    hit.rank_keyword = h.value("rank_keyword", std::size_t{0});
    c.hits.push_back(std::move(hit));
  }
  c.rendered = j.value("rendered", std::string());
}

void to_json(json& j, const GeneratedResponse& g) {
  j = json{{"review_id", g.review_id},
           {"prompt_id", g.prompt_id},
           {"response_id", g.response_id()},
           {"text", g.text},
           {"context_used", g.context_used}};
}

void from_json(const json& j, GeneratedResponse& g) {
  g.review_id = j.at("review_id").get<std::string>();
  g.prompt_id = j.at("prompt_id").get<std::string>();
  g.text = j.at("text").get<std::string>();
  if (auto it = j.find("context_used"); it != j.end()) g.context_used = it->get<RetrievedContext>();
}

}  // namespace revopt
