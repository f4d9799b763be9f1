// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <nlohmann/json_fwd.hpp>

#include "revopt/corpus.hpp"
#include "revopt/generator.hpp"
#include "revopt/judge.hpp"
#include "revopt/prompt.hpp"

// JSON mappings used by every on-disk format (reviews, run records, judged
// and generated response files).
namespace revopt {

void to_json(nlohmann::json& j, const Review& r);
void from_json(const nlohmann::json& j, Review& r);

void to_json(nlohmann::json& j, const PromptTemplate& t);
void from_json(const nlohmann::json& j, PromptTemplate& t);

void to_json(nlohmann::json& j, const CategoryScore& s);
void from_json(const nlohmann::json& j, CategoryScore& s);

/// Scores are written as an array in category order.
void to_json(nlohmann::json& j, const Feedback& f);
void from_json(const nlohmann::json& j, Feedback& f);

void to_json(nlohmann::json& j, const Chunk& c);
void from_json(const nlohmann::json& j, Chunk& c);

/// Context is stored as its hits plus the rendered string.
void to_json(nlohmann::json& j, const RetrievedContext& c);
void from_json(const nlohmann::json& j, RetrievedContext& c);

void to_json(nlohmann::json& j, const GeneratedResponse& g);
void from_json(const nlohmann::json& j, GeneratedResponse& g);

}  // namespace revopt
