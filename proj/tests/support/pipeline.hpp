// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <string>

#include "revopt/corpus_store.hpp"
#include "revopt/embedder.hpp"
#include "revopt/optimizer.hpp"
#include "revopt/rag.hpp"
#include "revopt/scripted_backend.hpp"
#include "test_support.hpp"

namespace revopt::testing {

inline const prompts::AppIdentity kApp{"Ledgerly", "Ledgerly Personal Finance"};

/// Scripted gateway plus an index of the fixture knowledge base.
struct Pipeline {
  std::unique_ptr<Gateway> gateway;
  VectorIndex index;

  explicit Pipeline(const std::string& script, SegmentOptions segment = {60, 0}) {
    const std::filesystem::path path =
        script.find('/') == std::string::npos ? fixture("scripts/" + script) : std::filesystem::path(script);
    gateway = std::make_unique<Gateway>(ScriptedBackend::from_file(path),
                                        std::make_shared<HashingEmbedder>());
    gateway->set_sleeper([](auto) {});
    std::vector<Chunk> chunks;
    for (const auto& doc : ingest_documents(fixture("knowledge")).documents) {
      auto c = segment_doc(doc, segment);
      chunks.insert(chunks.end(), c.begin(), c.end());
    }
    HashingEmbedder embedder;
    index = build_index(chunks, embedder);
  }

  static std::vector<Chunk> segment_doc(const Document& doc, SegmentOptions s) { return segment(doc, s); }

  Optimizer optimizer(OptimizerConfig config) const {
    GenerationConfig gen;
    return Optimizer(*gateway, index, JudgeConfig::with_default_prompts(kApp), gen,
                     PromptGenConfig::with_default_prompt(kApp), config);
  }
};

inline PromptTemplate base_template() {
  return PromptTemplate{"base", prompts::load("base", kApp), 0, std::nullopt};
}

inline ReviewSet train_reviews() { return load_reviews(fixture("reviews.jsonl")).subset(Split::train); }

}  // namespace revopt::testing
