// SPDX-License-Identifier: Apache-2.0
#include <random>

#include <benchmark/benchmark.h>

#include "revopt/embedder.hpp"
#include "revopt/rag.hpp"

namespace {

std::string text_of(std::size_t tokens, std::uint64_t seed) {
  static const std::vector<std::string> words{"sync", "bank", "budget", "crash", "export", "premium",
                                              "rollover", "category", "reconnect", "password"};
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, words.size() - 1);
  std::string out;
  for (std::size_t i = 0; i < tokens; ++i) out += words[pick(rng)] + (i % 12 == 11 ? ". " : " ");
  return out;
}

void BM_Segment(benchmark::State& state) {
  const revopt::Document doc{"d", "d.txt", text_of(static_cast<std::size_t>(state.range(0)), 1)};
  for (auto _ : state) benchmark::DoNotOptimize(revopt::segment(doc));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Segment)->Arg(3000)->Arg(100000);

void BM_Retrieve(benchmark::State& state) {
  std::vector<revopt::Chunk> chunks;
  for (std::int64_t i = 0; i < state.range(0); ++i) {
    const auto text = text_of(200, static_cast<std::uint64_t>(i) + 10);
    chunks.push_back({"doc" + std::to_string(i), "doc.md", 0, text, 200});
  }
  revopt::HashingEmbedder embedder;
  const auto index = revopt::build_index(chunks, embedder);
  for (auto _ : state) {
    benchmark::DoNotOptimize(revopt::retrieve(index, embedder, "how do I reconnect my bank after sync fails", 4));
  }
}
BENCHMARK(BM_Retrieve)->Arg(30)->Arg(1000);

}  // namespace
